"""hexrl: explanation-producing policies for binary classifiers.

Train any of five classifier families, then synthesize a policy that maps
an instance to the perturbation carrying it to the nearest point of the
model's decision boundary; that perturbation, ranked by magnitude, is the
explanation. Policies can be constrained to a decider's trusted features
and evaluated against a sampling-based baseline.
"""

from .baselines import ExplanationNotFound, GrowConfig, growing_spheres_explain
from .classifiers import (ClassifierModel, TrainControls, auc_score,
                          platt_calibrate, train_classifier)
from .dataset import (Dataset, SplitSpec, load_csv, save_csv, smote_oversample,
                      split, synth_boundary)
from .densenet import AdamState, DenseNet, Layer, adam_step
from .drl import (ActorCriticPolicy, ExperienceTuple, ReplayBuffer,
                  SelectiveInserter, TrainConfig, TrainingCurve,
                  check_degeneracy_implication, detect_buffer_degeneracy,
                  detect_instance_degeneracy, explain, load_policy,
                  make_degenerate_fixture, save_policy, synthesize_policy)
from .evaluation import (EvalReport, ScenarioConfig, dbd, explanation_ranking,
                         rolling_curve, run_scenario, summarize_reports, uep)
from .mdp import (DeciderProfile, RewardConfig, disagreement_score,
                  epsilon_shift, project, reward, transition)

__version__ = "0.1.0"
