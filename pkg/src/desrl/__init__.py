"""desrl: discrete-event-system models as reinforcement-learning
environments.

Model a plant as small deterministic FSMs with controllable and
uncontrollable events, compose them with restriction automata into a
closed loop, convert that machine into an MDP environment, and train it
with tabular Q-learning or a small deep-Q approximator.
"""

from .automata import Event, Fsm, ModelError, compose, compose_all
from .bundles import (ExampleBundle, academic_bundle, all_bundles,
                      machines_bundle, transmitters_bundle)
from .deepq import (ApproxNet, DeepRun, NetQView, ReplayBuffer, dump_params,
                    load_params, net_qtable, sync_target, td_target,
                    train_dqn, train_step)
from .environment import (ContractViolation, Environment, EpisodeTrace,
                          ProbMap, RewardMap, StepResult, TraceRecorder,
                          episode_return)
from .model_io import (ModelDocument, ModelFormatError, ModelWarning,
                       TrainingConfig, export_dot, export_native,
                       export_qtable_csv, merge_configs, parse_config,
                       parse_native, parse_supremica_xml)
from .policy import (QTable, controllable_epsilon_greedy, epsilon_greedy,
                     greedy_controllable)
from .tabular import TabularRun, q_update, train_q, value_iteration_oracle

__version__ = "0.1.0"

__all__ = [
    "ApproxNet", "ContractViolation", "DeepRun", "Environment", "EpisodeTrace",
    "Event", "ExampleBundle", "Fsm", "ModelDocument", "ModelError",
    "ModelFormatError", "ModelWarning", "NetQView", "ProbMap", "QTable",
    "ReplayBuffer", "RewardMap", "StepResult", "TabularRun", "TraceRecorder",
    "TrainingConfig", "academic_bundle", "all_bundles", "compose",
    "compose_all", "controllable_epsilon_greedy", "dump_params",
    "episode_return", "epsilon_greedy", "export_dot", "export_native",
    "export_qtable_csv", "greedy_controllable", "load_params",
    "machines_bundle", "merge_configs", "net_qtable", "parse_config",
    "parse_native", "parse_supremica_xml", "q_update", "sync_target",
    "td_target", "train_dqn", "train_q", "train_step",
    "transmitters_bundle", "value_iteration_oracle",
]
