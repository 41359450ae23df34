"""Tabular Q-learning over the environment, plus an exact value-iteration
solver used as an independent check on small all-controllable models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automata import Event, Fsm, ModelError
from .environment import Environment, TraceRecorder
from .model_io import TrainingConfig
from .policy import QTable, controllable_epsilon_greedy

DEFAULT_ALPHA = 0.1


@dataclass
class TabularRun:
    """Result of one training run: the learned table, raw (undiscounted)
    per-episode returns and the hyperparameters that produced them."""

    qtable: QTable
    returns: list[float]
    alpha: float
    gamma: float
    epsilon: float
    episodes: int
    horizon: int
    seed: int


def q_update(q: QTable, s: int, a: Event | str, r: float, s_next: int,
             enabled_next, alpha: float, gamma: float, terminal: bool) -> float:
    """One temporal-difference update of Q(s, a).

    The bootstrap term is the best Q-value among the events enabled at the
    successor, or zero when the successor is terminal (marked-terminal or
    deadlock).  A horizon cutoff is censoring, not termination, so callers
    must not set ``terminal`` for it.  Returns the stored new value.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1], got %g" % alpha)
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1], got %g" % gamma)
    enabled_next = list(enabled_next)
    maxterm = 0.0 if terminal or not enabled_next else q.max_value(s_next, enabled_next)
    old = q.value(s, a)
    new = old + alpha * (r + gamma * maxterm - old)
    q.set(s, a, new)
    return new


def train_q(env: Environment, config: TrainingConfig,
            recorder: TraceRecorder | None = None) -> TabularRun:
    """Q-learning (epsilon-greedy with uncontrollable triggering) for
    ``config.episodes`` episodes of at most ``config.horizon`` ticks.

    A tick on which no action is available (all enabled events were
    probability-specified uncontrollables and none triggered) consumes
    horizon budget but performs no transition and no update.  The returns
    list holds raw reward sums, one per episode.
    """
    alpha = config.alpha if config.alpha is not None else DEFAULT_ALPHA
    rng = np.random.default_rng(config.seed)
    q = QTable.from_model(env.model)
    returns: list[float] = []
    for episode in range(config.episodes):
        env.reset()
        total = 0.0
        for _ in range(config.horizon):
            s = env.current
            a_all, a_c, a_u = env.action_sets()
            if not a_all:
                break
            action = controllable_epsilon_greedy(s, q, config.epsilon, a_all, a_c, a_u,
                                                 env.probs, rng)
            if action is None:
                continue
            res = env.step(action)
            total += res.reward
            if recorder is not None:
                recorder.record(episode, env.step_count, res.info["state"],
                                action.name, res.reward, res.done)
            terminal = res.info["done_reason"] in ("marked", "deadlock")
            q_update(q, s, action, res.reward, res.observation,
                     env.model.enabled(res.observation), alpha, config.gamma, terminal)
            if res.done:
                break
        returns.append(total)
    return TabularRun(q, returns, alpha, config.gamma, config.epsilon,
                      config.episodes, config.horizon, config.seed)


def value_iteration_oracle(f: Fsm, rewards, gamma: float,
                           tol: float = 1e-10, max_sweeps: int = 10 ** 6) -> QTable:
    """Exact Q-values of an all-controllable deterministic machine by
    fixed-point iteration: Q(s, a) = r(a) + gamma * max Q(s', .), with a
    zero bootstrap at deadlock states.

    Independent of the learning path; used to cross-check ``train_q``.
    Raises when the machine has uncontrollable events (its dynamics would
    not be a pure control problem) or when iteration fails to converge.
    """
    uncontrollable = [e.name for e in f.alphabet if not e.controllable]
    if uncontrollable:
        raise ModelError("oracle needs an all-controllable machine; %s are not"
                         % uncontrollable)
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1], got %g" % gamma)
    reward_of = rewards.__getitem__ if hasattr(rewards, "__getitem__") else rewards
    q = QTable.from_model(f)
    enabled = {s: f.enabled(s) for s in range(f.n_states)}
    for _ in range(max_sweeps):
        delta = 0.0
        for (s, a), dst in f.transitions.items():
            maxterm = q.max_value(dst, enabled[dst]) if enabled[dst] else 0.0
            new = reward_of(a) + gamma * maxterm
            delta = max(delta, abs(new - q.value(s, a)))
            q.set(s, a, new)
        if delta < tol:
            return q
    raise ModelError("value iteration did not converge within %d sweeps" % max_sweeps)
