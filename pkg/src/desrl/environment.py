"""The converted MDP runtime: reset/step/render over a closed-loop machine.

The environment itself is deterministic: an executed event always leads to
the single defined successor, and all probability lives in the action
selection policy.  Per-event rewards come from a ``RewardMap`` (default
loss of -1 for unlisted events) and uncontrollable trigger probabilities
from a ``ProbMap``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import model_io
from .automata import Event, Fsm, ModelError


class ContractViolation(Exception):
    """A caller broke the environment contract (disabled action, stepping a
    finished episode, bad reward/probability binding)."""


class RewardMap:
    """Per-event immediate rewards, total over the alphabet.

    Events missing from the explicit map earn the default loss of -1.
    """

    DEFAULT = -1.0

    def __init__(self, f: Fsm, explicit: Mapping[str, float] | None = None,
                 default: float = DEFAULT):
        explicit = dict(explicit or {})
        unknown = set(explicit) - {e.name for e in f.alphabet}
        if unknown:
            raise ContractViolation("rewards listed for unknown events: %s" % sorted(unknown))
        self._values = {e.name: explicit.get(e.name, default) for e in f.alphabet}

    def __getitem__(self, event: str | Event) -> float:
        name = event.name if isinstance(event, Event) else event
        return self._values[name]

    def as_dict(self) -> dict[str, float]:
        return dict(self._values)


class ProbMap:
    """Trigger probabilities for uncontrollable events, optional per event.

    Keys must name uncontrollable events of the machine's alphabet and
    values must lie in [0, 1].  Events without an entry are "unspecified":
    they take part in uniform exploration instead of probability draws.
    """

    def __init__(self, f: Fsm, explicit: Mapping[str, float] | None = None):
        explicit = dict(explicit or {})
        by_name = {e.name: e for e in f.alphabet}
        for name, p in explicit.items():
            if name not in by_name:
                raise ContractViolation("probability listed for unknown event %r" % name)
            if by_name[name].controllable:
                raise ContractViolation(
                    "probability listed for controllable event %r" % name)
            if not 0.0 <= p <= 1.0:
                raise ContractViolation("probability of %r must be in [0, 1], got %g"
                                        % (name, p))
        self._values = explicit

    def specified(self, event: str | Event) -> bool:
        name = event.name if isinstance(event, Event) else event
        return name in self._values

    def get(self, event: str | Event) -> float | None:
        name = event.name if isinstance(event, Event) else event
        return self._values.get(name)

    def as_dict(self) -> dict[str, float]:
        return dict(self._values)


@dataclass
class StepResult:
    """What ``step`` (and ``reset``) hand back: the observed state id, the
    immediate reward, the done flag and a string diagnostics map."""

    observation: int
    reward: float
    done: bool
    info: dict[str, str]


@dataclass
class EpisodeTrace:
    """One episode as the alternating state/action/reward sequence."""

    states: list[int] = field(default_factory=list)
    actions: list[str] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    def check(self, f: Fsm) -> None:
        """Validate shape and that every (s, a) pair is the machine's own
        transition into the recorded successor."""
        if len(self.states) != len(self.actions) + 1 or len(self.actions) != len(self.rewards):
            raise ModelError("inconsistent trace lengths")
        for s, a, s_next in zip(self.states, self.actions, self.states[1:]):
            if f.transitions.get((s, a)) != s_next:
                raise ModelError("trace step %s -%s-> %s is not a transition of %r"
                                 % (s, a, s_next, f.name))


def episode_return(trace: EpisodeTrace, gamma: float) -> float:
    """Discounted return of the whole trace: sum of gamma^i * r_i."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1], got %g" % gamma)
    total = 0.0
    factor = 1.0
    for r in trace.rewards:
        total += factor * r
        factor *= gamma
    return total


class Environment:
    """MDP view of a closed-loop machine.

    States, initial state and marked states map straight onto the
    machine's; actions are its events, restricted per state to the enabled
    set.  ``step`` executes a chosen enabled event (it never samples), and
    an episode ends at the step horizon, on entering a marked state (only
    when ``terminate_on_marked`` is set, and never on the zeroth step, so
    marked initial states do not end episodes immediately), or on entering
    a deadlock state with no enabled events.

    One instance carries mutable episode state and belongs to a single
    thread; independent instances can run in parallel.
    """

    def __init__(self, model: Fsm, rewards: Mapping[str, float] | RewardMap | None = None,
                 probs: Mapping[str, float] | ProbMap | None = None,
                 horizon: int = 60, terminate_on_marked: bool = False, seed: int = 0):
        if horizon <= 0:
            raise ContractViolation("horizon must be positive, got %d" % horizon)
        self.model = model
        self.rewards = rewards if isinstance(rewards, RewardMap) else RewardMap(model, rewards)
        self.probs = probs if isinstance(probs, ProbMap) else ProbMap(model, probs)
        self.horizon = horizon
        self.terminate_on_marked = terminate_on_marked
        self.rng_seed = seed  # bookkeeping echo; the env itself never draws
        self.reset()

    @classmethod
    def from_config(cls, model: Fsm, config: model_io.TrainingConfig) -> "Environment":
        return cls(model, rewards=config.rewards, probs=config.probabilities,
                   horizon=config.horizon, terminate_on_marked=config.terminate_on_marked,
                   seed=config.seed)

    # -- episode lifecycle ----------------------------------------------------

    def reset(self) -> StepResult:
        """Return to the initial state and clear episode bookkeeping."""
        self.current = self.model.initial
        self.step_count = 0
        self.done = False
        self.last_transition: tuple[int, str, int] | None = None
        self.trace = EpisodeTrace(states=[self.current])
        return StepResult(self.current, 0.0, False, {
            "state": self.model.states[self.current],
            "deadlock": "false",
            "done_reason": "",
        })

    def step(self, action: Event | str) -> StepResult:
        """Execute one enabled event and advance along its unique transition.

        Raises on a disabled or unknown action, or when the episode is
        already done, without touching the environment state.
        """
        if self.done:
            raise ContractViolation("episode is done; call reset() first")
        event = self.model.event(action.name if isinstance(action, Event) else action)
        nxt = self.model.transitions.get((self.current, event.name))
        if nxt is None:
            raise ContractViolation(
                "action %r is not enabled in state %r"
                % (event.name, self.model.states[self.current]))

        src = self.current
        self.current = nxt
        self.step_count += 1
        self.last_transition = (src, event.name, nxt)
        reward = self.rewards[event]
        self.trace.states.append(nxt)
        self.trace.actions.append(event.name)
        self.trace.rewards.append(reward)

        deadlock = not self.model.enabled(nxt)
        reason = ""
        if deadlock:
            reason = "deadlock"
        elif self.terminate_on_marked and nxt in self.model.marked and self.step_count >= 1:
            reason = "marked"
        elif self.step_count >= self.horizon:
            reason = "horizon"
        self.done = bool(reason)
        return StepResult(nxt, reward, self.done, {
            "event": event.name,
            "controllable": "true" if event.controllable else "false",
            "state": self.model.states[nxt],
            "deadlock": "true" if deadlock else "false",
            "done_reason": reason,
        })

    # -- views ------------------------------------------------------------------

    def action_sets(self) -> tuple[list[Event], list[Event], list[Event]]:
        """Enabled events at the current state, plus the controllable and
        uncontrollable sub-lists, all in alphabet order."""
        enabled = self.model.enabled(self.current)
        return (enabled,
                [e for e in enabled if e.controllable],
                [e for e in enabled if not e.controllable])

    def render(self) -> str:
        """DOT text of the machine with the current state filled green and
        the last taken transition purple."""
        return model_io.export_dot(self.model, current=self.current,
                                   last=self.last_transition)


class TraceRecorder:
    """Collects per-step rows across episodes and serializes them as CSV
    (episode, step, state, action, reward, done)."""

    HEADER = "episode,step,state,action,reward,done"

    def __init__(self):
        self.rows: list[tuple[int, int, str, str, float, bool]] = []

    def record(self, episode: int, step: int, state: str, action: str,
               reward: float, done: bool) -> None:
        self.rows.append((episode, step, state, action, reward, done))

    def to_csv(self) -> str:
        lines = [self.HEADER]
        for ep, st, state, action, reward, done in self.rows:
            lines.append("%d,%d,%s,%s,%g,%s" % (ep, st, state, action, reward,
                                                "true" if done else "false"))
        return "\n".join(lines) + "\n"
