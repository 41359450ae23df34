"""Action selection: plain epsilon-greedy and the controllable
epsilon-greedy used for training over machines with uncontrollable events.

The controllable variant resolves probability-specified uncontrollable
events first: each one gets an independent uniform draw, is removed from
the candidate pool, and triggers when its draw falls below its
probability.  When several trigger on the same call their evaluation
order is shuffled, because which one occurs first is unknowable.  If none
triggers, the usual epsilon-greedy choice runs over the remainder, except
that the exploitation branch only ever picks controllable events: the
agent cannot choose to fire an uncontrollable one.

All randomness comes from an explicit ``numpy.random.Generator`` owned by
the caller; no function here keeps state.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .automata import Event, Fsm, ModelError
from .environment import ProbMap


class QTable:
    """Partial map (state id, event) -> value, defined exactly on the
    machine's transition pairs and initialized to zero.

    The table also counts updates per cell, which is how the trainers can
    tell a learned zero from a never-visited cell.
    """

    def __init__(self, f: Fsm):
        self.model = f
        self._values: dict[tuple[int, str], float] = {k: 0.0 for k in f.transitions}
        self._updates: dict[tuple[int, str], int] = {}

    @classmethod
    def from_model(cls, f: Fsm) -> "QTable":
        return cls(f)

    def _key(self, s: int, event: Event | str) -> tuple[int, str]:
        name = event.name if isinstance(event, Event) else event
        key = (s, name)
        if key not in self._values:
            raise ModelError("(%r, %r) is not a possible transition" % (s, name))
        return key

    def defined(self, s: int, event: Event | str) -> bool:
        name = event.name if isinstance(event, Event) else event
        return (s, name) in self._values

    def value(self, s: int, event: Event | str) -> float:
        return self._values[self._key(s, event)]

    def set(self, s: int, event: Event | str, value: float) -> None:
        key = self._key(s, event)
        self._values[key] = value
        self._updates[key] = self._updates.get(key, 0) + 1

    def defined_pairs(self) -> set[tuple[int, str]]:
        return set(self._values)

    def updated_pairs(self) -> set[tuple[int, str]]:
        """Cells written at least once since construction."""
        return set(self._updates)

    def best(self, s: int, candidates: Sequence[Event]) -> Event:
        """Argmax over candidates; ties keep the earliest candidate, so
        callers passing alphabet-ordered lists get the lowest-index event."""
        if not candidates:
            raise ModelError("argmax over empty candidate list")
        best = candidates[0]
        best_v = self.value(s, best)
        for e in candidates[1:]:
            v = self.value(s, e)
            if v > best_v:
                best, best_v = e, v
        return best

    def max_value(self, s: int, candidates: Sequence[Event]) -> float:
        return max(self.value(s, e) for e in candidates)


def _uniform_pick(pool: Sequence[Event], rng: np.random.Generator) -> Event:
    return pool[int(rng.integers(len(pool)))]


def epsilon_greedy(s: int, q, eps: float, enabled: Sequence[Event],
                   rng: np.random.Generator) -> Event:
    """Plain epsilon-greedy: exploit the argmax when a uniform draw
    exceeds eps, otherwise pick uniformly among the enabled events."""
    if not enabled:
        raise ModelError("no enabled events to choose from")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("epsilon must be in [0, 1], got %g" % eps)
    if rng.random() > eps:
        return q.best(s, enabled)
    return _uniform_pick(enabled, rng)


def controllable_epsilon_greedy(s: int, q, eps: float,
                                a_all: Sequence[Event], a_c: Sequence[Event],
                                a_u: Sequence[Event], probs: ProbMap,
                                rng: np.random.Generator) -> Event | None:
    """Controllability-aware epsilon-greedy over the enabled sets of one
    state.

    Probability-specified uncontrollable events are drawn and removed from
    the pool first; a triggered one (draw below its probability, shuffled
    evaluation order) is returned outright.  Otherwise exploitation picks
    the best *controllable* event with probability 1 - eps, and
    exploration picks uniformly from the remaining pool, which still
    contains the unspecified-probability uncontrollables.  Returns None
    when the pool empties without a trigger: no action is available on
    this tick and the caller should treat the state as blocked for now.
    """
    if not a_all:
        raise ModelError("no enabled events to choose from")
    triggered: list[tuple[Event, float, float]] = []
    removed = set()
    for e in a_u:
        p = probs.get(e)
        if p is not None:
            triggered.append((e, p, rng.random()))
            removed.add(e.name)
    if triggered:
        rng.shuffle(triggered)
        for e, p, draw in triggered:
            if draw < p:
                return e
    pool = [e for e in a_all if e.name not in removed]
    if a_c:
        if rng.random() > eps:
            return q.best(s, list(a_c))
        return _uniform_pick(pool, rng)
    if pool:
        return _uniform_pick(pool, rng)
    return None


def greedy_controllable(s: int, q, a_c: Sequence[Event]) -> Event | None:
    """Deployment-mode choice: the best controllable event, or None when
    the state offers no controllable event (uncontrollables fire
    physically, not by choice)."""
    if not a_c:
        return None
    return q.best(s, list(a_c))
