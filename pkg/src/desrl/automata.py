"""Deterministic finite state machines with a controllability-partitioned
alphabet, plus synchronous composition.

An ``Fsm`` is the usual tuple of alphabet, states, initial state, marked
states and a partial transition map.  Machines are immutable after
construction and every state is guaranteed reachable from the initial
state, so values can be shared freely between threads.

Synchronous composition (``compose``) merges events shared by two machines
and interleaves the private ones; the composite keeps only the part
reachable from the composite initial state.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence


class ModelError(Exception):
    """A machine (or an operation on machines) violates a model invariant."""


@dataclass(frozen=True)
class Event:
    """A named event, either controllable (the agent may fire or disable
    it) or uncontrollable (the plant fires it spontaneously)."""

    name: str
    controllable: bool

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise ModelError("event name must be a non-empty token, got %r" % (self.name,))


class Fsm:
    """A deterministic FSM.

    Attributes:
        name: display name of the machine.
        alphabet: events sorted by name.  The position of an event in this
            tuple is its action index, used for Q-table columns and
            network outputs; sorting makes the index independent of
            declaration order.
        states: state labels; a state's id is its index in this tuple.
        initial: id of the initial state.
        marked: ids of marked (completed-task) states.
        transitions: partial map ``(state id, event name) -> state id``.

    Construction validates determinism implicitly (one target per key),
    membership of all endpoints and events, and that every state is
    reachable from ``initial``.
    """

    __slots__ = ("name", "alphabet", "states", "initial", "marked", "transitions",
                 "_index", "_state_ids")

    def __init__(self, name: str, alphabet: Iterable[Event], states: Sequence[str],
                 initial: int, marked: Iterable[int],
                 transitions: Mapping[tuple[int, str], int]):
        alphabet = tuple(sorted(alphabet, key=lambda e: e.name))
        states = tuple(states)
        marked = frozenset(marked)
        transitions = dict(transitions)

        names = [e.name for e in alphabet]
        if len(set(names)) != len(names):
            raise ModelError("duplicate event names in alphabet of %r" % name)
        if len(set(states)) != len(states):
            raise ModelError("duplicate state labels in %r" % name)
        if not states:
            raise ModelError("machine %r has no states" % name)
        if not 0 <= initial < len(states):
            raise ModelError("initial state id %d out of range in %r" % (initial, name))
        if not marked <= set(range(len(states))):
            raise ModelError("marked set contains unknown state ids in %r" % name)
        index = {e.name: i for i, e in enumerate(alphabet)}
        for (src, ev), dst in transitions.items():
            if ev not in index:
                raise ModelError("transition uses unknown event %r in %r" % (ev, name))
            if not 0 <= src < len(states) or not 0 <= dst < len(states):
                raise ModelError("transition (%r, %r, %r) leaves the state set of %r"
                                 % (src, ev, dst, name))

        object.__setattr__(self, "name", name)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "marked", marked)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_state_ids", {lbl: i for i, lbl in enumerate(states)})

        unreachable = set(range(len(states))) - self._reachable()
        if unreachable:
            raise ModelError("states %s unreachable from the initial state in %r"
                             % (sorted(states[i] for i in unreachable), name))

    def __setattr__(self, key, value):
        raise AttributeError("Fsm is immutable")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def build(cls, name: str, events: Iterable[tuple[str, bool]],
              states: Sequence[str], initial: str, marked: Iterable[str],
              transitions: Iterable[tuple[str, str, str]]) -> "Fsm":
        """Build from labels instead of ids; rejects nondeterminism."""
        states = tuple(states)
        sid = {lbl: i for i, lbl in enumerate(states)}
        if len(sid) != len(states):
            raise ModelError("duplicate state labels in %r" % name)
        if initial not in sid:
            raise ModelError("initial state %r not declared in %r" % (initial, name))
        for m in marked:
            if m not in sid:
                raise ModelError("marked state %r not declared in %r" % (m, name))
        tmap: dict[tuple[int, str], int] = {}
        for src, ev, dst in transitions:
            if src not in sid or dst not in sid:
                raise ModelError("transition %s -%s-> %s references an undeclared state in %r"
                                 % (src, ev, dst, name))
            key = (sid[src], ev)
            if key in tmap:
                raise ModelError("nondeterministic transition on %r from state %r in %r"
                                 % (ev, src, name))
            tmap[key] = sid[dst]
        return cls(name, [Event(n, c) for n, c in events], states,
                   sid[initial], {sid[m] for m in marked}, tmap)

    # -- queries ---------------------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return len(self.transitions)

    def event(self, name: str) -> Event:
        try:
            return self.alphabet[self._index[name]]
        except KeyError:
            raise ModelError("unknown event %r in %r" % (name, self.name)) from None

    def event_index(self, name: str) -> int:
        """Action index of an event: its position in the sorted alphabet."""
        try:
            return self._index[name]
        except KeyError:
            raise ModelError("unknown event %r in %r" % (name, self.name)) from None

    def state_id(self, label: str) -> int:
        try:
            return self._state_ids[label]
        except KeyError:
            raise ModelError("unknown state %r in %r" % (label, self.name)) from None

    def resolve_state(self, state: int | str) -> int:
        if isinstance(state, str):
            return self.state_id(state)
        if not 0 <= state < len(self.states):
            raise ModelError("state id %d out of range in %r" % (state, self.name))
        return state

    def enabled(self, state: int | str) -> list[Event]:
        """Events with a defined transition from ``state``, in alphabet order."""
        s = self.resolve_state(state)
        return [e for e in self.alphabet if (s, e.name) in self.transitions]

    def target(self, state: int | str, event: str | Event) -> int | None:
        """Successor of ``state`` under ``event``, or None if undefined."""
        s = self.resolve_state(state)
        ev = event.name if isinstance(event, Event) else event
        return self.transitions.get((s, ev))

    def is_marked(self, state: int | str) -> bool:
        return self.resolve_state(state) in self.marked

    def _reachable(self) -> set[int]:
        seen = {self.initial}
        queue = deque([self.initial])
        while queue:
            s = queue.popleft()
            for e in self.alphabet:
                dst = self.transitions.get((s, e.name))
                if dst is not None and dst not in seen:
                    seen.add(dst)
                    queue.append(dst)
        return seen

    def __eq__(self, other) -> bool:
        if not isinstance(other, Fsm):
            return NotImplemented
        return (self.alphabet == other.alphabet and self.states == other.states
                and self.initial == other.initial and self.marked == other.marked
                and self.transitions == other.transitions)

    def __hash__(self):
        return hash((self.alphabet, self.states, self.initial, self.marked,
                     tuple(sorted(self.transitions.items()))))

    def __repr__(self):
        return "Fsm(%r: %d states, %d transitions, %d events)" % (
            self.name, self.n_states, self.n_transitions, len(self.alphabet))


def _merge_alphabets(a: Fsm, b: Fsm) -> list[Event]:
    merged: dict[str, Event] = {e.name: e for e in a.alphabet}
    for e in b.alphabet:
        prev = merged.get(e.name)
        if prev is not None and prev.controllable != e.controllable:
            raise ModelError(
                "event %r is %s in %r but %s in %r" %
                (e.name, "controllable" if prev.controllable else "uncontrollable", a.name,
                 "controllable" if e.controllable else "uncontrollable", b.name))
        merged[e.name] = prev or e
    return list(merged.values())


def compose(a: Fsm, b: Fsm) -> Fsm:
    """Synchronous composition of two machines.

    Shared events (same name in both alphabets) fire only when both
    machines can fire them and advance both; private events advance their
    owner and leave the other machine in place.  A composite state is
    marked iff both projections are marked.  Only the part reachable from
    the pair of initial states is kept, and composite states are
    renumbered to dense ids in discovery order; the retained labels join
    the component labels with a dot.

    Raises ``ModelError`` when a same-named event carries conflicting
    controllability flags.
    """
    alphabet = _merge_alphabets(a, b)
    in_a = {e.name for e in a.alphabet}
    in_b = {e.name for e in b.alphabet}
    order = sorted(e.name for e in alphabet)

    start = (a.initial, b.initial)
    ids: dict[tuple[int, int], int] = {start: 0}
    pairs = [start]
    tmap: dict[tuple[int, str], int] = {}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        qa, qb = pair
        for ev in order:
            if ev in in_a and ev in in_b:
                ta, tb = a.transitions.get((qa, ev)), b.transitions.get((qb, ev))
                if ta is None or tb is None:
                    continue
                nxt = (ta, tb)
            elif ev in in_a:
                ta = a.transitions.get((qa, ev))
                if ta is None:
                    continue
                nxt = (ta, qb)
            else:
                tb = b.transitions.get((qb, ev))
                if tb is None:
                    continue
                nxt = (qa, tb)
            if nxt not in ids:
                ids[nxt] = len(pairs)
                pairs.append(nxt)
                queue.append(nxt)
            tmap[(ids[pair], ev)] = ids[nxt]

    labels = ["%s.%s" % (a.states[qa], b.states[qb]) for qa, qb in pairs]
    marked = {i for i, (qa, qb) in enumerate(pairs)
              if qa in a.marked and qb in b.marked}
    return Fsm("%s||%s" % (a.name, b.name), alphabet, labels, 0, marked, tmap)


def compose_all(machines: Sequence[Fsm]) -> Fsm:
    """Left fold of ``compose`` over a non-empty list of machines."""
    if not machines:
        raise ModelError("compose_all needs at least one machine")
    return reduce(compose, machines)
