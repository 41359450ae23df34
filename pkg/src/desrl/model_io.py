"""File formats: the native ``.fsm`` model format, a Supremica XML subset,
training ``.cfg`` files, DOT rendering and Q-table CSV export.

Native model format (line oriented, ``#`` starts a comment)::

    automaton M1
    events:
      a1 controllable
      b1 uncontrollable
    states:
      idle initial marked
      working
    transitions:
      idle -a1-> working
      working -b1-> idle

A file may hold several ``automaton`` blocks.  The Supremica XML subset
accepts ``Automaton(name)``, ``Events/Event(id, label, controllable)``,
``States/State(id, name, initial, accepting)`` and
``Transitions/Transition(source, dest, event)``; unknown elements and
attributes are ignored with a warning.
"""

from __future__ import annotations

import re
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

from .automata import Event, Fsm, ModelError


class ModelFormatError(Exception):
    """Malformed model or config text; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__("line %d: %s" % (line, message) if line else message)


class ModelWarning(UserWarning):
    """Tolerated irregularity in an input file (e.g. unknown XML element)."""


@dataclass(frozen=True)
class ModelDocument:
    """A parsed model file: a name plus one or more automata."""

    name: str
    automata: tuple[Fsm, ...]

    def __post_init__(self):
        names = [f.name for f in self.automata]
        if len(set(names)) != len(names):
            raise ModelError("duplicate automaton names in document %r" % self.name)

    def __iter__(self):
        return iter(self.automata)


# ---------------------------------------------------------------------------
# native format
# ---------------------------------------------------------------------------

_TRANSITION_RE = re.compile(r"^(\S+)\s+-(\S+?)->\s+(\S+)$")


def _strip_comment(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


class _AutomatonDraft:
    def __init__(self, name, line):
        self.name = name
        self.line = line
        self.events: list[tuple[str, bool]] = []
        self.states: list[str] = []
        self.initial: str | None = None
        self.marked: list[str] = []
        self.transitions: list[tuple[str, str, str]] = []

    def finish(self) -> Fsm:
        if self.initial is None:
            raise ModelFormatError("automaton %r has no initial state" % self.name, self.line)
        try:
            return Fsm.build(self.name, self.events, self.states, self.initial,
                             self.marked, self.transitions)
        except ModelError as exc:
            raise ModelFormatError("automaton %r: %s" % (self.name, exc), self.line) from exc


def parse_native(text: str, name: str = "model") -> ModelDocument:
    """Parse native-format text into a ``ModelDocument``.

    Errors report the offending line: unknown section, duplicate state or
    event, transitions over undeclared names, nondeterminism, and a
    missing initial state are all rejected.
    """
    automata: list[Fsm] = []
    draft: _AutomatonDraft | None = None
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        lowered = line.lower()
        if lowered.startswith("automaton"):
            parts = line.split()
            if len(parts) != 2:
                raise ModelFormatError("expected 'automaton <name>'", lineno)
            if draft is not None:
                automata.append(draft.finish())
            draft = _AutomatonDraft(parts[1], lineno)
            section = None
            continue
        if lowered in ("events:", "states:", "transitions:"):
            if draft is None:
                raise ModelFormatError("section %r before any 'automaton' line" % line, lineno)
            section = lowered[:-1]
            continue
        if draft is None or section is None:
            raise ModelFormatError("unexpected line %r" % line, lineno)

        if section == "events":
            parts = line.split()
            if len(parts) != 2 or parts[1] not in ("controllable", "uncontrollable"):
                raise ModelFormatError(
                    "expected '<event> controllable|uncontrollable'", lineno)
            if any(parts[0] == n for n, _ in draft.events):
                raise ModelFormatError("duplicate event %r" % parts[0], lineno)
            draft.events.append((parts[0], parts[1] == "controllable"))
        elif section == "states":
            parts = line.split()
            label, flags = parts[0], parts[1:]
            if label in draft.states:
                raise ModelFormatError("duplicate state %r" % label, lineno)
            for flag in flags:
                if flag == "initial":
                    if draft.initial is not None:
                        raise ModelFormatError("second initial state %r" % label, lineno)
                    draft.initial = label
                elif flag == "marked":
                    draft.marked.append(label)
                else:
                    raise ModelFormatError("unknown state flag %r" % flag, lineno)
            draft.states.append(label)
        else:
            m = _TRANSITION_RE.match(line)
            if not m:
                raise ModelFormatError("expected '<src> -<event>-> <dst>'", lineno)
            src, ev, dst = m.groups()
            if src not in draft.states or dst not in draft.states:
                raise ModelFormatError(
                    "transition references undeclared state %r"
                    % (src if src not in draft.states else dst), lineno)
            if ev not in [n for n, _ in draft.events]:
                raise ModelFormatError("transition uses undeclared event %r" % ev, lineno)
            if any(t[0] == src and t[1] == ev for t in draft.transitions):
                raise ModelFormatError(
                    "nondeterministic transition on %r from %r" % (ev, src), lineno)
            draft.transitions.append((src, ev, dst))

    if draft is None:
        raise ModelFormatError("no 'automaton' block found")
    automata.append(draft.finish())
    return ModelDocument(name, tuple(automata))


def export_native(model: Fsm | ModelDocument) -> str:
    """Render automata back to native-format text.

    The output is canonical (events and transitions come out in alphabet
    and id order), so parse/export round-trips to an equal machine.
    """
    automata = model.automata if isinstance(model, ModelDocument) else (model,)
    out: list[str] = []
    for f in automata:
        out.append("automaton %s" % f.name)
        out.append("events:")
        for e in f.alphabet:
            out.append("  %s %s" % (e.name, "controllable" if e.controllable else "uncontrollable"))
        out.append("states:")
        for i, label in enumerate(f.states):
            flags = ""
            if i == f.initial:
                flags += " initial"
            if i in f.marked:
                flags += " marked"
            out.append("  %s%s" % (label, flags))
        out.append("transitions:")
        for (src, ev), dst in sorted(f.transitions.items(),
                                     key=lambda kv: (kv[0][0], f.event_index(kv[0][1]))):
            out.append("  %s -%s-> %s" % (f.states[src], ev, f.states[dst]))
        out.append("")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Supremica XML subset
# ---------------------------------------------------------------------------

_XML_KNOWN = {
    "Automata": (),
    "Automaton": ("name",),
    "Events": (),
    "Event": ("id", "label", "controllable"),
    "States": (),
    "State": ("id", "name", "initial", "accepting"),
    "Transitions": (),
    "Transition": ("source", "dest", "event"),
}


def _xml_attr(elem, attr: str) -> str:
    value = elem.get(attr)
    if value is None:
        raise ModelFormatError("<%s> is missing required attribute %r" % (elem.tag, attr))
    return value


def _warn_unknown(elem):
    if elem.tag not in _XML_KNOWN:
        warnings.warn("ignoring unknown element <%s>" % elem.tag, ModelWarning, stacklevel=3)
        return False
    for attr in elem.keys():
        if attr not in _XML_KNOWN[elem.tag]:
            warnings.warn("ignoring unknown attribute %r on <%s>" % (attr, elem.tag),
                          ModelWarning, stacklevel=3)
    return True


def _parse_xml_automaton(elem) -> Fsm:
    name = _xml_attr(elem, "name")
    events: dict[str, tuple[str, bool]] = {}
    states: dict[str, str] = {}
    order: list[str] = []
    initial: str | None = None
    marked: list[str] = []
    transitions: list[tuple[str, str, str]] = []
    for child in elem:
        if not _warn_unknown(child):
            continue
        if child.tag == "Events":
            for ev in child:
                if not _warn_unknown(ev) or ev.tag != "Event":
                    continue
                eid = _xml_attr(ev, "id")
                label = _xml_attr(ev, "label")
                # Supremica leaves the attribute off controllable events.
                controllable = ev.get("controllable", "true") == "true"
                if eid in events:
                    raise ModelFormatError("duplicate event id %r in %r" % (eid, name))
                events[eid] = (label, controllable)
        elif child.tag == "States":
            for st in child:
                if not _warn_unknown(st) or st.tag != "State":
                    continue
                sid = _xml_attr(st, "id")
                label = st.get("name", sid)
                if sid in states:
                    raise ModelFormatError("duplicate state id %r in %r" % (sid, name))
                states[sid] = label
                order.append(sid)
                if st.get("initial") == "true":
                    if initial is not None:
                        raise ModelFormatError("two initial states in %r" % name)
                    initial = label
                if st.get("accepting") == "true":
                    marked.append(label)
        elif child.tag == "Transitions":
            for tr in child:
                if not _warn_unknown(tr) or tr.tag != "Transition":
                    continue
                src = _xml_attr(tr, "source")
                dst = _xml_attr(tr, "dest")
                evt = _xml_attr(tr, "event")
                if src not in states or dst not in states:
                    raise ModelFormatError(
                        "transition references undeclared state id %r in %r"
                        % (src if src not in states else dst, name))
                if evt not in events:
                    raise ModelFormatError(
                        "transition references undeclared event id %r in %r" % (evt, name))
                transitions.append((states[src], events[evt][0], states[dst]))
    if initial is None:
        raise ModelFormatError("automaton %r has no initial state" % name)
    try:
        return Fsm.build(name, list(events.values()), [states[s] for s in order],
                         initial, marked, transitions)
    except ModelError as exc:
        raise ModelFormatError("automaton %r: %s" % (name, exc)) from exc


def parse_supremica_xml(text: str, name: str = "model") -> ModelDocument:
    """Parse the supported Supremica XML subset into a ``ModelDocument``.

    ``accepting`` states become marked states.  Both a single
    ``<Automaton>`` root and an ``<Automata>`` collection are accepted.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ModelFormatError("malformed XML: %s" % exc) from exc
    if root.tag == "Automaton":
        elems = [root]
        _warn_unknown(root)
    elif root.tag == "Automata":
        _warn_unknown(root)
        elems = []
        for child in root:
            if _warn_unknown(child) and child.tag == "Automaton":
                elems.append(child)
    else:
        raise ModelFormatError("expected <Automata> or <Automaton> root, got <%s>" % root.tag)
    if not elems:
        raise ModelFormatError("no <Automaton> elements found")
    return ModelDocument(name, tuple(_parse_xml_automaton(e) for e in elems))


# ---------------------------------------------------------------------------
# DOT rendering
# ---------------------------------------------------------------------------

def _quote(label: str) -> str:
    return '"%s"' % label.replace('"', '\\"')


def export_dot(f: Fsm, current: int | str | None = None,
               last: tuple[int | str, str, int | str] | None = None) -> str:
    """Render a machine as DOT graph text.

    The initial state gets an entry arrow from a point node, marked states
    are double circled and uncontrollable-event edges are red.  An
    optional ``current`` state is filled green and an optional ``last``
    transition (src, event, dst) is drawn purple.  Output is byte-stable
    for identical inputs.
    """
    cur = f.resolve_state(current) if current is not None else None
    if last is not None:
        src, ev, dst = last
        src, dst = f.resolve_state(src), f.resolve_state(dst)
        if f.transitions.get((src, ev)) != dst:
            raise ModelError("decoration %s -%s-> %s is not a transition of %r"
                             % (f.states[src], ev, f.states[dst], f.name))
        last = (src, ev, dst)

    lines = ["digraph %s {" % _quote(f.name), "  rankdir=LR;",
             '  __start__ [shape=point width=0.15];']
    for i, label in enumerate(f.states):
        attrs = ["shape=doublecircle" if i in f.marked else "shape=circle"]
        if i == cur:
            attrs += ["style=filled", "fillcolor=green"]
        lines.append("  %s [%s];" % (_quote(label), " ".join(attrs)))
    lines.append("  __start__ -> %s;" % _quote(f.states[f.initial]))
    for (src, ev), dst in sorted(f.transitions.items(),
                                 key=lambda kv: (kv[0][0], f.event_index(kv[0][1]))):
        attrs = ["label=%s" % _quote(ev)]
        if last == (src, ev, dst):
            attrs.append("color=purple")
        elif not f.event(ev).controllable:
            attrs.append("color=red")
        lines.append("  %s -> %s [%s];" % (_quote(f.states[src]), _quote(f.states[dst]),
                                           " ".join(attrs)))
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Q-table CSV
# ---------------------------------------------------------------------------

def export_qtable_csv(q, f: Fsm) -> str:
    """Tabulate a Q-table as CSV in the row/column layout of the learned
    tables: one row per state in id order, one column per event in
    alphabet order, ``-`` for impossible (undefined) pairs and two decimal
    places for defined cells."""
    header = "state," + ",".join(e.name for e in f.alphabet)
    rows = [header]
    for s in range(f.n_states):
        cells = ["St. %d" % s]
        for e in f.alphabet:
            if q.defined(s, e.name):
                cells.append("%.2f" % q.value(s, e.name))
            else:
                cells.append("-")
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# training config files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainingConfig:
    """Reward/probability lists plus training hyperparameters.

    ``rewards`` holds only the explicit per-event values; every event
    missing from it earns the default loss of -1.  ``probabilities`` maps
    uncontrollable event names to trigger probabilities in [0, 1].
    ``alpha`` is the step size (tabular learning rate, or the gradient
    step of the deep trainer); ``None`` defers to the trainer's default.
    """

    rewards: dict[str, float] = field(default_factory=dict)
    probabilities: dict[str, float] = field(default_factory=dict)
    gamma: float = 0.9
    alpha: float | None = None
    epsilon: float = 0.1
    episodes: int = 100
    horizon: int = 60
    seed: int = 0
    terminate_on_marked: bool = False
    capacity: int = 10000
    batch_size: int = 32
    target_period: int = 100

    def validation_errors(self) -> list[str]:
        problems = []
        if not 0.0 < self.gamma <= 1.0:
            problems.append("gamma must be in (0, 1], got %g" % self.gamma)
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            problems.append("alpha must be in (0, 1], got %g" % self.alpha)
        if not 0.0 <= self.epsilon <= 1.0:
            problems.append("epsilon must be in [0, 1], got %g" % self.epsilon)
        if self.episodes <= 0:
            problems.append("episodes must be positive, got %d" % self.episodes)
        if self.horizon <= 0:
            problems.append("horizon must be positive, got %d" % self.horizon)
        if self.seed < 0:
            problems.append("seed must be non-negative, got %d" % self.seed)
        if self.capacity <= 0:
            problems.append("capacity must be positive, got %d" % self.capacity)
        if self.batch_size <= 0:
            problems.append("batch size must be positive, got %d" % self.batch_size)
        if self.target_period <= 0:
            problems.append("target period must be positive, got %d" % self.target_period)
        for ev, p in self.probabilities.items():
            if not 0.0 <= p <= 1.0:
                problems.append("probability of %r must be in [0, 1], got %g" % (ev, p))
        return problems


_TRAINING_KEYS = {
    "gamma": float, "alpha": float, "epsilon": float,
    "episodes": int, "horizon": int, "seed": int,
    "capacity": int, "batch_size": int, "target_period": int,
    "terminate_on_marked": None,  # parsed as bool below
}


def parse_config(text: str) -> TrainingConfig:
    """Parse a ``.cfg`` file with ``rewards:``, ``probabilities:`` and
    ``training:`` sections of whitespace-separated key/value lines."""
    rewards: dict[str, float] = {}
    probabilities: dict[str, float] = {}
    training: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.lower() in ("rewards:", "probabilities:", "training:"):
            section = line.lower()[:-1]
            continue
        parts = line.split()
        if section is None or len(parts) != 2:
            raise ModelFormatError("expected '<key> <value>' inside a section", lineno)
        key, value = parts
        try:
            if section == "rewards":
                if key in rewards:
                    raise ModelFormatError("duplicate reward for %r" % key, lineno)
                rewards[key] = float(value)
            elif section == "probabilities":
                if key in probabilities:
                    raise ModelFormatError("duplicate probability for %r" % key, lineno)
                probabilities[key] = float(value)
            else:
                if key not in _TRAINING_KEYS:
                    raise ModelFormatError("unknown training key %r" % key, lineno)
                if key == "terminate_on_marked":
                    if value not in ("true", "false"):
                        raise ModelFormatError(
                            "terminate_on_marked must be true or false", lineno)
                    training[key] = value == "true"
                else:
                    training[key] = _TRAINING_KEYS[key](value)
        except ValueError as exc:
            raise ModelFormatError("bad value %r for %r: %s" % (value, key, exc), lineno)
    config = TrainingConfig(rewards=rewards, probabilities=probabilities, **training)
    problems = config.validation_errors()
    if problems:
        raise ModelFormatError("; ".join(problems))
    return config


def merge_configs(base: TrainingConfig, overlay: TrainingConfig,
                  overlay_text_keys: set[str] | None = None) -> TrainingConfig:
    """Overlay one config on another: reward and probability maps merge
    (overlay entries win); scalar fields are taken from ``overlay`` when
    named in ``overlay_text_keys``, otherwise kept from ``base``."""
    merged = replace(base,
                     rewards={**base.rewards, **overlay.rewards},
                     probabilities={**base.probabilities, **overlay.probabilities})
    if overlay_text_keys:
        merged = replace(merged, **{k: getattr(overlay, k) for k in overlay_text_keys})
    return merged
