"""Built-in model fixtures: the two-machines-with-buffer system, the two
transmitters sharing a channel, and the small academic-career MDP encoded
as a machine.  Each bundle carries native-format automata plus a training
config, and can write itself to disk as ``.fsm``/``.cfg`` files (the texts
on disk are byte-identical to the embedded ones).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .automata import Fsm, compose_all
from .model_io import TrainingConfig, parse_config, parse_native


@dataclass(frozen=True)
class ExampleBundle:
    """A named set of component automata, restriction automata and a
    training config, all as native-format text keyed by file name."""

    name: str
    components: dict[str, str]
    restrictions: dict[str, str]
    config_name: str
    config_text: str
    overlays: dict[str, str] = field(default_factory=dict)

    def automata(self) -> list[Fsm]:
        texts = list(self.components.values()) + list(self.restrictions.values())
        return [parse_native(t).automata[0] for t in texts]

    def closed_loop(self) -> Fsm:
        return compose_all(self.automata())

    def training_config(self) -> TrainingConfig:
        return parse_config(self.config_text)

    def files(self) -> dict[str, str]:
        out = {**self.components, **self.restrictions, self.config_name: self.config_text}
        out.update(self.overlays)
        return out

    def write(self, directory: str) -> list[str]:
        os.makedirs(directory, exist_ok=True)
        written = []
        for fname, text in self.files().items():
            path = os.path.join(directory, fname)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            written.append(path)
        return written


_M1_FSM = """\
# Machine M1: picks up a workpiece (a1) and delivers it to the buffer (b1);
# it can crash while working (c1) and be repaired (r1).
automaton M1
events:
  a1 controllable
  b1 uncontrollable
  c1 uncontrollable
  r1 controllable
states:
  idle initial marked
  working
  down
transitions:
  idle -a1-> working
  working -b1-> idle
  working -c1-> down
  down -r1-> idle
"""

_M2_FSM = """\
# Machine M2: takes a workpiece from the buffer (a2) and finishes it (b2);
# it can crash while working (c2) and be repaired (r2).
automaton M2
events:
  a2 controllable
  b2 uncontrollable
  c2 uncontrollable
  r2 controllable
states:
  idle initial marked
  working
  down
transitions:
  idle -a2-> working
  working -b2-> idle
  working -c2-> down
  down -r2-> idle
"""

_BUFFER_FSM = """\
# One-slot buffer between the machines: b1 fills it, a2 empties it.
# Disables a2 while empty (underflow) and b1 while full (overflow).
automaton B
events:
  b1 uncontrollable
  a2 controllable
states:
  empty initial marked
  full
transitions:
  empty -b1-> full
  full -a2-> empty
"""

_MACHINES_CFG = """\
# Two-machines manufacturing system. Finishing a workpiece (b2) is the
# only profit; crashes cost repairs. Unlisted events default to -1.
rewards:
  b2 10
  c1 -4
  c2 -4
probabilities:
  c1 0.05
  c2 0.05
training:
  gamma 0.9
  alpha 0.1
  epsilon 0.3
  episodes 100
  horizon 60
  seed 0
"""

_MACHINES_FORCED_CRASH_CFG = """\
# Overlay: machine M1 crashes every time it works.
probabilities:
  c1 1.0
"""


def machines_bundle() -> ExampleBundle:
    """Two machines with an intermediate one-slot buffer.

    The closed loop M1 || M2 || B has 18 states and 42 transitions.  Only
    b2 (a finished workpiece) pays; crashes cost -4 and happen with
    probability 0.05 whenever a machine is working.
    """
    return ExampleBundle(
        name="machines",
        components={"m1.fsm": _M1_FSM, "m2.fsm": _M2_FSM},
        restrictions={"buffer_r.fsm": _BUFFER_FSM},
        config_name="machines.cfg",
        config_text=_MACHINES_CFG,
        overlays={"machines_forced_crash.cfg": _MACHINES_FORCED_CRASH_CFG},
    )


_T1_FSM = """\
# Transmitter T1: a request arrives (req1), transmission starts (tran1)
# and the channel acknowledges (ack1). The agent decides which requests
# to admit; transmission start and acknowledgement are signalled by the
# channel hardware.
automaton T1
events:
  req1 controllable
  tran1 uncontrollable
  ack1 uncontrollable
states:
  idle initial marked
  waiting
  sending
transitions:
  idle -req1-> waiting
  waiting -tran1-> sending
  sending -ack1-> idle
"""

_T2_FSM = """\
# Transmitter T2, same shape as T1 on its own events.
automaton T2
events:
  req2 controllable
  tran2 uncontrollable
  ack2 uncontrollable
states:
  idle initial marked
  waiting
  sending
transitions:
  idle -req2-> waiting
  waiting -tran2-> sending
  sending -ack2-> idle
"""

_CHANNEL_FSM = """\
# Mutual exclusion on the shared channel: one transmission at a time.
automaton C
events:
  tran1 uncontrollable
  tran2 uncontrollable
  ack1 uncontrollable
  ack2 uncontrollable
states:
  free initial marked
  busy
transitions:
  free -tran1-> busy
  free -tran2-> busy
  busy -ack1-> free
  busy -ack2-> free
"""

_TRANSMITTERS_CFG = """\
# Two transmitters sharing one channel. Acknowledgements pay, and T2's
# pays one more than T1's, so admitting T2's requests should win.
rewards:
  ack1 2
  ack2 3
training:
  gamma 0.9
  alpha 0.05
  epsilon 0.35
  episodes 100
  horizon 60
  seed 0
"""

_TRANSMITTERS_DROPOUT_CFG = """\
# Overlay for plant variants extended with an uncontrollable dropout
# event (a lost transmission): it fires 1% of the time.
probabilities:
  dropout 0.01
"""


def transmitters_bundle() -> ExampleBundle:
    """Two transmitters sharing a one-message channel.

    The plant T1 || T2 has 9 states and 18 transitions; with the mutual
    exclusion restriction the closed loop has 8 states and 14 transitions.
    ack2 rewards 3 against ack1's 2, so the trained policy should admit
    requests for transmitter 2 first.
    """
    return ExampleBundle(
        name="transmitters",
        components={"t1.fsm": _T1_FSM, "t2.fsm": _T2_FSM},
        restrictions={"channel_r.fsm": _CHANNEL_FSM},
        config_name="transmitters.cfg",
        config_text=_TRANSMITTERS_CFG,
        overlays={"transmitters_dropout.cfg": _TRANSMITTERS_DROPOUT_CFG},
    )


_ACADEMIC_FSM = """\
# A researcher's career as a machine. Working through the pipeline pays
# off at the raise; playing video games moves to a limbo state whose
# uncontrollable exits either end the career (90%) or start it over.
automaton ACAD
events:
  read_book controllable
  do_project controllable
  publish_paper controllable
  get_raise controllable
  play_video_game controllable
  quit controllable
  career_over uncontrollable
  start_over uncontrollable
states:
  s1 initial
  s2
  s3
  s4
  s5 marked
  playing
transitions:
  s1 -read_book-> s2
  s1 -quit-> s5
  s2 -do_project-> s3
  s2 -play_video_game-> playing
  s2 -quit-> s5
  s3 -publish_paper-> s4
  s3 -play_video_game-> playing
  s4 -get_raise-> s5
  playing -career_over-> s5
  playing -start_over-> s1
"""

_ACADEMIC_CFG = """\
# Rewards of the academic MDP; the limbo exits themselves cost nothing.
rewards:
  read_book -4
  do_project -2
  publish_paper -1
  get_raise 12
  play_video_game 1
  quit 0
  career_over 0
  start_over 0
probabilities:
  career_over 0.9
  start_over 0.1
training:
  gamma 0.9
  alpha 0.1
  epsilon 0.3
  episodes 200
  horizon 30
  seed 0
  terminate_on_marked true
"""


def academic_bundle() -> ExampleBundle:
    """The five-state academic-career MDP encoded as a single machine.

    The play-video-game action leads to an intermediate state with two
    probability-specified uncontrollable exits (0.9 to the terminal, 0.1
    back to the start); state s5 is marked and ends episodes.
    """
    return ExampleBundle(
        name="academic",
        components={"academic.fsm": _ACADEMIC_FSM},
        restrictions={},
        config_name="academic.cfg",
        config_text=_ACADEMIC_CFG,
    )


def all_bundles() -> list[ExampleBundle]:
    return [machines_bundle(), transmitters_bundle(), academic_bundle()]
