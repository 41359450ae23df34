"""Command line front end: compose model files, train them, render DOT
graphs and inspect machines.

Exit codes: 0 on success, 1 on runtime failures (bad model content,
training errors), 2 on usage and validation problems (missing files,
out-of-range hyperparameters, unknown decoration names).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .automata import Fsm, ModelError, compose_all
from .bundles import all_bundles
from .deepq import dump_params, net_qtable, train_dqn
from .environment import ContractViolation, Environment, TraceRecorder
from .model_io import (ModelFormatError, export_dot, export_native,
                       export_qtable_csv, parse_config, parse_native,
                       parse_supremica_xml)
from .policy import greedy_controllable
from .tabular import train_q

OVERRIDE_KEYS = ("seed", "episodes", "horizon", "alpha", "gamma", "epsilon")


def _fail(message: str, code: int) -> int:
    print("desrl: error: %s" % message, file=sys.stderr)
    return code


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_automata(paths) -> list[Fsm]:
    automata: list[Fsm] = []
    for path in paths:
        text = _read(path)
        if path.lower().endswith(".xml"):
            doc = parse_supremica_xml(text, name=os.path.basename(path))
        else:
            doc = parse_native(text, name=os.path.basename(path))
        automata.extend(doc.automata)
    return automata


def _load_model(path: str) -> Fsm:
    automata = _load_automata([path])
    return automata[0] if len(automata) == 1 else compose_all(automata)


def _write(path: str, data: str | bytes) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)


def cmd_compose(args) -> int:
    automata = _load_automata(args.models)
    composed = compose_all(automata)
    _write(args.out, export_native(composed))
    print("%d states, %d transitions" % (composed.n_states, composed.n_transitions))
    return 0


def _policy_lines(model: Fsm, qtable) -> list[str]:
    lines = []
    for s in range(model.n_states):
        controllables = [e for e in model.enabled(s) if e.controllable]
        choice = greedy_controllable(s, qtable, controllables)
        lines.append("St. %d (%s): %s" % (s, model.states[s],
                                          choice.name if choice else "-"))
    return lines


def cmd_train(args) -> int:
    config = parse_config(_read(args.config))
    overrides = {k: getattr(args, k) for k in OVERRIDE_KEYS if getattr(args, k) is not None}
    config = replace(config, **overrides)
    problems = config.validation_errors()
    if problems:
        for p in problems:
            print("desrl: error: %s" % p, file=sys.stderr)
        return 2

    model = _load_model(args.model)
    env = Environment.from_config(model, config)
    recorder = TraceRecorder()
    if args.trainer == "q":
        run = train_q(env, config, recorder)
        qtable = run.qtable
    else:
        run = train_dqn(env, config, recorder)
        qtable = net_qtable(run.net, model)
        _write(os.path.join(args.out, "net_params.bin"), dump_params(run.net))

    _write(os.path.join(args.out, "qtable.csv"), export_qtable_csv(qtable, model))
    returns_csv = "episode,return\n" + "".join(
        "%d,%g\n" % (i, r) for i, r in enumerate(run.returns))
    _write(os.path.join(args.out, "returns.csv"), returns_csv)
    _write(os.path.join(args.out, "trace.csv"), recorder.to_csv())

    print("trained %s on %d states, %d transitions (%d episodes, seed %d)"
          % (args.trainer, model.n_states, model.n_transitions,
             config.episodes, config.seed))
    print("greedy controllable policy:")
    for line in _policy_lines(model, qtable):
        print("  " + line)
    return 0


def cmd_render(args) -> int:
    model = _load_model(args.model)
    last = tuple(args.last) if args.last else None
    try:
        dot = export_dot(model, current=args.current, last=last)
    except ModelError as exc:
        return _fail(str(exc), 2)
    _write(args.out, dot)
    print("wrote %s (%d states, %d transitions)"
          % (args.out, model.n_states, model.n_transitions))
    return 0


def cmd_inspect(args) -> int:
    model = _load_model(args.model)
    print("automaton %s: %d states, %d transitions" % (model.name, model.n_states,
                                                       model.n_transitions))
    print("alphabet:")
    for e in model.alphabet:
        print("  %s %s" % (e.name, "controllable" if e.controllable else "uncontrollable"))
    print("states:")
    for s, label in enumerate(model.states):
        tags = []
        if s == model.initial:
            tags.append("initial")
        if s in model.marked:
            tags.append("marked")
        enabled = " ".join(e.name for e in model.enabled(s)) or "(deadlock)"
        suffix = " [%s]" % ", ".join(tags) if tags else ""
        print("  St. %d %s%s: %s" % (s, label, suffix, enabled))
    return 0


def cmd_init_demos(args) -> int:
    written = []
    for bundle in all_bundles():
        written.extend(bundle.write(args.out))
    for path in sorted(written):
        print("wrote %s" % path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="desrl",
        description="Convert FSM models of discrete-event systems into "
                    "trainable environments and train them.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="compose model files into one machine")
    p.add_argument("models", nargs="+", help=".fsm or .xml model files")
    p.add_argument("-o", "--out", required=True, help="output .fsm path")
    p.set_defaults(fn=cmd_compose)

    p = sub.add_parser("train", help="train a model with q-learning or deep-q")
    p.add_argument("model", help="closed-loop model file (.fsm or .xml)")
    p.add_argument("config", help="training .cfg file")
    p.add_argument("--trainer", choices=("q", "dqn"), default="q")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon", type=float)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("render", help="write a DOT graph of a model")
    p.add_argument("model", help="model file (.fsm or .xml)")
    p.add_argument("-o", "--out", required=True, help="output .dot path")
    p.add_argument("--current", help="state to fill green")
    p.add_argument("--last", nargs=3, metavar=("SRC", "EVENT", "DST"),
                   help="transition to paint purple")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("inspect", help="print states, alphabet and enabled sets")
    p.add_argument("model", help="model file (.fsm or .xml)")
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("init-demos", help="write the built-in example models to a directory")
    p.add_argument("--out", default="models", help="target directory")
    p.set_defaults(fn=cmd_init_demos)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        return _fail("no such file: %s" % exc.filename, 2)
    except (ModelError, ModelFormatError, ContractViolation) as exc:
        return _fail(str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
