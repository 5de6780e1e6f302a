"""Command-line interface: ``searchgame <subcommand> [options]``.

Exit codes: 0 success, 1 other failure, 2 usage error, 3 spec error,
4 node budget exceeded. Failures print one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import chains, presets, regions, solver, specio, strategies
from .core import Belief, GameSpec
from .errors import HorizonTooLarge, SpecError, UnknownStrategy

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SPEC, EXIT_BUDGET = 0, 1, 2, 3, 4

DEFAULT_HORIZON = 9
DEFAULT_GRID = 30
DEFAULT_TRIALS = 100_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _add_spec(p):
    p.add_argument("--spec", required=True,
                   help="spec file (JSON) or bundled name such as identity2, uniform3, example1")
    p.add_argument("--initial", help="override the initial belief, comma separated")


def _add_format(p):
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="searchgame", description="Alternating search games on Markov chains.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="finite-horizon or discounted value")
    _add_spec(p)
    p.add_argument("--horizon", type=_positive(int), default=DEFAULT_HORIZON)
    p.add_argument("--player", choices=("1", "2"), default="1")
    p.add_argument("--discount", type=float, help="discount factor in (0, 1); replaces --horizon")
    p.add_argument("--tol", type=_positive(float), default=1e-6, help="tail bound for --discount")
    p.add_argument("--bracket", action="store_true", help="also report the value bracket")
    _add_format(p)

    p = sub.add_parser("bracket", help="certified interval around the value")
    _add_spec(p)
    p.add_argument("--horizon", type=_positive(int), default=DEFAULT_HORIZON)
    _add_format(p)

    p = sub.add_parser("regions", help="optimal opening regions on a simplex grid")
    _add_spec(p)
    p.add_argument("--horizon", type=_positive(int), default=DEFAULT_HORIZON)
    p.add_argument("--grid", type=_positive(int), default=DEFAULT_GRID)
    p.add_argument("--out", help="write the map to this file")
    p.add_argument("--format", choices=("csv", "svg"),
                   help="file format for --out (default: from the suffix, else csv)")
    p.add_argument("--report", choices=("text", "json"), default="text")

    for name, helptext in (("simulate", "Monte Carlo estimate for a strategy profile"),
                           ("evaluate", "exact win probabilities for a strategy profile")):
        p = sub.add_parser(name, help=helptext)
        _add_spec(p)
        p.add_argument("--sigma", required=True, help="player 1 strategy, e.g. greedy, truncation:9")
        p.add_argument("--tau", required=True, help="player 2 strategy")
        p.add_argument("--horizon", type=_positive(int), default=DEFAULT_HORIZON)
        if name == "simulate":
            p.add_argument("--trials", type=_positive(int), default=DEFAULT_TRIALS)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--workers", type=_positive(int), default=1)
        _add_format(p)

    p = sub.add_parser("classify", help="chain structure and mixing constant")
    _add_spec(p)
    _add_format(p)

    p = sub.add_parser("examples", help="list or emit bundled example specs")
    p.add_argument("name", nargs="?", choices=presets.EXAMPLES)
    p.add_argument("--eta", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--emit", help="write the game spec here instead of stdout")
    _add_format(p)
    return ap


# --------------------------------------------------------------------------

def _load_spec(args) -> GameSpec:
    spec = specio.resolve(args.spec)
    if getattr(args, "initial", None):
        try:
            vals = [float(x) for x in args.initial.split(",")]
        except ValueError:
            raise UsageError(f"--initial: not a list of numbers: {args.initial!r}") from None
        if len(vals) != spec.n:
            raise UsageError(f"--initial has {len(vals)} entries, spec has {spec.n} states")
        spec = spec.with_initial(Belief(vals, location="--initial"))
    return spec


def _labels(spec, states):
    return [spec.states.labels[s] for s in states]


def _cmd_solve(args):
    spec = _load_spec(args)
    if args.discount is not None:
        res = solver.value_discounted(spec, args.discount, args.tol, player=args.player)
        return {
            "value": res.value,
            "player": int(args.player),
            "discount": res.beta,
            "truncation_horizon": res.truncation_horizon,
            "tail_bound": res.tail_bound,
            "q_values": dict(zip(spec.states.labels, res.q_values.tolist())),
        }
    res = solver.value_finite(spec, args.horizon, args.player)
    out = {
        "value": res.value,
        "player": res.for_player,
        "horizon": res.horizon,
        "q_values": dict(zip(spec.states.labels, res.q_values.tolist())),
        "optimal_actions": _labels(spec, res.optimal_actions),
        "nodes": res.lattice.nodes,
    }
    if args.bracket:
        b = solver.value_bracket(spec, args.horizon)
        out["bracket"] = {"lower": b.lower, "upper": b.upper, "width": b.width}
    return out


def _cmd_bracket(args):
    spec = _load_spec(args)
    b = solver.value_bracket(spec, args.horizon)
    return {"lower": b.lower, "upper": b.upper, "width": b.width, "midpoint": b.midpoint,
            "horizon": b.horizon}


def _cmd_regions(args):
    spec = _load_spec(args)
    rm = regions.map_regions(spec, args.horizon, args.grid)
    out = rm.summary()
    if args.out:
        fmt = args.format or ("svg" if Path(args.out).suffix.lower() == ".svg" else "csv")
        regions.export_regions(rm, args.out, fmt)
        out["written"] = str(args.out)
        out["file_format"] = fmt
    return out


def _profile(args, spec):
    return (strategies.parse_strategy(args.sigma, spec), strategies.parse_strategy(args.tau, spec))


def _cmd_evaluate(args):
    spec = _load_spec(args)
    sigma, tau = _profile(args, spec)
    rep = strategies.evaluate_exact(spec, sigma, tau, args.horizon)
    d = rep.to_dict()
    d["actions"] = _labels(spec, rep.actions)
    d["sigma"], d["tau"] = args.sigma, args.tau
    return d


def _cmd_simulate(args):
    spec = _load_spec(args)
    sigma, tau = _profile(args, spec)
    rep = strategies.simulate(spec, sigma, tau, args.horizon, args.trials, args.seed, args.workers)
    d = rep.to_dict()
    d["sigma"], d["tau"] = args.sigma, args.tau
    return d


def _cmd_classify(args):
    spec = _load_spec(args)
    labels = spec.states.labels
    out = {"mixing_constant": chains.mixing_certificate(spec.schedule).alpha}
    per = []
    for m in spec.schedule.matrices:
        c = chains.classify(m)
        d = c.to_dict(labels)
        if c.irreducible:
            d["stationary"] = chains.stationary_distribution(m).probs.tolist()
        per.append(d)
    if len(per) == 1:
        out.update(per[0])
    else:
        out["repeat"] = spec.schedule.repeat_rule
        out["matrices"] = per
    return out


def _cmd_examples(args):
    if args.name is None:
        return {"examples": list(presets.EXAMPLES), "bundled_names": sorted(presets.BUNDLED)}
    params = {k: getattr(args, k) for k in ("eta", "q", "n") if getattr(args, k) is not None}
    spec = presets.generate_example(args.name, **params)
    if args.emit:
        specio.dump(spec, args.emit)
        return {"written": args.emit, "example": args.name, **params}
    return specio.dumps(spec)


COMMANDS = {
    "solve": _cmd_solve,
    "bracket": _cmd_bracket,
    "regions": _cmd_regions,
    "evaluate": _cmd_evaluate,
    "simulate": _cmd_simulate,
    "classify": _cmd_classify,
    "examples": _cmd_examples,
}


# --------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def render_text(report) -> str:
    if isinstance(report, str):
        return report.rstrip("\n")
    lines = []
    width = max((len(k) for k in report), default=0)
    for k, v in report.items():
        if isinstance(v, float):
            v = f"{v:.12g}"
        elif isinstance(v, dict):
            v = ", ".join(f"{kk}={vv:.12g}" if isinstance(vv, float) else f"{kk}={vv}"
                          for kk, vv in v.items())
        elif isinstance(v, list) and len(v) > 12 and all(isinstance(t, float) for t in v):
            v = "[" + ", ".join(f"{t:.6g}" for t in v[:12]) + f", ... ({len(v)} entries)]"
        lines.append(f"{k.ljust(width)}  {v}")
    return "\n".join(lines)


def _fail(kind: str, message: str, code: int, stream) -> int:
    stream.write(json.dumps({"error": kind, "message": message, "exit": code}) + "\n")
    return code


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        report = COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("UsageError", str(exc), EXIT_USAGE, stderr)
    except UnknownStrategy as exc:
        return _fail("UnknownStrategy", str(exc), EXIT_USAGE, stderr)
    except SpecError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_SPEC, stderr)
    except FileNotFoundError as exc:
        return _fail("FileNotFound", str(exc), EXIT_SPEC, stderr)
    except HorizonTooLarge as exc:
        return _fail("HorizonTooLarge", str(exc), EXIT_BUDGET, stderr)
    except Exception as exc:  # noqa: BLE001 - the CLI reports every failure as one line
        return _fail(type(exc).__name__, str(exc), EXIT_FAIL, stderr)

    fmt = getattr(args, "report", None) or getattr(args, "format", "text")
    if isinstance(report, str):
        stdout.write(report if report.endswith("\n") else report + "\n")
    elif fmt == "json":
        stdout.write(json.dumps(_jsonable(report)) + "\n")
    else:
        stdout.write(render_text(report) + "\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
