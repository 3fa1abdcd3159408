"""Command-line interface: ``flatnorm <subcommand> ...``.

Exit codes: 0 success, 2 invalid input (bad JSON, unknown field, failed
validation), 3 support larger than the LP cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .flat_norm import NormError, SupportSizeError, dual_norm
from .lipschitz import LipschitzError, function_from_json
from .markov import MarkovError, PushForward, dirac_continuity_check, eproperty_probe, iterate, \
    operator_from_json, power
from .measures import MeasureError, measure_from_json, measure_to_json, pair, subtract, tv_norm
from .metric_space import SpaceError, space_from_json, validate_metric
from .schur_lab import ExperimentError, clusters_demo, counterexample_3_2, dirac_drift_demo, \
    discrete_l1_demo, fmt, scan_demo

DEMOS = ("counterexample-3-2", "dirac-drift", "discrete-l1", "clusters", "scan")
INPUT_ERRORS = (SpaceError, MeasureError, LipschitzError, MarkovError, NormError, ExperimentError)


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _int_list(s):
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _float_list(s):
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ball", choices=("bl", "fm"), default="bl")
    common.add_argument("--tol", type=_positive_float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cap", type=int, default=None, help="LP support cap (default: FLATNORM_CAP or 300)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = _Parser(prog="flatnorm", description="Dual bounded-Lipschitz norms of discrete measures.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("tv", parents=[common], help="total variation of a measure")
    s.add_argument("measure")
    s = sub.add_parser("norm", parents=[common], help="dual norm with witness")
    s.add_argument("measure")
    s = sub.add_parser("dist", parents=[common], help="dual-norm distance of two measures")
    s.add_argument("first")
    s.add_argument("second")
    s = sub.add_parser("pair", parents=[common], help="integral of a function against a measure")
    s.add_argument("measure")
    s.add_argument("function")
    s = sub.add_parser("pushforward", parents=[common], help="apply an operator n times to a measure")
    s.add_argument("operator")
    s.add_argument("measure")
    s.add_argument("--n", type=int, default=1)
    s = sub.add_parser("eproperty", parents=[common], help="equicontinuity probe of U^n f, n <= n-max")
    s.add_argument("operator")
    s.add_argument("function")
    s.add_argument("--x0", type=float, default=0.0)
    s.add_argument("--radii", type=_float_list, default=[1e-3, 1e-2, 1e-1])
    s.add_argument("--n-max", type=int, default=10)
    s.add_argument("--samples", type=int, default=32)
    s = sub.add_parser("dirac-check", parents=[common],
                       help="||P delta_x - P delta_x0||*_BL against h of the image distance")
    s.add_argument("operator")
    s.add_argument("--x0", type=float, default=0.0)
    s.add_argument("--radii", type=_float_list, default=[1e-3, 1e-2, 1e-1, 1.0])
    s = sub.add_parser("demo", parents=[common], help="reproducible experiment reports")
    s.add_argument("name", choices=DEMOS)
    s.add_argument("--n", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64])
    s.add_argument("--n-max", type=int, default=None)
    s.add_argument("--epsilon", type=_positive_float, default=1.0)
    s.add_argument("--trials", type=int, default=200)
    s = sub.add_parser("validate-metric", parents=[common], help="check the metric axioms of a matrix")
    s.add_argument("space")
    return p


# -- input -----------------------------------------------------------------------


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _load_measure(path: str):
    try:
        return measure_from_json(_load(path))
    except (MeasureError, SpaceError) as exc:
        raise InputError(f"{path}: {exc}") from None


# -- output ----------------------------------------------------------------------


def _num(x: float) -> str:
    return repr(fmt(float(x)))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _json(obj) -> str:
    from .schur_lab import _clean

    return json.dumps(_clean(obj), indent=2) + "\n"


# -- commands --------------------------------------------------------------------


def _cmd_tv(a):
    return _num(tv_norm(_load_measure(a.measure))) + "\n"


def _cmd_norm(a):
    res = dual_norm(_load_measure(a.measure), a.ball, a.cap)
    if a.format == "csv":
        return _csv(["point", "f"], [(json.dumps(p), f) for p, f in res.witness])
    return _json(res.to_json())


def _cmd_dist(a):
    mu, nu = _load_measure(a.first), _load_measure(a.second)
    if not mu.space.same_domain(nu.space):
        raise InputError(f"{a.second}: space differs from {a.first}")
    return _num(dual_norm(subtract(mu, nu), a.ball, a.cap).value) + "\n"


def _cmd_pair(a):
    mu = _load_measure(a.measure)
    try:
        f = function_from_json(_load(a.function), mu.space)
    except (LipschitzError, SpaceError) as exc:
        raise InputError(f"{a.function}: {exc}") from None
    return _num(pair(mu, f)) + "\n"


def _load_operator(path, space=None):
    try:
        return operator_from_json(_load(path), space)
    except (MarkovError, SpaceError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _cmd_pushforward(a):
    mu = _load_measure(a.measure)
    P = _load_operator(a.operator, mu.space)
    if a.n < 0:
        raise InputError("--n must be nonnegative")
    out = iterate(P, mu, a.n)
    if a.format == "csv":
        return _csv(["point", "weight"], [(json.dumps(p), w) for p, w in out.atoms])
    return json.dumps(measure_to_json(out), indent=2) + "\n"


def _cmd_eproperty(a):
    P = _load_operator(a.operator)
    try:
        f = function_from_json(_load(a.function), P.space)
    except (LipschitzError, SpaceError) as exc:
        raise InputError(f"{a.function}: {exc}") from None
    if a.n_max < 0:
        raise InputError("--n-max must be nonnegative")
    family = [power(P, n) for n in range(a.n_max + 1)]
    table = eproperty_probe(family, f, a.x0, a.radii, a.samples, a.seed)
    if a.format == "csv":
        return _csv(["radius", "omega", "samples", "argmax_member"],
                    zip(table.radii, table.omega, table.samples, table.argmax_member))
    return _json({"n_max": a.n_max, **table.to_json()})


def _cmd_dirac_check(a):
    P = _load_operator(a.operator)
    rows = dirac_continuity_check(P, a.x0, a.radii, tol=max(a.tol, 1e-12))
    cols = ["radius", "input_distance", "image_distance", "bl_output", "h_of_image"]
    data = [[getattr(r, c) for c in cols] for r in rows]
    if a.format == "csv":
        return _csv(cols, data)
    return _json({"operator": P.label, "pushforward": isinstance(P, PushForward),
                  "rows": [dict(zip(cols, r)) for r in data]})


def _cmd_demo(a):
    name = a.name
    if name == "counterexample-3-2":
        rep = counterexample_3_2(a.n)
    elif name == "dirac-drift":
        rep = dirac_drift_demo(a.n_max or 10)
    elif name == "discrete-l1":
        rep = discrete_l1_demo(a.n_max or 51, a.trials, a.seed, a.cap)
    elif name == "clusters":
        rep = clusters_demo(a.n_max or 5, a.epsilon)
    else:
        rep = scan_demo(a.n_max or 64)
    return rep.to_csv() if a.format == "csv" else rep.to_json() + "\n"


def _cmd_validate(a):
    obj = _load(a.space)
    if isinstance(obj, list):
        D = obj
    elif isinstance(obj, dict) and "distances" in obj:
        D = obj["distances"]
    else:
        raise InputError(f"{a.space}: expected a matrix or an object with a 'distances' field")
    try:
        problems = validate_metric(np.asarray(D, dtype=float), a.tol)
    except (TypeError, ValueError):
        raise InputError(f"{a.space}: 'distances' is not a numeric matrix") from None
    out = [{"kind": v.kind, "indices": list(v.indices), "detail": v.detail} for v in problems]
    if problems:
        raise _Reported(_json({"valid": False, "violations": out}))
    return _json({"valid": True, "violations": []})


class _Reported(Exception):
    """Output to print followed by exit code 2."""


COMMANDS = {"tv": _cmd_tv, "norm": _cmd_norm, "dist": _cmd_dist, "pair": _cmd_pair,
            "pushforward": _cmd_pushforward, "eproperty": _cmd_eproperty,
            "dirac-check": _cmd_dirac_check, "demo": _cmd_demo, "validate-metric": _cmd_validate}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        stdout.write(COMMANDS[args.command](args))
        return 0
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except _Reported as exc:
        stdout.write(str(exc))
        return 2
    except SupportSizeError as exc:
        print(f"flatnorm: {exc}", file=stderr)
        return 3
    except (InputError, *INPUT_ERRORS) as exc:
        print(f"flatnorm: {exc}", file=stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
