"""Command-line surface: JSON configs in, CSV/JSON tables out.

Subcommands: spectrum, solve, resolvent-norm, converge, gap-selftest,
validate.  All randomized paths require an explicit seed and identical
invocations produce byte-identical output.  Exit codes: 0 success,
1 validation failure, 2 usage error, 3 numeric failure.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .coeff import GridPartition, PiecewiseConstFn, StringSpec, check_sequence
from .convergence import make_family, run_experiment
from .errors import (
    ExpressionError,
    GisError,
    InvalidSpecError,
    NumericError,
    PropagationOverflowError,
)
from .expressions import parse_expression
from .propagator import propagate, reconstruct_derivative
from .coeff import combined_coefficient
from .relation_gap import perturbation_suite
from .resolvent import operator_norm, resolvent_matrix
from .spectral import find_eigenvalues

__all__ = ["run_command", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _emit(columns, rows, fmt: str, path: str | None, extras=None) -> None:
    """Write a table as CSV or JSON to a file or stdout (LF endings)."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
        if extras:
            for key, values in extras.items():
                writer.writerow([key] + [_fmt(v) for v in values])
        text = buf.getvalue()
    else:
        payload = {"rows": rows}
        if extras:
            payload.update(extras_json(columns, extras))
        text = json.dumps(payload, indent=2) + "\n"
    if path:
        Path(path).write_text(text, newline="")
    else:
        sys.stdout.write(text)


def extras_json(columns, extras):
    out = {}
    for key, values in extras.items():
        out[key] = dict(zip(columns[1:], values))
    return out


# ---------------------------------------------------------------------------
# config handling

_MISSING = object()


def _dig(cfg: dict, path: str, default=_MISSING):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is _MISSING:
                raise InvalidSpecError(f"{path}: required config field is missing")
            return default
        node = node[part]
    return node


def _finite_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidSpecError(f"{path}: expected a number")
    v = float(value)
    if not np.isfinite(v):
        raise InvalidSpecError(f"{path}: must be finite")
    return v


def _load_config(args) -> dict:
    if not getattr(args, "config", None):
        raise _UsageError("a JSON config file is required (positional or --config)")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read config {args.config!r}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _UsageError(f"config {args.config!r} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise _UsageError("config root must be a JSON object")
    return cfg


def _sample_values(value, partition: GridPartition, path: str) -> np.ndarray:
    if isinstance(value, str):
        try:
            return parse_expression(value)(partition.midpoints)
        except ExpressionError as exc:
            raise InvalidSpecError(f"{path}: {exc}") from None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(partition.n_cells, float(value))
    if isinstance(value, list):
        arr = np.asarray(value, dtype=float)
        if arr.shape != (partition.n_cells,):
            raise InvalidSpecError(
                f"{path}: array length {arr.size} does not match n_cells {partition.n_cells}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidSpecError(f"{path}: array values must be finite")
        return arr
    raise InvalidSpecError(f"{path}: expected an expression string or a value array")


def _spec_from_config(cfg: dict) -> StringSpec:
    n_cells = _dig(cfg, "grid.n_cells")
    if isinstance(n_cells, bool) or not isinstance(n_cells, int) or n_cells < 2:
        raise InvalidSpecError("grid.n_cells: must be an integer >= 2")
    partition = GridPartition(n_cells)
    w = _sample_values(_dig(cfg, "string.w"), partition, "string.w")
    p = _sample_values(_dig(cfg, "string.p"), partition, "string.p")
    return StringSpec(partition, PiecewiseConstFn(partition, w), PiecewiseConstFn(partition, p))


def _windows_from_config(cfg: dict):
    raw = _dig(cfg, "spectrum.window", [0.1, 10.0])
    if isinstance(raw, list) and raw and isinstance(raw[0], list):
        pairs = raw
    else:
        pairs = [raw]
    windows = []
    for i, pair in enumerate(pairs):
        if not isinstance(pair, list) or len(pair) != 2:
            raise InvalidSpecError("spectrum.window: expected [lo, hi] or a list of such pairs")
        lo = _finite_number(pair[0], f"spectrum.window[{i}][0]")
        hi = _finite_number(pair[1], f"spectrum.window[{i}][1]")
        if lo >= hi:
            raise InvalidSpecError(f"spectrum.window[{i}]: lo must be < hi")
        windows.append((lo, hi))
    return windows


def _scan_params(cfg: dict):
    step = _finite_number(_dig(cfg, "spectrum.scan_step", 0.01), "spectrum.scan_step")
    tol = _finite_number(_dig(cfg, "spectrum.tol", 1e-10), "spectrum.tol")
    if step <= 0.0 or tol <= 0.0:
        raise InvalidSpecError("spectrum.scan_step and spectrum.tol must be positive")
    return step, tol


def _z_probe(cfg: dict) -> complex:
    raw = _dig(cfg, "resolvent.z_probe", [0.0, 1.0])
    if not isinstance(raw, list) or len(raw) != 2:
        raise InvalidSpecError("resolvent.z_probe: expected [re, im]")
    return complex(
        _finite_number(raw[0], "resolvent.z_probe[0]"),
        _finite_number(raw[1], "resolvent.z_probe[1]"),
    )


def _output(cfg: dict):
    fmt = _dig(cfg, "output.format", "csv")
    if fmt not in ("csv", "json"):
        raise InvalidSpecError("output.format: must be 'csv' or 'json'")
    return fmt, _dig(cfg, "output.path", None)


def _family_from_config(cfg: dict, base: StringSpec):
    kind = _dig(cfg, "family.kind")
    amplitude = _finite_number(_dig(cfg, "family.amplitude"), "family.amplitude")
    frequency = _finite_number(_dig(cfg, "family.frequency", 1.0), "family.frequency")
    seed = _dig(cfg, "family.seed", None)
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise InvalidSpecError("family.seed: must be an integer")
    n_list = _dig(cfg, "family.n_list", [4, 8, 16, 32, 64])
    if not isinstance(n_list, list) or not n_list or not all(
        isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in n_list
    ):
        raise InvalidSpecError("family.n_list: expected a non-empty list of integers >= 1")
    family = make_family(kind, base, amplitude, frequency, seed)
    return family, n_list


# ---------------------------------------------------------------------------
# subcommands

def _cmd_spectrum(args) -> int:
    cfg = _load_config(args)
    spec = _spec_from_config(cfg)
    step, tol = _scan_params(cfg)
    eigs = []
    residuals = []
    for window in _windows_from_config(cfg):
        sp = find_eigenvalues(spec, window, step, tol)
        eigs.extend(sp.eigenvalues.tolist())
        residuals.extend(sp.residuals.tolist())
    order = np.argsort(eigs) if eigs else []
    rows = [
        {"index": i + 1, "z": float(eigs[j]), "residual": float(residuals[j])}
        for i, j in enumerate(order)
    ]
    fmt, path = _output(cfg)
    _emit(["index", "z", "residual"], rows, fmt, path)
    return 0


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    spec = _spec_from_config(cfg)
    z = complex(args.z, 0.0)
    coeff = combined_coefficient(spec, z)
    data = (args.data[0], args.data[1])
    path_obj = propagate(coeff, args.start, data)
    deriv = reconstruct_derivative(path_obj, coeff)
    last = path_obj.s[-1] - coeff.values[-1] * path_obj.f[-1]
    deriv_nodes = np.concatenate([deriv, [last]])
    nodes = spec.partition.nodes
    rows = [
        {
            "x": float(nodes[j]),
            "re_f": float(path_obj.f[j].real),
            "im_f": float(path_obj.f[j].imag),
            "re_fprime": float(deriv_nodes[j].real),
            "im_fprime": float(deriv_nodes[j].imag),
        }
        for j in range(nodes.size)
    ]
    fmt, path = _output(cfg)
    _emit(["x", "re_f", "im_f", "re_fprime", "im_fprime"], rows, fmt, path)
    return 0


def _cmd_resolvent_norm(args) -> int:
    cfg = _load_config(args)
    spec = _spec_from_config(cfg)
    z = _z_probe(cfg)
    value = operator_norm(resolvent_matrix(spec, z).matrix)
    fmt, path = _output(cfg)
    _emit(["value"], [{"value": float(value)}], fmt, path)
    return 0


def _cmd_converge(args) -> int:
    cfg = _load_config(args)
    base = _spec_from_config(cfg)
    family, n_list = _family_from_config(cfg, base)
    windows = _windows_from_config(cfg)
    step, tol = _scan_params(cfg)
    report = run_experiment(
        family,
        kind=args.kind,
        n_list=n_list,
        window=windows,
        z_probe=_z_probe(cfg),
        scan_step=step,
        tol=tol,
    )
    if args.verbose:
        for row in report.rows:
            print(
                f"# n={row.n} reverse spectral gap = {row.spectral_gap_rev!r}"
                + ("" if row.valid else f" (invalid: {row.note})"),
                file=sys.stderr,
            )
    columns = ["n", "sup_f_gap", "deriv_gap", "resolvent_gap", "spectral_gap"]
    rows = [
        {
            "n": row.n,
            "sup_f_gap": row.sup_f_gap,
            "deriv_gap": row.deriv_gap,
            "resolvent_gap": row.resolvent_gap,
            "spectral_gap": row.spectral_gap,
        }
        for row in report.rows
    ]
    slope_values = [
        report.slopes[c][0] if report.slopes[c] else float("nan") for c in columns[1:]
    ]
    fmt, path = _output(cfg)
    _emit(columns, rows, fmt, path, extras={"slope": slope_values})
    return 0


def _cmd_gap_selftest(args) -> int:
    report = perturbation_suite(args.seed, args.trials, args.dim)
    rows = [
        {
            "check": "add_norm_bound",
            "violations": report.add_norm_violations,
            "worst": report.add_norm_worst_margin,
            "note": "",
        },
        {
            "check": "sum_stability_bound",
            "violations": report.sum_stability_violations,
            "worst": report.sum_stability_worst_margin,
            "note": "",
        },
        {
            "check": "inverse_invariance",
            "violations": report.inverse_violations,
            "worst": report.inverse_worst_defect,
            "note": "",
        },
        {
            "check": "graph_norm_bound",
            "violations": report.graph_bound_violations,
            "worst": report.graph_bound_worst_margin,
            "note": "",
        },
        {
            "check": "decay_implication",
            "violations": report.decay_violations,
            "worst": report.decay_worst_ratio,
            "note": "",
        },
        {
            "check": "spectral_enclosure",
            "violations": report.enclosure_violations,
            "worst": float("nan"),
            "note": f"informative={report.enclosure_informative}",
        },
    ]
    _emit(["check", "violations", "worst", "note"], rows, args.format, args.output)
    return 0 if report.ok else 1


def _cmd_validate(args) -> int:
    cfg = _load_config(args)
    base = _spec_from_config(cfg)
    family, n_list = _family_from_config(cfg, base)
    report = check_sequence(family.sequence(n_list))
    rows = [
        {
            "n": r.index,
            "density_ok": r.density_ok,
            "dominated": r.dominated,
            "l1_density_gap": r.l1_density_gap,
            "sqrt_density_gap": r.sqrt_density_gap,
            "antider_gap": r.antider_gap,
            "max_density_gap": r.max_density_gap,
        }
        for r in report.rows
    ]
    fmt, path = _output(cfg)
    _emit(
        [
            "n",
            "density_ok",
            "dominated",
            "l1_density_gap",
            "sqrt_density_gap",
            "antider_gap",
            "max_density_gap",
        ],
        rows,
        fmt,
        path,
    )
    return 0 if report.all_ok else 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="gistring", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("config", nargs="?", help="JSON config file")
        p.add_argument("--config", dest="config_opt", help="JSON config file")

    p = sub.add_parser("spectrum", help="eigenvalues of the configured string")
    add_config(p)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("solve", help="propagate one solution and emit the node table")
    add_config(p)
    p.add_argument("--z", type=float, default=1.0, help="real spectral parameter")
    p.add_argument("--data", type=float, nargs=2, default=[0.0, 1.0], metavar=("D1", "D2"))
    p.add_argument("--start", choices=["left", "right"], default="left")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("resolvent-norm", help="operator norm of the resolvent at z_probe")
    add_config(p)
    p.set_defaults(func=_cmd_resolvent_norm)

    p = sub.add_parser("converge", help="convergence experiment over a family")
    add_config(p)
    p.add_argument("--kind", choices=["solution", "resolvent", "spectrum", "all"], default="all")
    p.add_argument("--verbose", action="store_true", help="print diagnostics to stderr")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("gap-selftest", help="randomized battery for the gap bounds")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_gap_selftest)

    p = sub.add_parser("validate", help="sequence diagnostics for a family")
    add_config(p)
    p.set_defaults(func=_cmd_validate)

    return parser


def run_command(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "config_opt", None):
        args.config = args.config_opt
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (PropagationOverflowError, NumericError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (GisError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
