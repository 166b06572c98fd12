"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 infeasible request (precision or
frequency ceiling), 3 failed acceptance check (``verify``). Every artifact
embeds the resolved command configuration and the tool version; output files
are only created on success.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import __version__
from .correlation import (
    AmbiguousRepresentativeError,
    BoxRegion,
    correlate_box,
    correlate_triangle,
    gap_distribution,
    poisson_gap_cdf,
)
from .generator import PrecisionCeilingError, generate, read_cache, write_cache
from .harness import (
    SpecTemplate,
    TrialConfig,
    TriangleF,
    decay_slope,
    majority_experiment,
    variance_curve,
)
from .reporting import atomic_write, dumps, write_report, write_table
from .sequences import (
    DilatedInteger,
    DirectSequence,
    ExpLinear,
    GeometricBase,
    InvalidSpecError,
    a_sequence_from_name,
)
from .spectral import FrequencyCeilingError, IntervalJ, PhaseSpec, min_van_over_J, oscillatory_integral
from .verify import PILOT_SEED, run_suite

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_CHECK_FAILED = 0, 1, 2, 3

# keys that never influence an artifact's content
_VOLATILE = ("out", "threads", "handler", "rerun")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _s_grid(text: str) -> list:
    """``lo:hi:count`` (inclusive, evenly spaced) or a comma-separated list."""
    if text.count(":") == 2:
        lo, hi, count = text.split(":")
        try:
            return [round(float(v), 12) for v in np.linspace(float(lo), float(hi), int(count))]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    return _float_list(text)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _add_sequence_args(p, *, N_required=True):
    g = p.add_argument_group("sequence")
    g.add_argument("--seq", choices=("exp", "geom", "dilated", "direct"), help="sequence family")
    g.add_argument("--alpha", help="dilation: decimal, p/q, ln:x or exp:x")
    g.add_argument("--beta", help="geometric base: decimal, p/q or exp:x")
    g.add_argument("--a", default="linear", help="a_n for exp/direct: linear, sqrt, logsq (default linear)")
    g.add_argument("--kind", default="square", help="integer sequence for dilated: square, power2, linear")
    g.add_argument("--keep-integers", action="store_true", help="direct mode: keep integer-valued terms")
    g.add_argument("--bits", type=_positive_int, default=53, help="certified bits per value (default 53)")
    g.add_argument("--N", type=_positive_int, required=N_required, help="number of terms")


def _spec_from_args(args):
    if args.seq is None:
        raise InvalidSpecError("--seq is required")
    if args.seq in ("exp", "dilated") and args.alpha is None:
        raise InvalidSpecError(f"--seq {args.seq} needs --alpha")
    if args.seq == "geom" and args.beta is None:
        raise InvalidSpecError("--seq geom needs --beta")
    if args.seq == "exp":
        return ExpLinear(args.alpha, a_sequence_from_name(args.a), args.bits)
    if args.seq == "geom":
        return GeometricBase(args.beta, args.bits)
    if args.seq == "dilated":
        return DilatedInteger(args.alpha, args.kind, args.bits)
    return DirectSequence(a_sequence_from_name(args.a), not args.keep_integers, args.bits)


def _read_points(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == b"FSQ1":
        return read_cache(path).values
    values = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            values.append(float(line.split(",")[-1]))
    return np.asarray(values, dtype=np.float64)


def _points(args, extra: int = 0) -> np.ndarray:
    """Points from ``--lattice``, ``--input`` or the sequence flags (``N + extra`` terms)."""
    sources = [args.lattice is not None, args.input is not None, args.seq is not None]
    if sum(sources) != 1:
        raise InvalidSpecError("give exactly one of --lattice, --input, --seq")
    if args.lattice is not None:
        return np.arange(args.lattice) / args.lattice
    if args.input is not None:
        return _read_points(args.input)
    if args.N is None:
        raise InvalidSpecError("--seq needs --N")
    return generate(_spec_from_args(args), args.N + extra).values


def _add_source_args(p):
    p.add_argument("--lattice", type=_positive_int, help="use the points i/L, i = 0..L-1")
    p.add_argument("--input", help="points from a CSV or binary cache written by 'generate'")
    _add_sequence_args(p, N_required=False)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _VOLATILE}


def _emit(text: str, args) -> None:
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    seq = generate(_spec_from_args(args), args.N)
    config = _config(args)
    if args.format == "bin":
        if not args.out:
            raise InvalidSpecError("--format bin needs --out")
        write_cache(seq, args.out)
        return EXIT_OK
    if args.format == "csv":
        rows = ((n, float(v)) for n, v in enumerate(seq.values, start=1))
        _emit(write_table(None, ("n", "value"), rows, config=config), args)
    else:
        result = {
            "spec": seq.spec.to_dict(),
            "N": seq.N,
            "precision_bits": seq.precision_bits,
            "err_bound": seq.err_bound,
            "flags": list(seq.flags),
            "values": seq.values,
        }
        _emit(write_report([result], None, config=config, kind="sequence"), args)
    return EXIT_OK


def cmd_corr(args) -> int:
    pts = _points(args)
    if (args.box is None) == (args.triangle is None):
        raise InvalidSpecError("give exactly one of --box and --triangle")
    if args.box is not None:
        box = BoxRegion.parse(args.box)
        if box.k != args.k:
            raise InvalidSpecError(f"box has dimension {box.k - 1}, --k {args.k} needs {args.k - 1}")
        res = correlate_box(pts, box)
        result = {"k": args.k, "N": res.N, "raw_count": res.raw_count, "value": res.value, "reference": res.poisson_reference}
    else:
        value = correlate_triangle(pts, args.triangle, args.k)
        result = {"k": args.k, "N": int(pts.size), "value": value, "reference": float(args.triangle) ** (args.k - 1)}
    _emit(write_report([result], None, config=_config(args), kind="correlation"), args)
    return EXIT_OK


def cmd_gaps(args) -> int:
    pts = _points(args, extra=1)
    hist = gap_distribution(pts, args.s_grid)
    ref = poisson_gap_cdf(hist.s_grid)
    rows = zip(hist.s_grid.tolist(), hist.G_values.tolist(), np.atleast_1d(ref).tolist())
    _emit(write_table(None, ("s", "G", "poisson"), rows, config=_config(args)), args)
    return EXIT_OK


def cmd_variance(args) -> int:
    if args.box is not None and args.triangle is not None:
        raise InvalidSpecError("give at most one of --box and --triangle")
    if args.box is None and args.triangle is None:
        args.box = "-1:1"
    f = BoxRegion.parse(args.box) if args.box is not None else TriangleF((args.triangle,), args.k)
    Ns = sorted(set(args.Ns))
    curve = variance_curve(args.k, f, Ns, IntervalJ(args.A), args.M, args.seed, a_sequence_from_name(args.a))
    if args.format == "csv":
        _emit(write_table(None, ("N", "variance", "stderr"), curve.points, config=_config(args)), args)
    else:
        result = curve.to_dict()
        if len([p for p in curve.points if p[1] > 0]) >= 3:
            result["slope"] = decay_slope(curve)
        _emit(write_report([result], None, config=_config(args), kind="variance"), args)
    return EXIT_OK


def cmd_oscint(args) -> int:
    if len(args.u) != len(args.t):
        raise InvalidSpecError("--u and --t need the same length")
    a = a_sequence_from_name(args.a)
    J = IntervalJ(args.A)
    if args.sweep:
        rows = []
        for tl in args.sweep:
            spec = PhaseSpec(tuple(args.u), tuple(args.t[:-1]) + (tl,), a)
            res = oscillatory_integral(spec, J, args.order)
            van = min_van_over_J(spec, J, args.grid).value
            rows.append((tl, abs(res.value), van))
        _emit(write_table(None, ("t_ell", "abs_I", "min_van"), rows, config=_config(args)), args)
        return EXIT_OK
    spec = PhaseSpec(tuple(args.u), tuple(args.t), a)
    res = oscillatory_integral(spec, J, args.order)
    result = {
        "real": res.value.real,
        "imag": res.value.imag,
        "abs": abs(res.value),
        "error": res.error,
        "panels": res.panels,
        "frequency": res.frequency,
    }
    _emit(write_report([result], None, config=_config(args), kind="oscillatory_integral"), args)
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_suite(args.suite, args.seed)
    text = write_report([c.to_dict() for c in checks], None, config=_config(args), kind="audit")
    _emit(text, args)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}", file=sys.stderr)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED


def cmd_report(args) -> int:
    if args.rerun:
        return _rerun(args)
    if args.N is None:
        raise UsageError("finegrain report: error: --N is required")
    boxes = tuple(BoxRegion.parse(b) for b in args.boxes.split(";"))
    thresholds = tuple(args.thresholds)
    if len(thresholds) != len(boxes):
        raise InvalidSpecError("one threshold per box")
    config = TrialConfig(boxes, thresholds, tuple(args.s_grid), args.gap_threshold)
    template = SpecTemplate(args.template, a_sequence_from_name(args.a), args.bits)
    res = majority_experiment(
        template,
        IntervalJ(args.A),
        args.N,
        config,
        trials=args.trials,
        required=args.required,
        seed=args.seed,
        workers=args.threads,
    )
    text = write_report(list(res.reports), None, config=_config(args), kind="trials")
    doc = json.loads(text)
    doc["summary"] = {"passes": res.passes, "required": res.required, "passed": res.passed}
    _emit(dumps(doc), args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="finegrain", description="Fine-scale statistics of sequences modulo one.")
    parser.add_argument("--version", action="version", version=f"finegrain {__version__}")
    parser.add_argument("--threads", type=_positive_int, default=1, help="cap on worker processes (default 1)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("generate", help="fractional parts of a sequence")
    _add_sequence_args(p)
    p.add_argument("--format", choices=("csv", "json", "bin"), default="csv")
    p.add_argument("--out", help="output file (stdout if omitted; required for bin)")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("corr", help="k-point correlation sum")
    p.add_argument("--k", type=int, default=2, choices=(2, 3, 4, 5, 6))
    p.add_argument("--box", help="box a:b[,a:b...] with k-1 intervals")
    p.add_argument("--triangle", type=float, help="triangle width s (instead of a box)")
    _add_source_args(p)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_corr)

    p = sub.add_parser("gaps", help="nearest-neighbour gap distribution (N+1 points)")
    p.add_argument("--s-grid", type=_s_grid, default=_s_grid("0:5:101"), help="lo:hi:count or a list")
    _add_source_args(p)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_gaps)

    p = sub.add_parser("variance", help="Monte Carlo variance of R_k over J = [A, A+1]")
    p.add_argument("--k", type=int, default=2, choices=(2, 3, 4))
    p.add_argument("--box")
    p.add_argument("--triangle", type=float)
    p.add_argument("--A", type=float, default=2.0)
    p.add_argument("--M", type=_positive_int, default=100)
    p.add_argument("--Ns", type=_int_list, default=[1000, 2000, 4000])
    p.add_argument("--a", default="sqrt")
    p.add_argument("--seed", type=int, default=PILOT_SEED)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_variance)

    p = sub.add_parser("oscint", help="oscillatory integral over J = [A, A+1]")
    p.add_argument("--u", type=_int_list, required=True, help="integer coefficients")
    p.add_argument("--t", type=_int_list, required=True, help="increasing indices")
    p.add_argument("--a", default="sqrt")
    p.add_argument("--A", type=float, default=0.1)
    p.add_argument("--order", type=_positive_int, default=8)
    p.add_argument("--sweep", type=_int_list, help="replace the last index by each value; CSV output")
    p.add_argument("--grid", type=_positive_int, default=2000, help="grid for min Van_l in sweeps")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_oscint)

    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument(
        "--suite",
        default="spectral",
        choices=("generator", "correlation", "spectral", "fourier", "experiments", "variance", "all"),
    )
    p.add_argument("--seed", type=int, default=PILOT_SEED)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("report", help="seeded convergence trials as a JSON report")
    p.add_argument("--template", choices=("geom", "exp"), default="exp")
    p.add_argument("--a", default="sqrt")
    p.add_argument("--bits", type=_positive_int, default=53)
    p.add_argument("--A", type=float, default=2.0)
    p.add_argument("--N", type=_positive_int)
    p.add_argument("--rerun", help="re-run the command recorded in this artifact instead")
    p.add_argument("--trials", type=_positive_int, default=10)
    p.add_argument("--required", type=int, default=8)
    p.add_argument("--boxes", default="-1:1", help="boxes separated by ';'")
    p.add_argument("--thresholds", type=_float_list, default=[0.1])
    p.add_argument("--s-grid", type=_s_grid, default=_s_grid("0:5:101"))
    p.add_argument("--gap-threshold", type=float, default=0.03)
    p.add_argument("--seed", type=int, default=PILOT_SEED)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_report)
    _SUBPARSERS.update(sub.choices)
    return parser


def _recorded_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return json.loads(text)["config"]
    for line in text.splitlines():
        if line.startswith("# config "):
            return json.loads(line[len("# config ") :])
    raise InvalidSpecError(f"{path}: no recorded config")


def _rerun(args) -> int:
    """Re-execute the command recorded in an artifact's config."""
    config = _recorded_config(args.rerun)
    sub = _SUBPARSERS.get(config.get("command"))
    if sub is None:
        raise InvalidSpecError(f"recorded command {config.get('command')!r} is unknown")
    ns = argparse.Namespace(**{a.dest: a.default for a in sub._actions if a.dest != "help"})
    for key, value in config.items():
        setattr(ns, key, value)
    ns.out, ns.threads, ns.rerun = args.out, args.threads, None
    return sub.get_default("handler")(ns)


_SUBPARSERS: dict = {}
_NEGATIVE_VALUE = re.compile(r"^-[0-9.]")


def _attach_negative_values(argv: list) -> list:
    """``--box -1:1`` becomes ``--box=-1:1``; argparse would read ``-1:1`` as a flag."""
    out = []
    for tok in argv:
        if out and _NEGATIVE_VALUE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("finegrain: error: a subcommand is required")
        return args.handler(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (PrecisionCeilingError, FrequencyCeilingError) as exc:
        print(f"finegrain: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvalidSpecError, AmbiguousRepresentativeError, ValueError, OSError) as exc:
        print(f"finegrain: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> int:
    return run(argv)
