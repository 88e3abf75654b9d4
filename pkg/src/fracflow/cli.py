"""Command-line front end: ``fracflow {op,heat,ns,verify,bench}``.

Settings come from ``--config`` (TOML), then ``--set section.key=value``,
then the dedicated flags, later sources winning.  Every command writes
``report.json`` (deterministic) and ``timings.json`` into ``--out-dir``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error, 5 verification failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from fracflow import field_ops, fieldio
from fracflow.analytic import AnalyticField
from fracflow.bench import DEFAULT_SIZES, cmd_bench, format_bench
from fracflow.config import RunConfig, parse_config
from fracflow.errors import ConfigError, FieldIOError, FracflowError, VerificationFailed
from fracflow.fields import ScalarField, VectorField
from fracflow.heat_solver import heat_flux, run_heat, steady_state
from fracflow.line_ops import SampledLine, cf_derivative, ysm_derivative
from fracflow.ns_solver import run_ns
from fracflow.report import RunReport, dumps
from fracflow.verification import SUITES, format_table, run_suite

OPERATORS = ("cf", "ysm", "mollify", "grad", "div", "laplacian", "curl", "flux")


def _value(text: str):
    """Interpret a ``--set`` right-hand side as a TOML value, else a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML configuration file")
    parser.add_argument("--out-dir", type=Path, help="output directory (default: output.dir)")
    parser.add_argument("--backend", choices=["spectral", "direct"])
    parser.add_argument("--beta", type=float)
    parser.add_argument("--mode", choices=["unit-mass", "paper-cf", "paper-ysm", "losada-nieto"])
    parser.add_argument("--variant", choices=["inside", "outside"])
    parser.add_argument("--format", choices=["csv", "bin"], dest="fmt")
    parser.add_argument("--seed", type=int)
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override any configuration key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracflow", description="Nonlocal operators and solvers.")
    sub = parser.add_subparsers(dest="command", required=True)

    op = sub.add_parser("op", help="apply a line or field operator")
    op.add_argument("name", choices=OPERATORS)
    op.add_argument("--input", action="append", default=[], type=Path, help="field file, one per component")
    op.add_argument("--expr", action="append", default=[], help="analytic field in x, y, z, one per component")
    _common(op)

    heat = sub.add_parser("heat", help="run the heat-conduction solver")
    heat.add_argument("--steady", action="store_true", help="solve for the steady state instead")
    _common(heat)

    ns = sub.add_parser("ns", help="run the Navier-Stokes solver")
    _common(ns)

    verify = sub.add_parser("verify", help="run a property suite")
    verify.add_argument("suite", choices=SUITES + ("all",))
    _common(verify)

    bench = sub.add_parser("bench", help="time the kernel evaluation paths")
    bench.add_argument("--sizes", type=int, nargs="+", default=list(DEFAULT_SIZES))
    _common(bench)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise FieldIOError(f"cannot read config {args.config}: {exc}") from exc
    overrides = {}
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        overrides[key.strip()] = _value(raw.strip())
    flags = {
        "operator.beta": args.beta,
        "operator.mode": args.mode,
        "operator.variant": args.variant,
        "operator.backend": args.backend,
        "output.format": args.fmt,
        "ns.seed": args.seed,
    }
    overrides.update({k: v for k, v in flags.items() if v is not None})
    return parse_config(text, overrides)


class Output:
    """Writes fields and reports below one directory."""

    def __init__(self, root: Path, fmt: str) -> None:
        self.root = root
        self.fmt = fmt
        try:
            root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise FieldIOError(f"cannot create {root}: {exc}") from exc

    def field(self, name: str, f: ScalarField) -> Path:
        return fieldio.write_field(f, self.root / f"{name}.{self.fmt}", self.fmt)

    def vector(self, name: str, v: VectorField) -> None:
        for i in range(v.values.shape[0]):
            self.field(f"{name}_{i}", v.component(i))

    def text(self, name: str, body: str) -> None:
        try:
            (self.root / name).write_text(body, encoding="utf-8")
        except OSError as exc:
            raise FieldIOError(f"cannot write {self.root / name}: {exc}") from exc

    def report(self, report: RunReport) -> None:
        self.text("report.json", report.to_json())
        self.text("timings.json", dumps(report.timings))
        if report.series:
            self.text("series.csv", report.series_csv())


def _inputs(args, cfg: RunConfig) -> list[ScalarField]:
    if args.input and args.expr:
        raise ConfigError("give either --input files or --expr expressions, not both")
    if args.input:
        boundary = cfg["grid"]["boundary"]
        fields = [fieldio.read_field(p, boundary) for p in args.input]
        if any(f.grid != fields[0].grid for f in fields):
            raise ConfigError("input fields live on different grids")
        return fields
    if args.expr:
        return [AnalyticField(e).sample(cfg.grid()) for e in args.expr]
    raise ConfigError("op needs at least one --input or --expr")


def _vector(fields: list[ScalarField]) -> VectorField:
    grid = fields[0].grid
    if len(fields) != grid.ndim:
        raise ConfigError(f"a vector on a {grid.ndim}D grid needs {grid.ndim} components, got {len(fields)}")
    return VectorField.from_components(grid, [f.values for f in fields])


def cmd_op(args, cfg: RunConfig, out: Output) -> RunReport:
    op = cfg["operator"]
    beta, mode, variant, backend = op["beta"], op["mode"], op["variant"], cfg.backend
    fields = _inputs(args, cfg)
    f = fields[0]
    name = args.name
    if name in ("cf", "ysm"):
        if f.grid.ndim != 1:
            raise ConfigError(f"{name} acts on one-dimensional fields")
        line = SampledLine(0.0, f.grid.spacing[0], f.values)
        func = cf_derivative if name == "cf" else ysm_derivative
        result = ScalarField(f.grid, func(line, beta, mode).values, {"operator": name})
    elif name == "mollify":
        result = field_ops.mollify(f, beta, mode, backend)
    elif name == "laplacian":
        result = field_ops.laplacian_beta(f, beta, mode, backend)
    elif name == "grad":
        result = field_ops.grad_beta(f, beta, variant, mode, backend)
    elif name == "flux":
        result = heat_flux(f, beta, mode, cfg["heat"]["kappa"], variant, backend)
    elif name == "div":
        result = field_ops.div_beta(_vector(fields), beta, variant, mode, backend)
    else:
        result = field_ops.curl_beta(_vector(fields), beta, variant, mode, backend)

    if isinstance(result, ScalarField):
        out.field(name, result)
        components = [result.values]
    else:
        out.vector(name, result)
        components = list(result.values)
    report = RunReport("op", config=cfg.echo())
    report.config["op"] = name
    report.scalars = {
        "max_abs": [float(abs(c).max()) for c in components],
        "mean": [float(c.mean()) for c in components],
    }
    return report


def cmd_heat(args, cfg: RunConfig, out: Output) -> RunReport:
    hcfg = cfg.heat()
    if args.steady or cfg["heat"]["steady"]:
        T = steady_state(hcfg)
        out.field("T_steady", T)
        report = RunReport("heat-steady", config=cfg.echo())
        report.scalars = {"max_abs": float(abs(T.values).max()), "mean": float(T.values.mean())}
        return report
    result = run_heat(hcfg, on_snapshot=lambda step, t, T: out.field(f"T_{step:06d}", T))
    result.report.config = dict(cfg.echo(), provenance=result.report.config["provenance"])
    return result.report


def cmd_ns(args, cfg: RunConfig, out: Output) -> RunReport:
    def snapshot(step, t, state):
        out.vector(f"velocity_{step:06d}", state.velocity)
        out.field(f"pressure_{step:06d}", state.pressure)

    ncfg = cfg.ns()
    result = run_ns(ncfg, on_snapshot=snapshot)
    result.report.config = dict(cfg.echo(), **result.report.config)
    return result.report


def cmd_verify(args, cfg: RunConfig, out: Output) -> RunReport:
    checks = run_suite(args.suite)
    print(format_table(checks))
    report = RunReport("verify", config={"suite": args.suite})
    report.scalars = {"checks": [c.as_dict() for c in checks]}
    failed = [c.name for c in checks if not c.passed]
    if failed:
        report.status = "failed"
        report.exit_code = VerificationFailed.exit_code
        out.report(report)
        raise VerificationFailed(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return report


def cmd_bench_cli(args, cfg: RunConfig, out: Output) -> RunReport:
    try:
        report = cmd_bench(args.sizes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(format_bench(report))
    return report


COMMANDS = {"op": cmd_op, "heat": cmd_heat, "ns": cmd_ns, "verify": cmd_verify, "bench": cmd_bench_cli}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        out = Output(args.out_dir or Path(cfg["output"]["dir"]), cfg["output"]["format"])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = COMMANDS[args.command](args, cfg, out)
        for w in caught:
            report.warn(f"{w.category.__name__}: {w.message}")
        out.report(report)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return exc.exit_code
    except FracflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FieldIOError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
