"""Command-line front end: run verifiers on a scenario or a sweep and render the reports.

Exit codes: 0 every applicable identity passed, 1 an identity failed,
2 usage error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, SerrinLabError, SolverError, UnsupportedError, UsageError
from .expr import ExpressionError
from .fem2d import DomainSpec, FemSolution, boundary_trace, generate_mesh, read_mesh, solve_poisson, write_mesh
from .geometry import CATALOG, model_from_name, space_form
from .identities import IDENTITY_NAMES, run_identities
from .radial import BallProblem, SlabProblem, flux_residual, pde_residual, serrin_boundary_data, solve_ball, solve_slab
from .report import IdentityReport

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
FORMATS = ("table", "json", "csv")
REPORT_FIELDS = ("lhs", "rhs", "residual_abs", "residual_rel", "pass", "hypothesis_met", "tol")
# the one diagnostic per identity worth a column of its own
KEY_TERMS = {
    "hk": "gap",
    "soap": "soap_integral",
    "minkowski": "pointwise_max",
    "main-condition": "pointwise_max",
    "pfunction": "P_spread",
    "nonexistence": "margin",
    "bochner": "max_residual",
}
FEM_DEFAULT_IDENTITIES = ("hk", "soap", "pohozaev-general", "minkowski-proof", "pfunction")
SWEEPABLE = {
    "ball": ("radius", "k", "n"),
    "slab": ("a", "b", "k"),
    "fem": ("h", "eps", "radius", "a", "b", "k"),
}


@dataclass
class ReportBundle:
    command: str
    parameters: dict
    reports: list[IdentityReport]
    extra: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S%z"))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports if r.hypothesis_met)

    def to_dict(self) -> dict:
        return {
            "metadata": {
                "command": self.command,
                "version": __version__,
                "timestamp": self.timestamp,
                "parameters": self.parameters,
                **self.extra,
            },
            "reports": [r.to_dict() for r in self.reports],
            "pass": self.passed,
        }


# --- formatting --------------------------------------------------------------------


def _num(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report_columns(report: IdentityReport) -> dict[str, str]:
    row = {f"{report.name}.{key}": _num(report.to_dict()[key]) for key in REPORT_FIELDS}
    key = KEY_TERMS.get(report.name)
    if key is not None and key in report.terms:
        row[f"{report.name}.{key}"] = _num(report.terms[key])
    return row


def render_table(bundle: ReportBundle) -> str:
    head = ("identity", "status", "lhs", "rhs", "residual_rel", "tol", "key term")
    rows = []
    for r in bundle.reports:
        key = KEY_TERMS.get(r.name)
        extra = f"{key}={_num(r.terms[key])}" if key in r.terms else ""
        rows.append((r.name, r.status, _num(r.lhs), _num(r.rhs), _num(r.residual_rel), _num(r.tol), extra))
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    lines.append(f"overall: {'pass' if bundle.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def render_csv(rows: list[dict[str, str]]) -> str:
    columns: list[str] = []
    for row in rows:
        columns += [c for c in row if c not in columns]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, restval="", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def render(bundle: ReportBundle, fmt: str, rows: list[dict[str, str]] | None = None) -> str:
    if fmt == "json":
        return json.dumps(_json_safe(bundle.to_dict()), indent=2, sort_keys=False) + "\n"
    if fmt == "csv":
        if rows is None:
            rows = [{}]
            for r in bundle.reports:
                rows[0].update(report_columns(r))
        return render_csv(rows)
    return render_table(bundle)


# --- argument handling -------------------------------------------------------------


def _identity_list(text: str | None, default) -> tuple[str, ...]:
    if text is None or text == "all":
        return tuple(default)
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [n for n in names if n not in IDENTITY_NAMES]
    if bad:
        raise UsageError(f"unknown identities: {', '.join(bad)}; choose from {', '.join(IDENTITY_NAMES)}")
    return names


def _tolerances(items) -> dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"tolerance override must look like name=value, got {item!r}")
        name = name.strip()
        if name != "all" and name not in IDENTITY_NAMES:
            raise UsageError(f"unknown identity in tolerance override: {name!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"bad tolerance value {value!r}") from None
    if "all" in out:
        value = out.pop("all")
        out = {name: out.get(name, value) for name in IDENTITY_NAMES}
    return out


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments; keys use the long flag names (dashes or underscores)."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, identities: bool = True, default_format: str = "table") -> None:
    if identities:
        p.add_argument("--identities", default="all", help="comma-separated identity names, or 'all'")
        p.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override (repeatable; NAME may be 'all')")
    p.add_argument("--format", choices=FORMATS, default=default_format)
    p.add_argument("--output", help="write the report here instead of standard output")
    p.add_argument("--config", help="file of 'key = value' defaults; flags take precedence")
    p.add_argument("--seed", type=int, help="reserved; all algorithms are deterministic")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=float, default=0.0)
    p.add_argument("--warp", default="auto", help="auto (space form for k), euclidean, sphere, hyperbolic, exp, cosh, custom:<expr>")
    p.add_argument("--fiber-scalar", type=float)
    p.add_argument("--cosh-eps", type=float, default=0.1)
    p.add_argument("--fiber-volume", type=float, default=1.0, help="multiplies every integral (default: per unit fiber volume)")


def _fem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", choices=("disk", "ellipse", "perturbed_disk"), default="disk")
    p.add_argument("--k", type=float, default=0.0)
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--mode", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="serrinlab", description="Verify Serrin-type identities on model manifolds.")
    parser.add_argument("--version", action="version", version=f"serrinlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify-ball", help="geodesic ball around the pole")
    _model_args(p)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--allow-nonpositive", action="store_true")
    _common(p)

    p = sub.add_parser("verify-slab", help="slab a <= t <= b")
    _model_args(p)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=2.0)
    _common(p)

    p = sub.add_parser("verify-fem", help="2-D constant curvature domain by finite elements")
    _fem_args(p)
    p.add_argument("--mesh", help="read this mesh file instead of generating one")
    _common(p)

    p = sub.add_parser("sweep", help="one parameter over a range; one CSV row per value")
    p.add_argument("--target", choices=tuple(SWEEPABLE), default="ball")
    p.add_argument("--param", required=True)
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--values", help="explicit comma-separated values instead of --from/--to/--steps")
    p.add_argument("--workers", type=int, default=4)
    _model_args(p)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--domain", choices=("disk", "ellipse", "perturbed_disk"), default="disk")
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--mode", type=int, default=3)
    p.add_argument("--allow-nonpositive", action="store_true")
    _common(p, default_format="csv")

    p = sub.add_parser("mesh", help="generate a mesh and write it in the line format")
    _fem_args(p)
    _common(p, identities=False)

    p = sub.add_parser("catalog", help="list warps, domains and identities")
    _common(p, identities=False)
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        config = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(config) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for action in sub._actions:
            if action.dest in config:
                value = config[action.dest]
                if action.type is not None:
                    value = action.type(value)
                elif action.const is True:
                    value = value.lower() in ("1", "true", "yes", "on")
                sub.set_defaults(**{action.dest: value})
        args = parser.parse_args(argv)
    return args


# --- scenarios ---------------------------------------------------------------------


def _model(args, k: float | None = None, n: int | None = None):
    k = args.k if k is None else k
    n = args.n if n is None else n
    if n < 2:
        raise UsageError("n must be at least 2")
    if args.warp == "auto":
        if args.fiber_scalar is not None and args.fiber_scalar != (n - 1) * (n - 2):
            raise UsageError("--warp auto builds a space form; give --warp to change the fiber")
        return space_form(n, k)
    return model_from_name(args.warp, n, k, args.fiber_scalar, eps=args.cosh_eps)


def _radial_extra(s) -> dict:
    data = serrin_boundary_data(s)
    return {
        "solution": {
            "method": s.method,
            "c": s.c,
            "positive": s.positive,
            "u_nu": [r.u_nu for r in s.boundary],
            "H": [r.H for r in s.boundary],
            "overdetermined": data.overdet_holds,
            "mean_curvature_relation": data.cor23_holds,
            "pde_residual": pde_residual(s),
            "flux_residual": flux_residual(s),
        }
    }


def _fem_extra(s: FemSolution) -> dict:
    un = np.abs(s.trace.u_nu)
    return {
        "solution": {
            "nodes": int(len(s.mesh.nodes)),
            "triangles": int(len(s.mesh.triangles)),
            "h": s.h,
            "positive": s.positive,
            "u_nu_ratio": float(un.max() / un.min()),
            "first_eigenvalue": s.field.first_eigenvalue,
        }
    }


def solve_ball_case(args, radius=None, k=None, n=None):
    model = _model(args, k, n)
    p = BallProblem(model, args.radius if radius is None else radius)
    kw = {"fiber_volume": args.fiber_volume}
    if model.is_space_form:
        kw["allow_nonpositive"] = args.allow_nonpositive
    return solve_ball(p, **kw)


def solve_slab_case(args, a=None, b=None, k=None):
    model = _model(args, k)
    return solve_slab(SlabProblem(model, args.a if a is None else a, args.b if b is None else b), fiber_volume=args.fiber_volume)


def _domain_spec(args, **override) -> DomainSpec:
    params = dict(kind=args.domain, k=args.k, h=args.h, radius=args.radius, a=args.a, b=args.b, eps=args.eps, mode=args.mode)
    params.update(override)
    return DomainSpec(**params)


def solve_fem_case(args, **override) -> FemSolution:
    if getattr(args, "mesh", None):
        mesh = read_mesh(args.mesh, args.k)
    else:
        mesh = generate_mesh(_domain_spec(args, **override))
    field = solve_poisson(mesh, mesh.k)
    return FemSolution(mesh, field, boundary_trace(mesh, field, mesh.k), mesh.k)


def _parameters(args) -> dict:
    skip = {"command", "config", "format", "output", "tol"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_verify(args) -> tuple[ReportBundle, None]:
    tols = _tolerances(args.tol)
    if args.command == "verify-fem":
        names = _identity_list(args.identities, FEM_DEFAULT_IDENTITIES)
        s = solve_fem_case(args)
        extra = _fem_extra(s)
    else:
        names = _identity_list(args.identities, IDENTITY_NAMES)
        s = solve_ball_case(args) if args.command == "verify-ball" else solve_slab_case(args)
        extra = _radial_extra(s)
    reports = run_identities(s, names, tols)
    return ReportBundle(args.command, _parameters(args), reports, extra), None


def sweep_values(args) -> list[float]:
    if args.values:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad --values {args.values!r}") from None
    else:
        if args.start is None or args.stop is None or args.steps is None:
            raise UsageError("sweep needs --values or all of --from, --to, --steps")
        if args.steps < 1:
            raise UsageError("--steps must be positive")
        values = [args.start] if args.steps == 1 else np.linspace(args.start, args.stop, args.steps).tolist()
    if not values:
        raise UsageError("empty sweep")
    diffs = np.diff(values)
    if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise UsageError("sweep values must be strictly monotone")
    return values


def _sweep_point(args, names, tols, value):
    param = args.param
    if args.target == "ball":
        kw = {param: int(value) if param == "n" else value}
        s = solve_ball_case(args, **kw)
    elif args.target == "slab":
        s = solve_slab_case(args, **{param: value})
    else:
        s = solve_fem_case(args, **{param: value})
    return run_identities(s, names, tols)


def cmd_sweep(args) -> tuple[ReportBundle, list[dict[str, str]]]:
    if args.param not in SWEEPABLE[args.target]:
        raise UsageError(f"--param for target {args.target} must be one of {', '.join(SWEEPABLE[args.target])}")
    if args.target == "fem" and args.param == "eps" and args.domain != "perturbed_disk":
        raise UsageError("an eps sweep needs --domain perturbed_disk")
    default = FEM_DEFAULT_IDENTITIES if args.target == "fem" else IDENTITY_NAMES
    names = _identity_list(args.identities, default)
    tols = _tolerances(args.tol)
    values = sweep_values(args)
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        futures = [pool.submit(_sweep_point, args, names, tols, v) for v in values]
        results = [f.result() for f in futures]  # sweep order, whatever the completion order
    rows, reports = [], []
    for value, reps in zip(values, results):
        row = {args.param: _num(value)}
        for r in reps:
            row.update(report_columns(r))
        rows.append(row)
        reports += reps
    bundle = ReportBundle("sweep", _parameters(args), reports, {"values": values})
    return bundle, rows


def cmd_mesh(args) -> str:
    if not args.output:
        raise UsageError("mesh needs --output")
    mesh = generate_mesh(_domain_spec(args))
    write_mesh(mesh, args.output)
    info = {
        "nodes": len(mesh.nodes),
        "triangles": len(mesh.triangles),
        "boundary_edges": len(mesh.boundary_edges),
        "max_edge": mesh.max_edge_length(),
        "euler_characteristic": mesh.euler_characteristic,
    }
    if args.format == "json":
        return json.dumps(_json_safe(info), indent=2) + "\n"
    if args.format == "csv":
        return render_csv([{k: _num(v) for k, v in info.items()}])
    return "".join(f"{k}: {_num(v)}\n" for k, v in info.items())


def cmd_catalog(args) -> str:
    data = {
        "warps": list(CATALOG) + ["custom:<expression>"],
        "domains": ["disk", "ellipse", "perturbed_disk"],
        "identities": list(IDENTITY_NAMES),
        "formats": list(FORMATS),
    }
    if args.format == "json":
        return json.dumps(data, indent=2) + "\n"
    if args.format == "csv":
        return render_csv([{"kind": kind, "name": name} for kind, names in data.items() for name in names])
    return "".join(f"{kind}: {', '.join(names)}\n" for kind, names in data.items())


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    """Parse ``argv``, run the subcommand, write the report; return the exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        if args.command == "catalog":
            _emit(cmd_catalog(args), args.output)
            return EXIT_OK
        if args.command == "mesh":
            sys.stdout.write(cmd_mesh(args))
            return EXIT_OK
        if args.command == "sweep":
            bundle, rows = cmd_sweep(args)
        else:
            bundle, rows = cmd_verify(args)
        _emit(render(bundle, args.format, rows), args.output)
        return EXIT_OK if bundle.passed else EXIT_FAIL
    except SolverError as exc:
        print(f"serrinlab: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (UsageError, DomainError, UnsupportedError, ExpressionError) as exc:
        print(f"serrinlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SerrinLabError as exc:
        print(f"serrinlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
