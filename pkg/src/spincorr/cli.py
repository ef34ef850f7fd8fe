"""Command-line entry point.

Subcommands wire model files to the library: ``verify`` runs the identity
suites, ``exact`` enumerates a correlation table and checks it against
the correlation equation, ``solve`` runs the fixed-point solvers,
``converge`` runs the window-convergence study, and ``bounds`` prints the
contraction constants.

Exit codes: 0 success, 1 identity failure, 2 input error, 3 enumeration
budget exceeded, 4 contraction gate not certified, 5 solver divergence.
"""

from __future__ import annotations

import argparse
import random
import sys

from . import __version__
from .checks import (
    check_environment_condition,
    check_field_consistency,
    check_one_point_consistency,
    environment_plan_random,
    field_plan_random,
    one_point_plan_exhaustive,
    one_point_plan_random,
)
from .errors import (
    BudgetExceededError,
    DomainError,
    EnvironmentConditionError,
    GateNotCertifiedError,
    ModelDefinitionError,
    ModelFileError,
    SolverDivergenceError,
)
from .exact import (
    CorrelationTable,
    read_table,
    rho_exact,
    verify_correlation_equation,
    write_table,
)
from .fields import decay_sums, field_bounds, pair_potential_norm, remark1_sufficiency
from .lattice import Configuration, box
from .modelfile import Model, load_model
from .solver import (
    convergence_profile,
    solve_finite_volume,
    solve_infinite_volume,
    write_series,
)

DEFAULT_SEED = 20260816
DEFAULT_INSTANCES = 10000
EXHAUSTIVE_WINDOW_LIMIT = 4


def _parse_corner(text: str) -> tuple:
    try:
        return tuple(int(c.strip()) for c in text.split(","))
    except ValueError:
        raise DomainError(f"bad window corner {text!r} (want comma-separated integers)")


def _parse_window(spec: str, dimension: int) -> frozenset:
    """Box corners 'lo:hi', coordinates comma-separated, e.g. '-2,-2:2,2'."""
    lo_text, sep, hi_text = spec.partition(":")
    if not sep:
        raise DomainError(f"bad window spec {spec!r} (want 'lo:hi')")
    lo = _parse_corner(lo_text)
    hi = _parse_corner(hi_text)
    if len(lo) != dimension or len(hi) != dimension:
        raise DomainError(
            f"window spec {spec!r} has dimension {len(lo)}/{len(hi)}, "
            f"model has dimension {dimension}"
        )
    if any(a > b for a, b in zip(lo, hi)):
        raise DomainError(f"window spec {spec!r} has lo > hi")
    return box(lo, hi)


def _parse_windows(spec: str, dimension: int) -> list:
    parts = [p for p in spec.split(";") if p.strip()]
    if not parts:
        raise DomainError("empty window spec")
    return [_parse_window(p.strip(), dimension) for p in parts]


def _parse_probe_line(line: str, model: Model) -> Configuration:
    sites_text, sep, labels_text = line.partition(",")
    if not sep:
        raise DomainError(f"bad probe line {line!r} (want 'sites,labels')")
    sites = [tuple(int(c) for c in s.split()) for s in sites_text.split(";") if s]
    labels = [l.strip() for l in labels_text.split(";") if l.strip()]
    if len(sites) != len(labels) or not sites:
        raise DomainError(f"probe line {line!r}: sites and labels must pair up")
    for site in sites:
        if len(site) != model.dimension:
            raise DomainError(f"probe site {site} has wrong dimension")
    items = tuple(
        (site, model.spins.index_of(label)) for site, label in zip(sites, labels)
    )
    vac = model.spins.vacuum_index
    if any(spin == vac for _, spin in items):
        raise DomainError(f"probe line {line!r} assigns the vacuum spin")
    return Configuration(items)


def _load_probes(path: str, model: Model) -> list:
    probes = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            probes.append(_parse_probe_line(line, model))
    if not probes:
        raise DomainError(f"probe file {path!r} contains no probes")
    return probes


def _center_site(window: frozenset) -> tuple:
    dimension = len(next(iter(window)))
    center = []
    for axis in range(dimension):
        coords = sorted(s[axis] for s in window)
        center.append(coords[len(coords) // 2])
    site = tuple(center)
    return site if site in window else min(sorted(window))


def _default_probes(window: frozenset, model: Model) -> list:
    site = _center_site(window)
    return [
        Configuration(((site, spin),)) for spin in model.spins.star_indices
    ]


def _headers(model: Model, args, tol: float) -> dict:
    return {
        "tool_version": __version__,
        "model_digest": model.digest,
        "seed": str(getattr(args, "seed", DEFAULT_SEED)),
        "tolerance": repr(tol),
    }


def _emit(lines: list, out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_verify(args) -> int:
    model = load_model(args.model)
    field = model.field
    tol = args.tol if args.tol is not None else 1e-10
    rng = random.Random(args.seed)

    if args.exhaustive:
        if not args.window:
            raise DomainError("--exhaustive needs --window")
        window = _parse_window(args.window, model.dimension)
        if len(window) > EXHAUSTIVE_WINDOW_LIMIT:
            raise DomainError(
                f"exhaustive mode is limited to windows of at most "
                f"{EXHAUSTIVE_WINDOW_LIMIT} sites, got {len(window)}"
            )
        one_point_plan = one_point_plan_exhaustive(field, window)
    else:
        one_point_plan = one_point_plan_random(field, rng, args.instances)

    reports = [
        check_one_point_consistency(field, one_point_plan, tol),
        check_field_consistency(
            field, field_plan_random(field, rng, args.instances), tol
        ),
        check_environment_condition(
            field, environment_plan_random(field, rng, args.instances), tol
        ),
    ]
    lines = [f"# {k} = {v}" for k, v in _headers(model, args, tol).items()]
    lines.extend(r.summary() for r in reports)
    failed = [r for r in reports if not r.passed]
    for r in failed:
        lines.append(f"witness[{r.name}]: {r.witness}")
    _emit(lines, args.out)
    return 1 if failed else 0


def cmd_exact(args) -> int:
    model = load_model(args.model)
    if not args.window:
        raise DomainError("exact needs --window")
    window = _parse_window(args.window, model.dimension)
    tol = args.tol if args.tol is not None else 1e-9
    table = rho_exact(model.field, window, threads=args.threads)
    report = verify_correlation_equation(model.field, window, table, tol)
    if args.out:
        write_table(args.out, table, model.spins, _headers(model, args, tol))
    lines = [
        f"window_sites = {len(window)}",
        f"partition_value = {table.partition_value!r}",
        f"table_entries = {len(table.values)}",
        report.summary(),
    ]
    if not report.passed:
        lines.append(f"witness[{report.name}]: {report.witness}")
    _emit(lines, None)
    return 0 if report.passed else 1


def cmd_solve(args) -> int:
    model = load_model(args.model)
    if not args.window:
        raise DomainError("solve needs --window")
    window = _parse_window(args.window, model.dimension)
    tol = args.tol if args.tol is not None else 1e-12

    if args.kmax is None:
        solution, report = solve_finite_volume(
            model.field,
            window,
            tol=tol,
            method=args.method,
            override_gate=args.override_gate,
            threads=args.threads,
        )
    else:
        solution, report = solve_infinite_volume(
            model.field,
            window,
            tol=tol,
            k_max=args.kmax,
            method=args.method,
            override_gate=args.override_gate,
            threads=args.threads,
        )

    headers = _headers(model, args, tol)
    headers.update(
        {
            "method": report.method,
            "unknowns": str(report.unknowns),
            "iterations": str(report.iterations),
            "residual_norm": repr(report.residual_norm),
            "operator_norm_bound": repr(report.operator_norm_bound),
            "empirical_contraction_rate": repr(report.empirical_contraction_rate),
            "certified": str(report.certified).lower(),
            "overridden": str(report.overridden).lower(),
            "truncation_tail": repr(report.truncation_tail),
        }
    )
    if args.out:
        out_table = CorrelationTable(window, dict(solution.table), None)
        write_table(args.out, out_table, model.spins, headers)

    lines = [f"{k} = {v}" for k, v in headers.items() if k != "tolerance"]
    lines.insert(0, f"tolerance = {tol!r}")
    if report.final_update_norm:
        lines.append(f"final_update_norm = {report.final_update_norm!r}")
    if report.direct_deviation is not None:
        lines.append(f"direct_deviation = {report.direct_deviation!r}")
    if report.tail_bounds:
        for depth, eps in report.tail_bounds:
            lines.append(f"tail_bound[d={depth}] = {eps!r}")

    if args.exact:
        exact_table = read_table(args.exact, model.spins)
        deviations = [0.0]
        for config, value in exact_table.sorted_items():
            if not config or not config.support <= window:
                continue
            if len(config) > solution.k_max:
                continue
            deviations.append(abs(solution.value(config) - value))
        lines.append(f"max_deviation_vs_exact = {max(deviations)!r}")
    _emit(lines, None)
    return 0


def cmd_converge(args) -> int:
    model = load_model(args.model)
    if not args.window:
        raise DomainError("converge needs --window with at least two boxes")
    windows = _parse_windows(args.window, model.dimension)
    if len(windows) < 2:
        raise DomainError("converge needs at least two windows (last is reference)")
    tol = args.tol if args.tol is not None else 1e-12
    if args.probes:
        probes = _load_probes(args.probes, model)
    else:
        probes = _default_probes(windows[0], model)

    series = convergence_profile(
        model.field,
        windows,
        probes,
        tol=tol,
        threads=args.threads,
        override_gate=args.override_gate,
    )
    if args.out:
        write_series(args.out, series, _headers(model, args, tol))
    lines = [
        f"reference_size = {series.reference_size}",
        f"reference_method = {series.reference_method}",
        f"epsilon_source = {series.epsilon_source}",
    ]
    if series.contraction is not None:
        lines.append(f"contraction = {series.contraction!r}")
    lines.append("window_size,d,max_abs_deviation,epsilon_bound,iterations,residual")
    for p in series.points:
        eps = "" if p.epsilon is None else repr(p.epsilon)
        lines.append(
            f"{p.window_size},{p.depth},{p.max_deviation!r},{eps},"
            f"{p.iterations},{p.residual!r}"
        )
    _emit(lines, None)
    return 0


def cmd_bounds(args) -> int:
    model = load_model(args.model)
    bounds = field_bounds(model.field)
    decay = decay_sums(model.field)
    phi_norm = pair_potential_norm(model.potential, model.spins)
    remark_lhs, remark_pass = remark1_sufficiency(phi_norm, model.spins.n_x)
    lines = [f"# {k} = {v}" for k, v in _headers(model, args, 0.0).items() if k != "tolerance"]
    lines.extend(
        [
            f"norm_delta1 = {bounds.norm_delta1!r}",
            f"decay_total = {decay.total!r}",
            f"n_x = {bounds.n_x}",
            f"c1 = {bounds.c1!r}",
            f"c1_proof = {bounds.c1_proof!r}",
            f"c2 = {bounds.c2!r}",
            f"contraction_lhs = {bounds.contraction_lhs!r}",
            f"gate = {'pass' if bounds.passes else 'FAIL'}",
            f"pair_norm = {phi_norm!r}",
            f"remark1_lhs = {remark_lhs!r}",
            f"remark1 = {'pass' if remark_pass else 'FAIL'}",
        ]
    )
    _emit(lines, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincorr",
        description=(
            "Transition energy fields, exact correlation tables, and "
            "correlation-equation solvers for lattice spin systems"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", required=True, help="model file path")
        p.add_argument("--window", help="box corners 'lo:hi' (use --window=-2:2)")
        p.add_argument("--tol", type=float, default=None, help="check tolerance")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", help="output file path")
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("verify", help="run the identity suites on a model")
    common(p)
    p.add_argument("--instances", type=int, default=DEFAULT_INSTANCES)
    p.add_argument(
        "--exhaustive",
        action="store_true",
        help="exhaustive one-point plan over --window (at most 4 sites)",
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("exact", help="enumerate a correlation table")
    common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("solve", help="solve the correlation equation")
    common(p)
    p.add_argument(
        "--kmax",
        type=int,
        default=None,
        help="support-size cap; switches to the window iteration of the "
        "infinite-volume equation",
    )
    p.add_argument(
        "--method",
        choices=("iterative", "direct", "both"),
        default="iterative",
    )
    p.add_argument("--override-gate", action="store_true")
    p.add_argument("--exact", help="exact table file to compare against")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("converge", help="window-convergence study")
    common(p)
    p.add_argument("--probes", help="probe file ('sites,labels' rows)")
    p.add_argument("--override-gate", action="store_true")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("bounds", help="print contraction constants")
    common(p)
    p.set_defaults(func=cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EnvironmentConditionError as exc:
        print(f"identity failure: {exc}", file=sys.stderr)
        print(f"witness: {exc.witness} (residual {exc.residual!r})", file=sys.stderr)
        return 1
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except GateNotCertifiedError as exc:
        print(f"gate not certified: {exc}", file=sys.stderr)
        return 4
    except SolverDivergenceError as exc:
        print(
            f"solver divergence: {exc} "
            f"(rate estimate {exc.rate!r} after {exc.iterations} iterations)",
            file=sys.stderr,
        )
        return 5
    except (ModelDefinitionError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
