"""Correlation-equation operator and Neumann-series solvers.

The correlation function solves a fixed-point equation rho = delta + K rho
where K = gamma (S + T) acts on functions over finite non-vacuum
configurations.  This module materializes the operator rows over a finite
domain (supports inside a window, support size capped by k_max), iterates
the equation, optionally cross-checks with a dense direct linear solve,
and evaluates the contraction and tail bounds that certify convergence.

Row coefficients: for a configuration x with minimal site t and remainder
x', the equation reads

    rho(x) = gamma(x) [ 1_{|I|=1} + 1_{|I|>1} rho(x')
             + sum_{J,y} kappa(J,y) (rho(x'y) - sum_b rho(b x'y)) ]

with kappa(J,y) = K(x_t,y)(1 + sum_a w_a) - sum_a w_a K(a,y), where w_a
are the single-site exponential weights at boundary x' and K(a,y) is the
product kernel.  Kernel factors vanish beyond the interaction radius, so
the J-sum over subsets of the ball around t is exact for finite-range
fields.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

from .checks import check_environment_condition, environment_plan_random
from .errors import (
    BudgetExceededError,
    DomainError,
    EnvironmentConditionError,
    GateNotCertifiedError,
    ModelDefinitionError,
    SolverDivergenceError,
)
from .exact import rho_probe
from .fields import FieldBounds, OnePointField, decay_sums, field_bounds
from .lattice import (
    DEFAULT_ENUM_BUDGET,
    Configuration,
    EMPTY_CONFIG,
    ball,
    chebyshev_distance,
    distance_to_complement,
    interior,
    merge_items,
    split_min,
)
from .parallel import block_ranges, map_blocks

DEFAULT_TOL = 1e-12
DEFAULT_RESIDUAL_TOL = 1e-10
DIRECT_UNKNOWN_LIMIT = 2 ** 14
DEFAULT_MAX_UNKNOWNS = 2 ** 20
FALLBACK_MAX_ITERS = 3000
RATE_NOISE_FLOOR = 1e-11
ENV_CHECK_INSTANCES = 300
_ENV_CHECK_SEED = 20260816


@dataclass(frozen=True)
class SupportedFunction:
    """Sparse function on non-vacuum configurations inside a window.

    Entries are keyed by Configuration; lookups outside the stored domain
    return 0.  k_max records the support-size cap of the domain."""

    window: frozenset
    k_max: int
    table: Mapping[Configuration, float]

    def value(self, config: Configuration) -> float:
        return self.table.get(config, 0.0)

    def project(self, volume: Iterable[tuple]) -> "SupportedFunction":
        volume = frozenset(volume)
        kept = {c: v for c, v in self.table.items() if c.support <= volume}
        return SupportedFunction(self.window, self.k_max, kept)

    def sorted_items(self) -> list:
        return sorted(self.table.items(), key=lambda kv: (len(kv[0]), kv[0].items))


def bstar_norm(phi) -> float:
    """Sequence-space norm: the largest per-support sum of absolute values.

    Accepts a SupportedFunction or a plain Configuration -> float mapping.
    The empty configuration does not belong to any support class."""
    table = phi.table if isinstance(phi, SupportedFunction) else phi
    groups: dict = {}
    for config, value in table.items():
        if not config:
            continue
        key = tuple(site for site, _ in config.items)
        groups.setdefault(key, []).append(abs(value))
    return max((math.fsum(vs) for vs in groups.values()), default=0.0)


@dataclass(frozen=True)
class KernelTruncation:
    """Work bounds for the J-sums of the operator.

    interaction_radius of None means the field's own radius (exact for
    finite-range fields).  j_max caps |J|; term_floor drops row terms
    whose certified magnitude is below it.  Every cut accumulates an
    upper bound on the dropped row mass (exact magnitudes for term_floor,
    a per-site mass envelope for the radius and j_max caps), which feeds
    the truncation certificate of the solve report."""

    interaction_radius: int | None = None
    j_max: int | None = None
    term_floor: float = 0.0

    def __post_init__(self):
        if self.interaction_radius is not None and self.interaction_radius < 0:
            raise DomainError("interaction_radius must be >= 0")
        if self.j_max is not None and self.j_max < 0:
            raise DomainError("j_max must be >= 0")
        if self.term_floor < 0.0:
            raise DomainError("term_floor must be >= 0")


EXACT_TRUNCATION = KernelTruncation()


@dataclass(frozen=True)
class SolveReport:
    method: str
    unknowns: int
    iterations: int
    max_iters: int
    final_update_norm: float
    residual_norm: float
    operator_norm_bound: float
    empirical_contraction_rate: float
    certified: bool
    overridden: bool
    truncation_tail: float
    direct_deviation: float | None = None
    tail_bounds: tuple | None = None
    notes: tuple = ()


def _sub(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def gamma(field: OnePointField, x: Configuration) -> float:
    """Single-site conditional weight of x_t given the rest of x."""
    if not x:
        raise DomainError("gamma needs a nonempty configuration")
    t, x_t, rest = split_min(x)
    spins = field.spins
    vac = spins.vacuum_index
    boundary = dict(rest.items)
    weights = [math.exp(field.eval(t, boundary, a, vac)) for a in spins.star_indices]
    numer = 1.0 if x_t == vac else weights[spins.star_indices.index(x_t)]
    return numer / (1.0 + math.fsum(weights))


def delta_fn(field: OnePointField, x: Configuration) -> float:
    """Free term of the correlation equation: gamma on singletons, else 0."""
    if not x:
        raise DomainError("delta_fn needs a nonempty configuration")
    if len(x) > 1:
        return 0.0
    return gamma(field, x)


def kernel(field: OnePointField, t: tuple, x_t: int, y: Configuration) -> float:
    """Product kernel over the support of y with the single boundary spin
    x_t at t.  Identically 0 when x_t is the vacuum."""
    if t in y.support:
        raise DomainError("kernel requires t outside the support of y")
    vac = field.spins.vacuum_index
    result = 1.0
    for s, b in y.items:
        shifted = field.eval(s, {t: x_t}, b, vac)
        free = field.eval(s, {}, b, vac)
        result *= math.exp(shifted - free) - 1.0
    return result


class OperatorContext:
    """Materialized operator rows over an explicit configuration domain.

    The domain lists every non-vacuum configuration with support inside
    the window and support size at most k_max, in a fixed order.  Each row
    stores the free term, the referenced domain indices with coefficients,
    and the absolute mass of references that fall outside the domain
    (those reads are 0 during iteration; the mass feeds the truncation
    certificate)."""

    def __init__(
        self,
        field: OnePointField,
        window: frozenset,
        k_max: int,
        truncation: KernelTruncation = EXACT_TRUNCATION,
        restrict_to_window: bool = True,
        max_unknowns: int = DEFAULT_MAX_UNKNOWNS,
    ):
        if k_max < 1:
            raise DomainError("k_max must be >= 1")
        self.field = field
        self.spins = field.spins
        self.window = frozenset(window)
        self.k_max = min(k_max, len(self.window))
        self.truncation = truncation
        if truncation.interaction_radius is None:
            self.radius = field.radius
        else:
            self.radius = min(field.radius, truncation.interaction_radius)
        self.restrict_to_window = restrict_to_window
        self._vac = self.spins.vacuum_index
        self._star = self.spins.star_indices
        self._weights_memo: dict = {}
        self._kfac_memo: dict = {}
        self._origin = field.origin()

        n_sites = len(self.window)
        count = sum(
            math.comb(n_sites, k) * self.spins.n_x ** k
            for k in range(1, self.k_max + 1)
        )
        if count > max_unknowns:
            raise BudgetExceededError(
                f"operator domain needs {count} unknowns, limit is {max_unknowns}",
                required=count,
                budget=max_unknowns,
            )
        self.domain = self._build_domain()
        self.index = {config: i for i, config in enumerate(self.domain)}
        self.rows: list | None = None

    def _build_domain(self) -> tuple:
        sites = sorted(self.window)
        star = self._star
        out = []
        for k in range(1, self.k_max + 1):
            for support in combinations(sites, k):
                for assignment in product(star, repeat=k):
                    out.append(Configuration._make(tuple(zip(support, assignment))))
        return tuple(out)

    def _gamma_weights(self, t: tuple, rest: Configuration) -> tuple:
        """(denominator, weights-by-star-spin) for boundary rest at site t."""
        field = self.field
        near = tuple(
            (s, sp)
            for s, sp in rest.items
            if chebyshev_distance(s, t) <= field.radius
        )
        if field.homogeneous:
            key = tuple((_sub(s, t), sp) for s, sp in near)
        else:
            key = (t, near)
        got = self._weights_memo.get(key)
        if got is None:
            boundary = dict(near)
            vac = self._vac
            weights = tuple(
                math.exp(field.eval(t, boundary, a, vac)) for a in self._star
            )
            got = (1.0 + math.fsum(weights), weights)
            self._weights_memo[key] = got
        return got

    def kernel_factor(self, t: tuple, s: tuple, a: int, b: int) -> float:
        """exp{(energy of b at s with boundary a at t) - (free energy)} - 1."""
        field = self.field
        if field.homogeneous:
            key = (_sub(t, s), a, b)
        else:
            key = (t, s, a, b)
        got = self._kfac_memo.get(key)
        if got is None:
            vac = self._vac
            if field.homogeneous:
                origin = self._origin
                dt = key[0]
                shifted = field.eval(origin, {dt: a}, b, vac)
                free = field.eval(origin, {}, b, vac)
            else:
                shifted = field.eval(s, {t: a}, b, vac)
                free = field.eval(s, {}, b, vac)
            got = math.exp(shifted - free) - 1.0
            self._kfac_memo[key] = got
        return got

    def row(self, x: Configuration) -> tuple:
        """(free_term, keys, coeffs, floor_dropped) for one domain entry."""
        t, x_t, rest = split_min(x)
        denom, weights = self._gamma_weights(t, rest)
        star = self._star
        gamma_x = weights[star.index(x_t)] / denom
        free_term = gamma_x if len(x) == 1 else 0.0
        keys: list = []
        coeffs: list = []
        if len(x) > 1:
            keys.append(rest)
            coeffs.append(gamma_x)

        candidates = ball(t, self.radius) - x.support - {t}
        if self.restrict_to_window:
            candidates &= self.window
        sites = sorted(candidates)
        weight_sum = denom  # 1 + sum of star weights
        j_cap = len(sites) if self.truncation.j_max is None else min(
            len(sites), self.truncation.j_max
        )
        floor = self.truncation.term_floor
        floor_dropped = 0.0
        n_star = len(star)
        kf = self.kernel_factor
        for k in range(1, j_cap + 1):
            for subset in combinations(sites, k):
                for assignment in product(star, repeat=k):
                    k_by_spin = []
                    for a in star:
                        prod_a = 1.0
                        for s, b in zip(subset, assignment):
                            prod_a *= kf(t, s, a, b)
                            if prod_a == 0.0:
                                break
                        k_by_spin.append(prod_a)
                    k_x = k_by_spin[star.index(x_t)]
                    kappa = k_x * weight_sum - math.fsum(
                        w * ka for w, ka in zip(weights, k_by_spin)
                    )
                    coeff = gamma_x * kappa
                    if coeff == 0.0:
                        continue
                    if floor > 0.0 and abs(coeff) * (1 + n_star) < floor:
                        floor_dropped += abs(coeff) * (1 + n_star)
                        continue
                    y_items = tuple(zip(subset, assignment))
                    base_items = merge_items(rest.items, y_items)
                    keys.append(Configuration._make(base_items))
                    coeffs.append(coeff)
                    for beta in star:
                        beta_items = merge_items(base_items, ((t, beta),))
                        keys.append(Configuration._make(beta_items))
                        coeffs.append(-coeff)
        envelope = self._cut_envelope(t, x, sites, j_cap)
        if envelope > 0.0:
            # |kappa| <= (2*weight_sum - 1) * prod of per-site masses, and
            # each term generates 1 + n_star reads of unit-bounded values
            floor_dropped += (
                gamma_x * (1 + n_star) * (2.0 * weight_sum - 1.0) * envelope
            )
        return free_term, keys, coeffs, floor_dropped

    def _cut_envelope(
        self, t: tuple, x: Configuration, kept_sites: list, j_cap: int
    ) -> float:
        """Upper bound, per unit of gamma and read count, on the summed
        kernel-product mass of the (J, y) terms cut by the radius and j_max
        caps.  Per-site mass M(s) sums, over the spin b placed at s, the
        largest |kernel factor| over boundary spins; all subset terms then
        weigh at most prod(1 + M) - 1, while the enumerated ones weigh at
        most the elementary symmetric sums e_1..e_{j_cap} of the kept
        sites."""
        field = self.field
        if j_cap >= len(kept_sites) and self.radius >= field.radius:
            return 0.0
        star = self._star
        kf = self.kernel_factor
        full = ball(t, field.radius) - x.support
        if self.restrict_to_window:
            full &= self.window
        mass = {
            s: math.fsum(max(abs(kf(t, s, a, b)) for a in star) for b in star)
            for s in sorted(full)
        }
        total = 1.0
        for m in mass.values():
            total *= 1.0 + m
        esym = [1.0] + [0.0] * j_cap
        for s in kept_sites:
            m = mass[s]
            for k in range(j_cap, 0, -1):
                esym[k] += m * esym[k - 1]
        enumerated = math.fsum(esym[1:])
        return max(0.0, (total - 1.0) - enumerated)

    def materialize(self, threads: int = 1) -> None:
        """Resolve all rows to domain indices.  References outside the
        domain become per-row dropped mass."""
        if self.rows is not None:
            return
        domain = self.domain
        index = self.index

        def job(start: int, stop: int) -> list:
            out = []
            for i in range(start, stop):
                free_term, keys, coeffs, floor_dropped = self.row(domain[i])
                idxs = []
                kept = []
                dropped = floor_dropped
                for key, coeff in zip(keys, coeffs):
                    j = index.get(key)
                    if j is None:
                        dropped += abs(coeff)
                    else:
                        idxs.append(j)
                        kept.append(coeff)
                out.append((free_term, tuple(idxs), tuple(kept), dropped))
            return out

        rows: list = []
        for chunk in map_blocks(job, block_ranges(len(domain), 256), threads):
            rows.extend(chunk)
        self.rows = rows

    def dropped_bstar(self) -> float:
        """Largest per-support sum of dropped reference mass; feeds the
        truncation certificate of window-restricted solves."""
        assert self.rows is not None
        groups: dict = {}
        for config, (_, _, _, dropped) in zip(self.domain, self.rows):
            if dropped == 0.0:
                continue
            key = tuple(site for site, _ in config.items)
            groups.setdefault(key, []).append(dropped)
        return max((math.fsum(vs) for vs in groups.values()), default=0.0)

    def support_groups(self) -> list:
        groups: dict = {}
        for i, config in enumerate(self.domain):
            key = tuple(site for site, _ in config.items)
            groups.setdefault(key, []).append(i)
        return list(groups.values())

    def matvec(self, phi: Sequence[float], threads: int = 1) -> list:
        """K applied to the coefficient vector phi (no free term)."""
        assert self.rows is not None
        rows = self.rows

        def job(start: int, stop: int) -> list:
            out = []
            for i in range(start, stop):
                _, idxs, coeffs, _ = rows[i]
                out.append(math.fsum([c * phi[j] for c, j in zip(coeffs, idxs)]))
            return out

        result: list = []
        for chunk in map_blocks(job, block_ranges(len(rows), 512), threads):
            result.extend(chunk)
        return result

    def free_vector(self) -> list:
        assert self.rows is not None
        return [row[0] for row in self.rows]


def apply_G(
    field: OnePointField,
    phi: SupportedFunction,
    x: Configuration,
    truncation: KernelTruncation = EXACT_TRUNCATION,
) -> float:
    """Inner kernel sum of the operator at x, reading phi (0 outside its
    domain).  J runs over subsets of the interaction ball around the
    minimal site; terms whose support leaves the window read 0 throughout
    and vanish, so the window intersection below is exact."""
    if not x:
        raise DomainError("apply_G needs a nonempty configuration")
    t, x_t, rest = split_min(x)
    spins = field.spins
    star = spins.star_indices
    vac = spins.vacuum_index
    radius = field.radius
    if truncation.interaction_radius is not None:
        radius = min(radius, truncation.interaction_radius)
    candidates = sorted((ball(t, radius) & phi.window) - x.support - {t})
    j_cap = len(candidates) if truncation.j_max is None else min(
        len(candidates), truncation.j_max
    )
    terms = []
    for k in range(1, j_cap + 1):
        for subset in combinations(candidates, k):
            for assignment in product(star, repeat=k):
                prod = 1.0
                for s, b in zip(subset, assignment):
                    shifted = field.eval(s, {t: x_t}, b, vac)
                    free = field.eval(s, {}, b, vac)
                    prod *= math.exp(shifted - free) - 1.0
                    if prod == 0.0:
                        break
                if prod == 0.0:
                    continue
                base = Configuration._make(merge_items(rest.items, tuple(zip(subset, assignment))))
                inner = phi.value(base)
                for beta in star:
                    inner -= phi.value(
                        Configuration._make(merge_items(base.items, ((t, beta),)))
                    )
                terms.append(prod * inner)
    return math.fsum(terms)


def apply_K(
    field: OnePointField,
    phi: SupportedFunction,
    truncation: KernelTruncation = EXACT_TRUNCATION,
    projection: Iterable[tuple] | None = None,
    threads: int = 1,
) -> SupportedFunction:
    """One application of the operator to phi, on the domain of supports
    inside phi's window (optionally projected to a sub-volume)."""
    ctx = OperatorContext(
        field, phi.window, phi.k_max, truncation, restrict_to_window=True
    )
    volume = None if projection is None else frozenset(projection)
    table: dict = {}

    def job(start: int, stop: int) -> list:
        out = []
        for i in range(start, stop):
            x = ctx.domain[i]
            if volume is not None and not x.support <= volume:
                continue
            _, keys, coeffs, _ = ctx.row(x)
            value = math.fsum([c * phi.value(k) for c, k in zip(coeffs, keys)])
            out.append((x, value))
        return out

    for chunk in map_blocks(job, block_ranges(len(ctx.domain), 256), threads):
        for x, value in chunk:
            if value != 0.0:
                table[x] = value
    return SupportedFunction(phi.window, phi.k_max, table)


def _environment_gate(field: OnePointField, instances: int = ENV_CHECK_INSTANCES) -> None:
    import random

    rng = random.Random(_ENV_CHECK_SEED)
    plan = environment_plan_random(field, rng, instances)
    report = check_environment_condition(field, plan, 1e-10)
    if not report.passed:
        raise EnvironmentConditionError(
            "boundary-replacement identity fails; the correlation equation "
            "does not apply to this field",
            witness=report.witness,
            residual=report.max_residual,
        )


def _contraction_gate(
    bounds: FieldBounds, override: bool
) -> tuple:
    certified = bounds.passes
    if not certified and not override:
        raise GateNotCertifiedError(
            "contraction gate fails: "
            f"max(C1, C1') (1 + C2) = {bounds.contraction_lhs!r} >= 1; "
            "run with the gate override to iterate anyway (unverified)"
        )
    return certified, (not certified) and override


def _auto_max_iters(bound: float, tol: float, certified: bool) -> int:
    if certified and 0.0 < bound < 1.0:
        predicted = 10 * math.ceil(math.log(tol) / math.log(bound))
        return max(predicted, 10)
    return FALLBACK_MAX_ITERS


def _iterate(
    ctx: OperatorContext,
    tol: float,
    residual_tol: float,
    max_iters: int,
    threads: int,
    initial: str,
) -> tuple:
    free = ctx.free_vector()
    groups = ctx.support_groups()

    def group_norm(vec: Sequence[float]) -> float:
        return max(
            (math.fsum([abs(vec[i]) for i in idxs]) for idxs in groups),
            default=0.0,
        )

    if initial == "delta":
        phi = list(free)
    elif initial == "zero":
        phi = [0.0] * len(free)
    else:
        raise DomainError(f"unknown initial iterate {initial!r}")

    updates: list = []
    iterations = 0
    converged = False
    while iterations < max_iters:
        image = ctx.matvec(phi, threads)
        new = [f + v for f, v in zip(free, image)]
        diff = [a - b for a, b in zip(new, phi)]
        update = group_norm(diff)
        phi = new
        iterations += 1
        updates.append(update)
        if update <= tol:
            converged = True
            break
        if update > 1e12 or (
            len(updates) >= 4
            and updates[-1] > updates[-2] > updates[-3] > updates[-4]
            and updates[-1] > 100.0 * updates[0]
            and updates[-1] > 1e-6
        ):
            rate = updates[-1] / updates[-2] if len(updates) > 1 else math.inf
            raise SolverDivergenceError(
                f"update norms are growing ({update!r} after {iterations} "
                "iterations); the iteration does not contract here",
                rate=rate,
                iterations=iterations,
            )

    if not converged:
        rate = updates[-1] / updates[-2] if len(updates) > 1 else math.inf
        raise SolverDivergenceError(
            f"no convergence within {max_iters} iterations "
            f"(last update norm {updates[-1]!r})",
            rate=rate,
            iterations=max_iters,
        )

    image = ctx.matvec(phi, threads)
    residual_vec = [p - f - v for p, f, v in zip(phi, free, image)]
    residual = group_norm(residual_vec)
    if residual > residual_tol:
        raise SolverDivergenceError(
            f"converged updates but residual {residual!r} exceeds "
            f"{residual_tol!r}",
            rate=updates[-1] / updates[-2] if len(updates) > 1 else 0.0,
            iterations=iterations,
        )

    rate = 0.0
    for prev, cur in zip(updates, updates[1:]):
        if prev >= RATE_NOISE_FLOOR:
            rate = max(rate, cur / prev)
    return phi, iterations, updates[-1] if updates else 0.0, residual, rate


def _direct_solve(ctx: OperatorContext) -> list:
    import numpy

    n = len(ctx.domain)
    if n > DIRECT_UNKNOWN_LIMIT:
        raise BudgetExceededError(
            f"direct route limited to {DIRECT_UNKNOWN_LIMIT} unknowns, "
            f"domain has {n}",
            required=n,
            budget=DIRECT_UNKNOWN_LIMIT,
        )
    system = numpy.eye(n)
    assert ctx.rows is not None
    for i, (_, idxs, coeffs, _) in enumerate(ctx.rows):
        for j, c in zip(idxs, coeffs):
            system[i, j] -= c
    rhs = numpy.array(ctx.free_vector())
    try:
        solution = numpy.linalg.solve(system, rhs)
    except numpy.linalg.LinAlgError as exc:
        raise SolverDivergenceError(
            f"direct linear solve failed: {exc}", rate=math.inf, iterations=0
        )
    return [float(v) for v in solution]


def _solve(
    field: OnePointField,
    window: frozenset,
    k_max: int,
    truncation: KernelTruncation,
    restrict_to_window: bool,
    tol: float,
    residual_tol: float,
    method: str,
    override_gate: bool,
    threads: int,
    max_iters: int | None,
    initial: str,
    max_unknowns: int,
    notes: tuple,
) -> tuple:
    if method not in ("iterative", "direct", "both"):
        raise DomainError(f"unknown solve method {method!r}")
    _environment_gate(field)
    bounds = field_bounds(field)
    certified, overridden = _contraction_gate(bounds, override_gate)
    bound = bounds.contraction_lhs
    ctx = OperatorContext(
        field,
        window,
        k_max,
        truncation,
        restrict_to_window=restrict_to_window,
        max_unknowns=max_unknowns,
    )
    ctx.materialize(threads)
    limit = max_iters if max_iters is not None else _auto_max_iters(
        bound, tol, certified
    )

    direct_vec = None
    if method in ("direct", "both"):
        direct_vec = _direct_solve(ctx)
    phi_vec = None
    iterations = 0
    update_norm = 0.0
    residual = 0.0
    rate = 0.0
    if method in ("iterative", "both"):
        phi_vec, iterations, update_norm, residual, rate = _iterate(
            ctx, tol, residual_tol, limit, threads, initial
        )

    direct_deviation = None
    if phi_vec is not None and direct_vec is not None:
        direct_deviation = max(
            (abs(a - b) for a, b in zip(phi_vec, direct_vec)), default=0.0
        )
    values = phi_vec if phi_vec is not None else direct_vec

    dropped = ctx.dropped_bstar()
    if dropped > 0.0 and certified:
        # error relay: correlation values are bounded by 1, so dropped
        # reads perturb the fixed point by at most dropped/(1 - bound)
        truncation_tail = dropped / (1.0 - bound)
    else:
        truncation_tail = dropped

    table = {config: v for config, v in zip(ctx.domain, values)}
    table[EMPTY_CONFIG] = 1.0
    solution = SupportedFunction(window, ctx.k_max, table)
    report = SolveReport(
        method=method,
        unknowns=len(ctx.domain),
        iterations=iterations,
        max_iters=limit,
        final_update_norm=update_norm,
        residual_norm=residual,
        operator_norm_bound=bound,
        empirical_contraction_rate=rate,
        certified=certified,
        overridden=overridden,
        truncation_tail=truncation_tail,
        direct_deviation=direct_deviation,
        tail_bounds=None,
        notes=notes,
    )
    return solution, report, bounds


def solve_finite_volume(
    field: OnePointField,
    window: Iterable[tuple],
    truncation: KernelTruncation = EXACT_TRUNCATION,
    tol: float = DEFAULT_TOL,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    k_max: int | None = None,
    method: str = "iterative",
    override_gate: bool = False,
    threads: int = 1,
    max_iters: int | None = None,
    initial: str = "delta",
    max_unknowns: int = DEFAULT_MAX_UNKNOWNS,
) -> tuple:
    """Solve the window-projected correlation equation.

    With the default k_max (the window size) and a finite-range field the
    materialized rows reproduce the finite-volume equation exactly, so the
    fixed point is the exact finite-volume correlation function."""
    window = frozenset(window)
    if not window:
        raise DomainError("window must be nonempty")
    solution, report, _ = _solve(
        field,
        window,
        len(window) if k_max is None else k_max,
        truncation,
        True,
        tol,
        residual_tol,
        method,
        override_gate,
        threads,
        max_iters,
        initial,
        max_unknowns,
        notes=("finite-volume",),
    )
    return solution, report


def solve_infinite_volume(
    field: OnePointField,
    window: Iterable[tuple],
    truncation: KernelTruncation = EXACT_TRUNCATION,
    tol: float = DEFAULT_TOL,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    k_max: int = 4,
    method: str = "iterative",
    override_gate: bool = False,
    threads: int = 1,
    max_iters: int | None = None,
    initial: str = "delta",
    max_unknowns: int = DEFAULT_MAX_UNKNOWNS,
) -> tuple:
    """Iterate the unprojected operator with reads confined to the window.

    Reads outside the window (or deeper than k_max) are 0; their absolute
    row mass is folded into the report's truncation_tail.  Values are
    trusted only for supports deep inside the window: when the gate is
    certified the report carries (depth, bound) pairs quantifying the
    finite-window error at each interior depth."""
    window = frozenset(window)
    if not window:
        raise DomainError("window must be nonempty")
    solution, report, bounds = _solve(
        field,
        window,
        k_max,
        truncation,
        False,
        tol,
        residual_tol,
        method,
        override_gate,
        threads,
        max_iters,
        initial,
        max_unknowns,
        notes=(
            "infinite-volume window iteration; trust values only for "
            "supports deep inside the window",
        ),
    )
    if report.certified:
        depth = 1
        pairs = []
        while interior(window, depth):
            pairs.append((depth, epsilon_bound(field, depth, bounds=bounds)))
            depth += 1
        report = dataclasses.replace(report, tail_bounds=tuple(pairs))
    return solution, report


@dataclass(frozen=True)
class NormCertificate:
    bound: float
    empirical: float | None

    @property
    def certified(self) -> bool:
        return self.bound < 1.0


def operator_norm_certificate(
    field: OnePointField, report: SolveReport | None = None
) -> NormCertificate:
    """Certified upper bound on the operator norm (conservative constant
    variant), with the observed iteration rate as an empirical check."""
    bounds = field_bounds(field)
    empirical = report.empirical_contraction_rate if report is not None else None
    return NormCertificate(bounds.contraction_lhs, empirical)


def delta_norm(field: OnePointField) -> float:
    """Norm of the free term: per site, the total conditional weight of
    the non-vacuum spins with empty boundary."""
    spins = field.spins
    vac = spins.vacuum_index
    if field.homogeneous:
        sites = [field.origin()]
    else:
        sites = getattr(field, "scan_sites", None)
        if not sites:
            raise ModelDefinitionError(
                "delta_norm needs scan_sites for inhomogeneous fields"
            )
    best = 0.0
    for t in sites:
        s = math.fsum(
            math.exp(field.eval(t, {}, a, vac)) for a in spins.star_indices
        )
        best = max(best, s / (1.0 + s))
    return best


def tail_f_bound(
    field: OnePointField,
    r: int,
    bounds: FieldBounds | None = None,
    decay=None,
) -> float:
    """Window-replacement tail: how much one operator application can
    move mass across a distance-r boundary.  Derived from the proof
    chain, not a quoted formula; 0 beyond the interaction radius."""
    if r < 0:
        raise DomainError("distance must be >= 0")
    if bounds is None:
        bounds = field_bounds(field)
    if decay is None:
        decay = decay_sums(field)
    sigma = decay.sigma_tail(r)
    envelope = math.exp(math.exp(sigma) - 1.0) - 1.0
    return 4.0 * bounds.c1_conservative * math.exp(bounds.norm_delta1) * envelope


def epsilon_bound(
    field: OnePointField,
    d: int,
    bounds: FieldBounds | None = None,
    contraction: float | None = None,
) -> float:
    """Certified gap between finite-volume and infinite-volume correlation
    values for supports at interior depth d (distance to the window
    complement strictly greater than d - 1).

    Minimizes 2k^(n+1)/(1-k) + 2f(r)/(1-k)^2 over integer splits with
    n*r <= d-1, against the trivial bound 2/(1-k); scaled by the free-term
    norm.  Derived from the proof chain (reconstruction, not a quoted
    formula).  With contraction given, that rate is used instead of the
    certified bound (callers must label such output as empirical)."""
    if d < 1:
        raise DomainError("depth must be >= 1")
    if bounds is None:
        bounds = field_bounds(field)
    k = bounds.contraction_lhs if contraction is None else contraction
    if not 0.0 <= k < 1.0:
        raise GateNotCertifiedError(
            f"contraction constant {k!r} is not below 1; no certified bound"
        )
    decay = decay_sums(field)
    dnorm = delta_norm(field)
    best = 2.0 / (1.0 - k)
    for n in range(1, d):
        r = (d - 1) // n
        if r < 1:
            break
        f_r = tail_f_bound(field, r, bounds, decay)
        candidate = (
            2.0 * k ** (n + 1) / (1.0 - k) + 2.0 * f_r / (1.0 - k) ** 2
        )
        best = min(best, candidate)
    return dnorm * best


@dataclass(frozen=True)
class ConvergencePoint:
    window_size: int
    depth: int
    max_deviation: float
    epsilon: float | None
    iterations: int
    residual: float


@dataclass(frozen=True)
class ConvergenceSeries:
    points: tuple
    reference_size: int
    reference_method: str
    epsilon_source: str
    contraction: float | None


def convergence_profile(
    field: OnePointField,
    windows: Sequence[Iterable[tuple]],
    probes: Sequence[Configuration],
    tol: float = DEFAULT_TOL,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    threads: int = 1,
    override_gate: bool = False,
    solver_limit: int = 2 ** 10,
    budget: int = DEFAULT_ENUM_BUDGET,
    truncation: KernelTruncation = EXACT_TRUNCATION,
) -> ConvergenceSeries:
    """Deviation-vs-depth study: how fast window correlation values
    approach the large-volume limit.

    The last (largest) window serves as the reference; the emitted series
    covers the remaining windows.  Each window is solved by the iterative
    route when its domain is small and by targeted exact enumeration
    otherwise, so the series never leans on a single numerical path."""
    vols = [frozenset(w) for w in windows]
    if len(vols) < 2:
        raise DomainError("need at least two windows (the last is the reference)")
    for small, big in zip(vols, vols[1:]):
        if not small < big:
            raise DomainError("windows must be strictly increasing")
    if not probes:
        raise DomainError("need at least one probe configuration")
    for probe in probes:
        if not probe:
            raise DomainError("probes must be nonempty configurations")
        if not probe.support <= vols[0]:
            raise DomainError(
                f"probe {probe!r} is not supported in the smallest window"
            )

    spins = field.spins
    bounds = field_bounds(field)
    certified = bounds.passes
    if not certified and not override_gate:
        raise GateNotCertifiedError(
            "contraction gate fails: "
            f"max(C1, C1') (1 + C2) = {bounds.contraction_lhs!r} >= 1; "
            "run with the gate override to proceed anyway (unverified)"
        )

    reference = vols[-1]
    if spins.size ** len(reference) <= budget:
        ref_values = rho_probe(field, reference, probes, threads=threads, budget=budget)
        reference_method = "enumeration"
    else:
        k_max = max(4, max(len(p) for p in probes))
        sol, _ = solve_infinite_volume(
            field,
            reference,
            truncation,
            tol,
            residual_tol,
            k_max=k_max,
            override_gate=override_gate,
            threads=threads,
        )
        ref_values = {p: sol.value(p) for p in probes}
        reference_method = "window-iteration"

    rates: list = []
    raw_points: list = []
    for window in vols[:-1]:
        depth = min(
            min(distance_to_complement(site, window) for site in probe.support)
            for probe in probes
        )
        unknowns = spins.size ** len(window) - 1
        if unknowns <= solver_limit:
            solution, report = solve_finite_volume(
                field,
                window,
                truncation,
                tol,
                residual_tol,
                override_gate=override_gate,
                threads=threads,
            )
            values = {p: solution.value(p) for p in probes}
            iterations = report.iterations
            residual = report.residual_norm
            rates.append(report.empirical_contraction_rate)
        else:
            values = rho_probe(field, window, probes, threads=threads, budget=budget)
            iterations = 0
            residual = 0.0
        deviation = max(abs(values[p] - ref_values[p]) for p in probes)
        raw_points.append((len(window), depth, deviation, iterations, residual))

    if certified:
        epsilon_source = "certified"
        contraction: float | None = bounds.contraction_lhs
    else:
        usable = [r for r in rates if 0.0 < r < 1.0]
        if usable:
            epsilon_source = "empirical"
            contraction = max(usable)
        else:
            epsilon_source = "unavailable"
            contraction = None

    points = []
    for size, depth, deviation, iterations, residual in raw_points:
        if contraction is not None and depth >= 1:
            eps = epsilon_bound(field, depth, bounds, contraction=(
                None if certified else contraction
            ))
        else:
            eps = None
        points.append(
            ConvergencePoint(size, depth, deviation, eps, iterations, residual)
        )
    return ConvergenceSeries(
        tuple(points),
        len(reference),
        reference_method,
        epsilon_source,
        contraction,
    )


def write_series(path: str, series: ConvergenceSeries, headers: Mapping[str, str] | None = None) -> None:
    """Emit the convergence series as delimiter-separated text."""
    lines = []
    merged = dict(headers or {})
    merged["reference_size"] = str(series.reference_size)
    merged["reference_method"] = series.reference_method
    merged["epsilon_source"] = series.epsilon_source
    if series.contraction is not None:
        merged["contraction"] = repr(series.contraction)
    for key, value in merged.items():
        lines.append(f"# {key} = {value}")
    lines.append("window_size,d,max_abs_deviation,epsilon_bound,iterations,residual")
    for p in series.points:
        eps = "" if p.epsilon is None else repr(p.epsilon)
        lines.append(
            f"{p.window_size},{p.depth},{p.max_deviation!r},{eps},"
            f"{p.iterations},{p.residual!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
