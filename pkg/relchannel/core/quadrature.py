"""
Numerical integration engine.

Integrals over time-ordered simplices are evaluated as iterated integrals with
clamped limits. Each axis uses an adaptive, vectorized Gauss-Kronrod (7/15)
rule; the innermost axis evaluates all of its nodes in one integrand call so
that an integrand may return values for every regulator rung at once.

The integration domain is a polytope described by difference constraints
t_u - t_v >= c. Time ordering, window clamps and the clamps produced by
collapsing a delta-supported commutator are all constraints of this kind,
which keeps delta-collapse a pure substitution.
"""

import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from ..errors import ConfigError, ConvergenceError

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], Union[np.ndarray, complex, float]]

# Kronrod 15-point nodes (non-negative half) and weights; Gauss 7-point weights
# for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-XGK[:7], [0.0], XGK[6::-1]])
KRONROD_WEIGHTS = np.concatenate([WGK[:7], [WGK[7]], WGK[6::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 13]] = WG[0]
GAUSS_WEIGHTS[[3, 11]] = WG[1]
GAUSS_WEIGHTS[[5, 9]] = WG[2]
GAUSS_WEIGHTS[7] = WG[3]

_EPMACH = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny

# Inner levels of an iterated integral run at this fraction of the outer
# tolerance so that the error they pass up stays below it.
INNER_TOLERANCE = 0.25


@dataclass(frozen=True)
class QuadraturePolicy:
    """Tolerances, subdivision budget and regulator ladder settings."""

    rel_tol: float = 1e-6
    abs_floor: float = 1e-12
    max_subdivisions: int = 200
    oscillation_factor: float = 8.0
    eps_start: float = 0.1
    eps_rungs: int = 8
    eps_order: int = 3

    def __post_init__(self) -> None:
        errors = []
        if not self.rel_tol > 0:
            errors.append(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_floor > 0:
            errors.append(f"abs_floor must be > 0, got {self.abs_floor}")
        if int(self.max_subdivisions) < 1:
            errors.append(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")
        if not self.oscillation_factor >= 4:
            errors.append(f"oscillation_factor must be >= 4, got {self.oscillation_factor}")
        if not self.eps_start > 0:
            errors.append(f"eps_start must be > 0, got {self.eps_start}")
        if int(self.eps_rungs) < 3:
            errors.append(f"eps_rungs must be >= 3, got {self.eps_rungs}")
        if int(self.eps_order) < 1:
            errors.append(f"eps_order must be >= 1, got {self.eps_order}")
        if errors:
            raise ConfigError("; ".join(errors))

    def regulator(self, scale: float = 1.0):
        """Halving ε ladder described by this policy, multiplied by `scale`."""
        # local import: correlators depends on this module
        from .correlators import Regulator

        return Regulator.halving(self.eps_start * scale, self.eps_rungs, self.eps_order)

    def tightened(self, factor: float) -> "QuadraturePolicy":
        return replace(self, rel_tol=self.rel_tol * factor, abs_floor=self.abs_floor * factor)


@dataclass
class IntegralResult:
    """Value of an integral with its error bookkeeping.

    `value` is a complex scalar, or an array with one entry per regulator rung
    before ladder extrapolation.
    """

    value: Union[complex, np.ndarray]
    error: float = 0.0
    residual: float = 0.0
    evaluations: int = 0
    warnings: Tuple[str, ...] = ()
    rungs: Optional[Tuple[Tuple[float, complex], ...]] = None

    def __post_init__(self) -> None:
        if self.error < 0:
            raise ValueError("error estimate must be >= 0")

    @property
    def real(self) -> float:
        return float(np.real(self.value))

    def scaled(self, factor: complex) -> "IntegralResult":
        return replace(self, value=self.value * factor, error=self.error * abs(factor),
                       residual=self.residual * abs(factor))

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        return IntegralResult(
            value=self.value + other.value,
            error=self.error + other.error,
            residual=self.residual + other.residual,
            evaluations=self.evaluations + other.evaluations,
            warnings=self.warnings + other.warnings,
        )


def quad_checked(func: Callable[[float], float], a: float, b: float, **kwargs) -> Tuple[float, float]:
    """scipy.integrate.quad that raises ConvergenceError instead of warning."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, error = integrate.quad(func, a, b, **kwargs)[:2]
        except integrate.IntegrationWarning as exc:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                value, error = integrate.quad(func, a, b, **kwargs)[:2]
            raise ConvergenceError(f"quadrature did not converge: {exc}", value=value, error=error) from exc
    return value, error


# --------------------------------------------------------------------------
# Polytope description
# --------------------------------------------------------------------------

class Constraint(NamedTuple):
    """t_upper - t_lower >= offset; None stands for the constant 0."""

    upper: Optional[int]
    lower: Optional[int]
    offset: float


@dataclass(frozen=True)
class OrderedIntegrand:
    """Integrand over k times restricted by difference constraints.

    Pinned axes are not integrated: t_axis = t_partner + shift. `singular`
    lists lines t_u - t_v = c near which the integrand is sharply peaked; they
    only seed subdivision.
    """

    func: Integrand
    k: int
    constraints: Tuple[Constraint, ...]
    pins: Tuple[Tuple[int, int, float], ...] = ()
    weight: complex = 1.0
    singular: Tuple[Constraint, ...] = ()

    @property
    def free_axes(self) -> Tuple[int, ...]:
        pinned = {axis for axis, _, _ in self.pins}
        return tuple(j for j in range(self.k) if j not in pinned)

    def expand(self, free_values: Dict[int, np.ndarray], n: int) -> np.ndarray:
        times = np.empty((self.k, n))
        for axis, values in free_values.items():
            times[axis] = values
        for axis, partner, shift in self.pins:
            times[axis] = times[partner] + shift
        return times


def ordered_integrand(
    func: Integrand,
    k: int,
    window: Tuple[float, float],
    ordered: bool = True,
    singular: Sequence[Constraint] = (),
) -> OrderedIntegrand:
    """Integrand over t_1 >= ... >= t_k in [t_i, t_f] (or the full box)."""
    if k < 1:
        raise ValueError(f"need at least one integration variable, got k={k}")
    t_i, t_f = window
    constraints: List[Constraint] = []
    for j in range(k):
        constraints.append(Constraint(j, None, t_i))
        constraints.append(Constraint(None, j, -t_f))
    if ordered:
        constraints.extend(Constraint(j, j + 1, 0.0) for j in range(k - 1))
    return OrderedIntegrand(func=func, k=k, constraints=tuple(constraints), singular=tuple(singular))


def _substitute(c: Constraint, axis: int, partner: int, shift: float) -> Constraint:
    upper, lower, offset = c
    if upper == axis:
        upper, offset = partner, offset - shift
    if lower == axis:
        lower, offset = partner, offset + shift
    return Constraint(upper, lower, offset)


@dataclass(frozen=True)
class DeltaReduction:
    """Sum over delta loci of reduced integrands, with collapse diagnostics."""

    branches: Tuple[OrderedIntegrand, ...]
    warnings: Tuple[str, ...] = ()

    @property
    def is_zero(self) -> bool:
        return not self.branches


def collapse_delta(
    integrand: OrderedIntegrand,
    support,
    axis: int,
    partner: int,
    axis_first: bool = True,
    tolerance: float = 1e-12,
) -> DeltaReduction:
    """Pin `axis` on each delta locus of a massless commutator.

    The commutator argument is dt = t_first - t_second with `axis` the first
    time when `axis_first` is true. Loci that leave the ordered region are
    dropped; constraints on the pinned time become clamps on `partner`.
    """
    free = integrand.free_axes
    if axis not in free or partner not in free or axis == partner:
        raise ValueError(f"cannot pin axis {axis} on partner {partner} (free axes {free})")

    branches = []
    notes = []
    for locus, weight in zip(support.loci, support.weights):
        shift = locus if axis_first else -locus
        feasible = True
        constraints = []
        for c in integrand.constraints:
            new = _substitute(c, axis, partner, shift)
            if new.upper == new.lower:
                # both sides collapsed onto the partner: a constant condition 0 >= offset
                if new.offset > tolerance:
                    feasible = False
                    break
                if abs(new.offset) <= tolerance:
                    notes.append(f"delta locus dt={locus:+.6g} tangent to the simplex boundary")
                continue
            constraints.append(new)
        if not feasible:
            continue
        singular = tuple(
            s for s in (_substitute(c, axis, partner, shift) for c in integrand.singular)
            if s.upper != s.lower
        )
        branches.append(replace(
            integrand,
            constraints=tuple(constraints),
            pins=integrand.pins + ((axis, partner, shift),),
            weight=integrand.weight * weight,
            singular=singular,
        ))
    return DeltaReduction(tuple(branches), tuple(notes))


# --------------------------------------------------------------------------
# Adaptive Gauss-Kronrod
# --------------------------------------------------------------------------

def _as_matrix(values, n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.ndim == 0:
        return np.full((1, n), arr)
    if arr.ndim == 1:
        return np.broadcast_to(arr, (n,))[None, :]
    return np.broadcast_to(arr, (arr.shape[0], n))


def _kronrod(
    fx: np.ndarray, half: np.ndarray, node_err: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Apply the 7/15 pair to values fx of shape (M, n, 15).

    Returns the interval values, the rule error of each interval and the error
    carried over from inner levels (zero on the innermost axis). Bisection
    only reduces the rule error.
    """
    resk = np.einsum("mik,k->mi", fx, KRONROD_WEIGHTS)
    resg = np.einsum("mik,k->mi", fx, GAUSS_WEIGHTS)
    mean = 0.5 * resk
    resasc = np.einsum("mik,k->mi", np.abs(fx - mean[..., None]), KRONROD_WEIGHTS) * half
    resabs = np.einsum("mik,k->mi", np.abs(fx), KRONROD_WEIGHTS) * half
    err = np.abs(resk - resg) * half

    scaled = np.where(
        (resasc != 0) & (err != 0),
        resasc * np.minimum(1.0, (200.0 * err / np.where(resasc == 0, 1.0, resasc)) ** 1.5),
        err,
    )
    floor = np.where(resabs > _UFLOW / (50 * _EPMACH), 50 * _EPMACH * resabs, 0.0)
    err = np.maximum(scaled, floor).max(axis=0)
    carried = np.zeros_like(err) if node_err is None else half * (node_err @ KRONROD_WEIGHTS)
    return resk * half, err, carried


def _join(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Concatenate interval columns; a single ε-independent row broadcasts."""
    rows = max(left.shape[0], right.shape[0])
    left = np.broadcast_to(left, (rows, left.shape[1]))
    right = np.broadcast_to(right, (rows, right.shape[1]))
    return np.concatenate([left, right], axis=1)


def _adaptive(
    evaluate: Callable[[np.ndarray], Tuple[np.ndarray, Optional[np.ndarray], int]],
    a: float,
    b: float,
    points: Sequence[float],
    policy: QuadraturePolicy,
) -> Tuple[np.ndarray, float, int]:
    """Globally adaptive bisection; evaluates all pending intervals at once.

    Convergence is judged on the rule error alone. Error carried over from
    inner levels is added to the returned estimate.
    """
    edges = np.unique(np.concatenate([[a, b], [p for p in points if a < p < b]]))
    lo = edges[:-1]
    hi = edges[1:]
    values = None
    errors = np.empty(0)
    carried = np.empty(0)
    pending_lo, pending_hi = lo, hi
    keep_lo, keep_hi = np.empty(0), np.empty(0)
    evaluations = 0

    while True:
        center = 0.5 * (pending_lo + pending_hi)
        half = 0.5 * (pending_hi - pending_lo)
        nodes = center[:, None] + half[:, None] * NODES[None, :]
        fx, node_err, count = evaluate(nodes.ravel())
        evaluations += count
        fx = fx.reshape(fx.shape[0], len(center), 15)
        if node_err is not None:
            node_err = node_err.reshape(len(center), 15)
        new_values, new_errors, new_carried = _kronrod(fx, half, node_err)

        values = new_values if values is None else _join(values, new_values)
        errors = np.concatenate([errors, new_errors])
        carried = np.concatenate([carried, new_carried])
        keep_lo = np.concatenate([keep_lo, pending_lo])
        keep_hi = np.concatenate([keep_hi, pending_hi])

        total = values.sum(axis=1)
        rule_err = float(errors.sum())
        tol = max(policy.rel_tol * float(np.max(np.abs(total))), policy.abs_floor)
        if rule_err <= tol:
            inner_err = float(carried.sum())
            if inner_err > tol:
                logger.debug("inner-level error %.3e exceeds tolerance %.3e", inner_err, tol)
            return total, rule_err + inner_err, evaluations
        if len(errors) >= policy.max_subdivisions:
            raise ConvergenceError(
                "subdivision budget exhausted",
                value=total if len(total) > 1 else complex(total[0]),
                error=rule_err + float(carried.sum()),
            )

        local = tol * (keep_hi - keep_lo) / (b - a)
        split = np.flatnonzero(errors > local)
        if split.size == 0:
            split = np.array([int(np.argmax(errors))])
        budget = policy.max_subdivisions - len(errors)
        split = split[np.argsort(errors[split])[::-1][:max(budget, 1)]]

        mid = 0.5 * (keep_lo[split] + keep_hi[split])
        pending_lo = np.concatenate([keep_lo[split], mid])
        pending_hi = np.concatenate([mid, keep_hi[split]])
        mask = np.ones(len(errors), dtype=bool)
        mask[split] = False
        values, errors, carried = values[:, mask], errors[mask], carried[mask]
        keep_lo, keep_hi = keep_lo[mask], keep_hi[mask]


def _oscillation_points(a: float, b: float, frequency: Optional[float], factor: float) -> List[float]:
    if not frequency:
        return []
    period = 2.0 * math.pi / abs(frequency)
    width = 15.0 * period / factor
    count = int(math.floor((b - a) / width))
    return [a + width * j for j in range(1, count + 1)]


def integrate_polytope(
    integrand: OrderedIntegrand,
    policy: QuadraturePolicy,
    frequency: Optional[float] = None,
) -> IntegralResult:
    """Iterated adaptive integration of an OrderedIntegrand (weight applied)."""
    free = integrand.free_axes
    n_levels = len(free)
    inner_policy = policy.tightened(INNER_TOLERANCE)

    def bounds(axis: int, fixed: Dict[int, float]) -> Tuple[float, float]:
        lo, hi = -math.inf, math.inf
        for upper, lower, offset in integrand.constraints:
            if upper == axis and (lower is None or lower in fixed):
                lo = max(lo, offset + (fixed[lower] if lower is not None else 0.0))
            elif lower == axis and (upper is None or upper in fixed):
                hi = min(hi, (fixed[upper] if upper is not None else 0.0) - offset)
        return lo, hi

    def breakpoints(axis: int, fixed: Dict[int, float], lo: float, hi: float) -> List[float]:
        pts = []
        for upper, lower, offset in integrand.singular:
            if upper == axis and (lower is None or lower in fixed):
                pts.append(offset + (fixed[lower] if lower is not None else 0.0))
            elif lower == axis and (upper is None or upper in fixed):
                pts.append((fixed[upper] if upper is not None else 0.0) - offset)
        pts.extend(_oscillation_points(lo, hi, frequency, policy.oscillation_factor))
        return pts

    def level(depth: int, fixed: Dict[int, float]) -> Tuple[np.ndarray, float, int]:
        axis = free[depth]
        lo, hi = bounds(axis, fixed)
        if not hi > lo:
            return np.zeros(1, dtype=complex), 0.0, 0
        pts = breakpoints(axis, fixed, lo, hi)

        if depth == n_levels - 1:
            def evaluate(x: np.ndarray):
                columns = {ax: np.full(x.size, val) for ax, val in fixed.items()}
                columns[axis] = x
                times = integrand.expand(columns, x.size)
                return _as_matrix(integrand.func(times), x.size), None, x.size
        else:
            def evaluate(x: np.ndarray):
                results = []
                errs = np.empty(x.size)
                count = 0
                for i, xi in enumerate(x):
                    inner = dict(fixed)
                    inner[axis] = float(xi)
                    val, err, n = level(depth + 1, inner)
                    results.append(val)
                    errs[i] = err
                    count += n
                width = max(len(r) for r in results)
                out = np.zeros((width, x.size), dtype=complex)
                for i, r in enumerate(results):
                    out[:, i] = r
                return out, errs, count

        return _adaptive(evaluate, lo, hi, pts, policy if depth == 0 else inner_policy)

    value, error, evaluations = level(0, {})
    value = value * integrand.weight
    logger.debug("integrated %d-dim polytope: %d evaluations, error %.3e", n_levels, evaluations, error)
    return IntegralResult(
        value=complex(value[0]) if value.shape[0] == 1 else value,
        error=error * abs(integrand.weight),
        evaluations=evaluations,
    )


def integrate_simplex(
    f: Integrand,
    k: int,
    window: Tuple[float, float],
    policy: Optional[QuadraturePolicy] = None,
    frequency: Optional[float] = None,
    singular: Sequence[Constraint] = (),
) -> IntegralResult:
    """Integrate f over t_1 >= t_2 >= ... >= t_k in the window, k <= 4.

    `f` receives an array of shape (k, N) and returns N values (or an (M, N)
    array, one row per regulator rung).
    """
    if k not in (1, 2, 3, 4):
        raise ValueError(f"simplex dimension must be 1..4, got {k}")
    policy = policy or QuadraturePolicy()
    return integrate_polytope(ordered_integrand(f, k, window, True, singular), policy, frequency)


def integrate_box(
    f: Integrand,
    k: int,
    window: Tuple[float, float],
    policy: Optional[QuadraturePolicy] = None,
    frequency: Optional[float] = None,
    singular: Sequence[Constraint] = (),
) -> IntegralResult:
    """Integrate f over the full hypercube [t_i, t_f]^k by iterated 1D rules."""
    policy = policy or QuadraturePolicy()
    return integrate_polytope(ordered_integrand(f, k, window, False, singular), policy, frequency)


def integrate_reduction(
    reduction: DeltaReduction,
    policy: QuadraturePolicy,
    frequency: Optional[float] = None,
    components: int = 1,
) -> IntegralResult:
    """Sum the branch integrals of a delta-collapsed integrand."""
    if reduction.is_zero:
        zero = 0j if components == 1 else np.zeros(components, dtype=complex)
        return IntegralResult(value=zero, warnings=reduction.warnings)
    total = None
    for branch in reduction.branches:
        if not branch.free_axes:
            # fully collapsed: a single point evaluation
            times = branch.expand({}, 1)
            value = _as_matrix(branch.func(times), 1)[:, 0] * branch.weight
            part = IntegralResult(value=complex(value[0]) if value.shape[0] == 1 else value, evaluations=1)
        else:
            part = integrate_polytope(branch, policy, frequency)
        total = part if total is None else total + part
    total.warnings = total.warnings + reduction.warnings
    return total


# --------------------------------------------------------------------------
# Regulator ladder
# --------------------------------------------------------------------------

def _neville_at_zero(eps: np.ndarray, values: np.ndarray) -> complex:
    table = list(values.astype(complex))
    n = len(eps)
    for level in range(1, n):
        for i in range(n - level):
            e_lo, e_hi = eps[i], eps[i + level]
            table[i] = (e_lo * table[i + 1] - e_hi * table[i]) / (e_lo - e_hi)
    return table[0]


def extrapolate_ladder(
    values: Sequence[Tuple[float, complex]],
    order: int = 3,
    noise: float = 0.0,
) -> Tuple[complex, float]:
    """Polynomial (Richardson) extrapolation of (ε, value) pairs to ε = 0.

    Uses the `order + 1` smallest rungs; the residual is the difference to the
    extrapolation of one order less. `noise` is the absolute level below which
    rung-to-rung changes are not taken as evidence of divergence.
    """
    if len(values) < 3:
        raise ValueError(f"ladder needs at least 3 rungs, got {len(values)}")
    eps = np.array([float(e) for e, _ in values])
    vals = np.array([complex(v) for _, v in values])
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("ladder ε values must be positive and strictly decreasing")

    steps = np.abs(np.diff(vals))
    scale = float(np.max(np.abs(vals)))
    floor = max(noise, 1e-13 * scale)
    if len(steps) >= 2 and steps[-1] > floor and steps[-1] > 1.5 * steps[-2]:
        raise ConvergenceError("ladder divergent", value=complex(vals[-1]),
                               rungs=list(zip(eps.tolist(), vals.tolist())))

    order = max(1, min(order, len(vals) - 1))
    best = _neville_at_zero(eps[-(order + 1):], vals[-(order + 1):])
    lower = _neville_at_zero(eps[-order:], vals[-order:])
    return complex(best), float(abs(best - lower))


def ladder_limit(result: IntegralResult, regulator) -> IntegralResult:
    """Collapse a per-rung IntegralResult to its ε → 0 limit."""
    rungs = np.atleast_1d(result.value)
    if len(rungs) != len(regulator.ladder):
        raise ValueError(f"expected {len(regulator.ladder)} rungs, got {len(rungs)}")
    pairs = list(zip(regulator.ladder, rungs.tolist()))
    value, residual = extrapolate_ladder(pairs, regulator.order, noise=10.0 * result.error)
    return IntegralResult(
        value=value,
        error=result.error,
        residual=residual,
        evaluations=result.evaluations,
        warnings=result.warnings,
        rungs=tuple(pairs),
    )
