"""
Vacuum entanglement between the detectors and the Casimir energy.

All momentum integrals are reduced to radial ones with the solid-angle
identity ∫dΩ e^{ip·L} = 4π sin(pL)/(pL). Two-momentum Casimir integrals are
factorized with a Laplace representation of the energy denominator
1/(E₁ + E₂ + c) = ∫₀^∞ ds e^{−s(E₁ + E₂ + c)}, leaving one s-integral of
products of the radial transforms

    G_n(s) = 1/(2π²L) ∫₀^∞ dp p sin(pL) e^{−sE_p − εp} / (E_p (E_p + ΔE)^n).

For a massless field G_0, G_1 and G_2 have closed forms in the exponential
integral E₁; massive fields use oscillatory (QAWF) quadrature.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from ..errors import ConvergenceError, PhysicsError
from .correlators import Regulator
from .quadrature import QuadraturePolicy, extrapolate_ladder, quad_checked

logger = logging.getLogger(__name__)

TWO_PI2 = 2.0 * math.pi ** 2
PSD_TOLERANCE = 1e-10
WEAK_COUPLING_LIMIT = 0.3
REGIMES = ("dE>>m", "dE<<m")

# |w| above which e^w E₁(w) is taken from its asymptotic series.
ASYMPTOTIC_RADIUS = 40.0
ASYMPTOTIC_TERMS = 18

CASIMIR_TOLERANCE = 1e-11


# --------------------------------------------------------------------------
# Smeared vacuum integrals
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VacuumIntegrals:
    """R(ΔE, L), S(ΔE), T(ΔE, L) for Gaussian smearing of width ΔX."""

    r: float
    s: float
    t: float
    energy_gap: float
    distance: float
    smearing: float
    mass: float = 0.0
    error: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.r, self.s, self.t)):
            raise PhysicsError("vacuum integrals must be finite")
        if not self.s > 0:
            raise PhysicsError(f"S must be > 0, got {self.s}")


def _momentum_cutoff(energy_gap: float, distance: float, smearing: float, mass: float) -> float:
    return max(20.0 / smearing, 50.0 * max(energy_gap, mass, 1.0 / distance))


def _breakpoints(p_max: float, scales: Sequence[float]) -> np.ndarray:
    """Geometric breakpoints covering [0, p_max] around the given scales."""
    low = min(s for s in scales if s > 0)
    points = [0.0]
    edge = low
    while edge < p_max:
        points.append(edge)
        edge *= 4.0
    points.append(p_max)
    return np.array(points)


def _radial(func, edges: np.ndarray, sine: Optional[float] = None, policy: Optional[QuadraturePolicy] = None) -> Tuple[float, float]:
    """∫ func over consecutive intervals, optionally with a sin(ωp) weight."""
    policy = policy or QuadraturePolicy(rel_tol=1e-10, abs_floor=1e-15)
    total, error = 0.0, 0.0
    kwargs = dict(epsabs=policy.abs_floor, epsrel=policy.rel_tol, limit=max(policy.max_subdivisions, 500))
    if sine is not None:
        kwargs.update(weight="sin", wvar=sine)
    for a, b in zip(edges[:-1], edges[1:]):
        value, err = quad_checked(func, float(a), float(b), **kwargs)
        total += value
        error += err
    return total, error


def vacuum_integrals(
    energy_gap: float,
    distance: float,
    smearing: float,
    mass: float = 0.0,
    policy: Optional[QuadraturePolicy] = None,
) -> VacuumIntegrals:
    """Radial evaluation of R, S and T with |f̃(p)|² = e^{−p²ΔX²}."""
    if not energy_gap > 0:
        raise PhysicsError(f"energy gap ΔE must be > 0, got {energy_gap}")
    if not distance > 0:
        raise PhysicsError(f"separation L must be > 0, got {distance}")
    if not smearing > 0:
        raise PhysicsError(f"smearing width ΔX must be > 0, got {smearing}")
    if mass < 0:
        raise PhysicsError(f"field mass must be >= 0, got {mass}")

    gap, width, m = energy_gap, smearing, mass
    p_max = _momentum_cutoff(gap, distance, width, m)
    edges = _breakpoints(p_max, (gap, m, 1.0 / distance, 1.0 / width))

    def energy(p: float) -> float:
        return math.sqrt(p * p + m * m)

    def r_kernel(p: float) -> float:
        e = energy(p)
        return p * math.exp(-(p * width) ** 2) / (2.0 * e * (e + gap) * gap)

    def s_kernel(p: float) -> float:
        e = energy(p)
        return p * p * math.exp(-(p * width) ** 2) / (2.0 * e * (e + gap) ** 2)

    def t_kernel(p: float) -> float:
        e = energy(p)
        return p * math.exp(-(p * width) ** 2) / (2.0 * e * (e + gap) ** 2)

    try:
        s_val, s_err = _radial(s_kernel, edges, policy=policy)
        if distance * p_max < 1e-6:
            # sin(pL)/(pL) = 1 to double precision on the whole range
            r_val, r_err = _radial(lambda p: p * r_kernel(p), edges, policy=policy)
            t_val, t_err = s_val, s_err
        else:
            r_val, r_err = _radial(r_kernel, edges, sine=distance, policy=policy)
            t_val, t_err = _radial(t_kernel, edges, sine=distance, policy=policy)
            r_val, r_err = r_val / distance, r_err / distance
            t_val, t_err = t_val / distance, t_err / distance
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"vacuum integrals failed at ΔE={gap}, L={distance}, ΔX={width}, m={m}",
            value=exc.value, error=exc.error,
        ) from exc

    return VacuumIntegrals(
        r=r_val / TWO_PI2,
        s=s_val / TWO_PI2,
        t=t_val / TWO_PI2,
        energy_gap=gap,
        distance=distance,
        smearing=width,
        mass=m,
        error=(r_err + s_err + t_err) / TWO_PI2,
    )


# --------------------------------------------------------------------------
# Reduced ground state and negativity
# --------------------------------------------------------------------------

def ground_state_reduced(alpha: float, integrals: VacuumIntegrals) -> np.ndarray:
    """Two-detector state of the dressed ground state, basis (ee, eg, ge, gg)."""
    if alpha < 0:
        raise PhysicsError(f"coupling must be >= 0, got {alpha}")
    if alpha > WEAK_COUPLING_LIMIT:
        logger.warning("coupling %.3g exceeds the weak-coupling threshold %.1f", alpha, WEAK_COUPLING_LIMIT)
    a2 = alpha * alpha
    r, s, t = integrals.r, integrals.s, integrals.t
    rho = np.array([
        [0.0, 0.0, 0.0, a2 * r],
        [0.0, a2 * s, a2 * t, 0.0],
        [0.0, a2 * t, a2 * s, 0.0],
        [a2 * r, 0.0, 0.0, 1.0 - 2.0 * a2 * s],
    ], dtype=complex)

    # The displayed state omits the O(α⁴) |ee⟩ population, so its smallest
    # eigenvalue is about −α⁴R².
    tolerance = PSD_TOLERANCE + 4.0 * a2 * a2 * max(abs(r), abs(t), s) ** 2
    lowest = float(np.linalg.eigvalsh(rho).min())
    if lowest < -tolerance:
        raise PhysicsError("perturbative state invalid at this α", diagnostics={"min_eigenvalue": lowest})
    return rho


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Partial transpose over the second qubit."""
    rho = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    return rho.transpose(0, 3, 2, 1).reshape(4, 4)


def negativity(rho: np.ndarray) -> float:
    """Twice the absolute sum of the negative partial-transpose eigenvalues."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise PhysicsError(f"negativity needs a 4×4 state, got shape {rho.shape}")
    eigenvalues = np.linalg.eigvalsh(0.5 * (partial_transpose(rho) + partial_transpose(rho).conj().T))
    return float(2.0 * abs(eigenvalues[eigenvalues < 0].sum()))


def negativity_leading_order(alpha: float, integrals: VacuumIntegrals) -> float:
    """2α² max(|R| − S, 0)."""
    return 2.0 * alpha * alpha * max(abs(integrals.r) - integrals.s, 0.0)


def _regime(energy_gap: float, mass: float, regime: Optional[str]) -> str:
    if regime is None:
        return "dE>>m" if mass <= energy_gap else "dE<<m"
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {', '.join(REGIMES)}")
    return regime


def negativity_asymptotic(
    energy_gap: float,
    distance: float,
    smearing: float,
    mass: float = 0.0,
    regime: Optional[str] = None,
) -> float:
    """Short-distance negativity per unit α²."""
    regime = _regime(energy_gap, mass, regime)
    if distance * energy_gap > 0.1:
        logger.warning("L·ΔE = %.3g is not small; asymptotic negativity is unreliable", distance * energy_gap)
    if distance * mass > 0.1:
        logger.warning("L·m = %.3g is not small; asymptotic negativity is unreliable", distance * mass)
    if distance / smearing < 10.0:
        logger.warning("L/ΔX = %.3g is not large; asymptotic negativity is unreliable", distance / smearing)
    scale = energy_gap if regime == "dE>>m" else mass
    if regime == "dE>>m" and mass > 0.1 * energy_gap:
        logger.warning("ΔE >> m regime requested with m = %.3g, ΔE = %.3g", mass, energy_gap)
    if regime == "dE<<m" and energy_gap > 0.1 * mass:
        logger.warning("ΔE << m regime requested with m = %.3g, ΔE = %.3g", mass, energy_gap)
    value = math.pi / (2.0 * distance * energy_gap) - math.log(1.0 / (scale * smearing))
    return max(value, 0.0) / TWO_PI2


def entanglement_threshold(
    energy_gap: float,
    smearing: float,
    mass: float = 0.0,
    regime: Optional[str] = None,
) -> float:
    """Separation below which the dressed ground state is entangled."""
    regime = _regime(energy_gap, mass, regime)
    scale = energy_gap if regime == "dE>>m" else mass
    argument = 1.0 / (scale * smearing) if scale > 0 else math.inf
    if not 1.0 < argument < math.inf:
        raise PhysicsError(
            "threshold formula outside validity",
            diagnostics={"log_argument": argument, "regime": regime},
        )
    return math.pi / (2.0 * energy_gap * math.log(argument))


# --------------------------------------------------------------------------
# Adiabatic switching
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AdiabaticBound:
    bound: float
    mass: float
    energy_gap: float
    alpha: float
    box_size: float

    @property
    def infinite_box(self) -> bool:
        return math.isinf(self.box_size)


def adiabatic_bound(mass: float, energy_gap: float, alpha: float, box_size: float = math.inf) -> AdiabaticBound:
    """Largest switching rate max|η̇| compatible with adiabatic turn-on."""
    if not alpha > 0:
        raise PhysicsError(f"coupling must be > 0, got {alpha}")
    if not box_size > 0:
        raise PhysicsError(f"box size must be > 0, got {box_size}")
    gap_sq = mass * mass + (0.0 if math.isinf(box_size) else 3.0 * (2.0 * math.pi / box_size) ** 2)
    lowest = math.sqrt(gap_sq)
    bound = math.sqrt(lowest) / alpha * (lowest + energy_gap) ** 2
    return AdiabaticBound(bound, mass, energy_gap, alpha, box_size)


def speed_bound(energy_gap: float, alpha: float) -> float:
    """Largest detector speed that keeps the Casimir approach adiabatic."""
    if not alpha > 0:
        raise PhysicsError(f"coupling must be > 0, got {alpha}")
    if math.isinf(alpha):
        return 0.0
    return energy_gap ** 1.5 / alpha * 32.0 * math.sqrt(2.0) / (3.0 * math.sqrt(3.0))


# --------------------------------------------------------------------------
# Casimir energy
# --------------------------------------------------------------------------

def _exp_e1(w: complex) -> Tuple[complex, complex]:
    """(h, 1 − w h) with h = e^w E₁(w), stable for large |w|."""
    if abs(w) > ASYMPTOTIC_RADIUS:
        # h ~ Σ (−1)^k k!/w^{k+1}
        term = 1.0 / w
        series = term
        for k in range(1, ASYMPTOTIC_TERMS):
            term = -term * k / w
            series += term
        return series, 1.0 - w * series
    h = complex(np.exp(w) * special.exp1(w))
    return h, 1.0 - w * h


class _Transforms:
    """Radial transforms G_0, G_1, G_2 at one regulator value."""

    def __init__(self, energy_gap: float, distance: float, mass: float, eps: float, policy: QuadraturePolicy):
        self.gap = energy_gap
        self.distance = distance
        self.mass = mass
        self.eps = eps
        self.policy = policy

    def __call__(self, s: float) -> Tuple[float, float, float]:
        if self.mass == 0:
            return self._massless(s)
        return self._massive(s)

    def _massless(self, s: float) -> Tuple[float, float, float]:
        a, length = self.gap, self.distance
        u = s + self.eps
        z = complex(u, -length)
        h, rest = _exp_e1(a * z)
        g0 = 1.0 / (TWO_PI2 * (u * u + length * length))
        g1 = h.imag / (TWO_PI2 * length)
        g2 = (rest / a).imag / (TWO_PI2 * length)
        return g0, g1, g2

    def _massive(self, s: float) -> Tuple[float, float, float]:
        a, length, m, eps = self.gap, self.distance, self.mass, self.eps
        values = []
        for n in range(3):
            def kernel(p: float, n: int = n) -> float:
                e = math.sqrt(p * p + m * m)
                return p * math.exp(-s * e - eps * p) / (e * (e + a) ** n)

            value, _ = quad_checked(kernel, 0.0, np.inf, weight="sin", wvar=length,
                                    limlst=200, limit=max(self.policy.max_subdivisions, 500),
                                    epsabs=self.policy.abs_floor)
            values.append(value / (TWO_PI2 * length))
        return tuple(values)


def _casimir_terms_at(energy_gap: float, distance: float, mass: float, eps: float, policy: QuadraturePolicy) -> np.ndarray:
    transforms = _Transforms(energy_gap, distance, mass, eps, policy)
    a = energy_gap
    g1_zero = transforms(0.0)[1]
    single = (0.5 * g1_zero) ** 2 / a

    def two_boson(s: float) -> float:
        g0, g1, g2 = transforms(s)
        return 0.25 * (2.0 * g2 * g0 + 2.0 * g1 * g1)

    def crossed(s: float) -> float:
        _, g1, _ = transforms(s)
        return 0.5 * math.exp(-2.0 * s * a) * g1 * g1

    def resonant(s: float) -> float:
        g0, _, g2 = transforms(s)
        return 0.5 * math.exp(-2.0 * s * a) * g2 * g0

    kwargs = dict(epsabs=0.0, epsrel=policy.rel_tol, limit=max(policy.max_subdivisions, 500))
    # the s-integrands vary on the scales L and 1/ΔE
    split = max(distance, 1.0 / a)
    values = [single]
    for func in (two_boson, crossed, resonant):
        head, _ = quad_checked(func, 0.0, split, **kwargs)
        tail, _ = quad_checked(func, split, np.inf, **kwargs)
        values.append(head + tail)
    return np.array(values)


def casimir_terms(
    energy_gap: float,
    distance: float,
    alpha: float,
    reg: Optional[Regulator] = None,
    mass: float = 0.0,
    policy: Optional[QuadraturePolicy] = None,
) -> Dict[str, float]:
    """The four contributions to the renormalized ground-state shift.

    Keys: "single" (one-boson exchange), "two_boson", "crossed", "resonant",
    each already multiplied by −2α⁴, and "energy" for their sum.
    """
    if not energy_gap > 0:
        raise PhysicsError(f"energy gap ΔE must be > 0, got {energy_gap}")
    if not distance > 0:
        raise PhysicsError(f"separation L must be > 0, got {distance}")
    names = ("single", "two_boson", "crossed", "resonant")
    if alpha == 0:
        return {**{name: 0.0 for name in names}, "energy": 0.0}

    policy = policy or QuadraturePolicy(rel_tol=CASIMIR_TOLERANCE, abs_floor=1e-300)
    if reg is None:
        base = QuadraturePolicy()
        reg = Regulator.halving(base.eps_start * min(distance, 1.0 / energy_gap), base.eps_rungs, base.eps_order)

    rungs = np.array([_casimir_terms_at(energy_gap, distance, mass, eps, policy) for eps in reg.ladder])
    prefactor = -2.0 * alpha ** 4
    out = {}
    for j, name in enumerate(names):
        value, residual = extrapolate_ladder(list(zip(reg.ladder, rungs[:, j])), reg.order)
        out[name] = prefactor * value.real
        logger.debug("Casimir %s term %.6e (ladder residual %.2e)", name, out[name], abs(prefactor) * residual)
    out["energy"] = sum(out[name] for name in names)
    return out


def casimir_energy(
    energy_gap: float,
    distance: float,
    alpha: float,
    reg: Optional[Regulator] = None,
    mass: float = 0.0,
) -> float:
    """Interaction energy δẼ(L) of two pointlike detectors (negative)."""
    return casimir_terms(energy_gap, distance, alpha, reg, mass)["energy"]


def casimir_force_estimates(
    energy_gap: float,
    distance: float,
    alpha: float,
    mass: float = 0.0,
    step: float = 1e-3,
) -> Tuple[float, float, float]:
    """Central-difference dδẼ/dL at steps h and h/2, and their Richardson blend."""
    h = step * distance

    def derivative(width: float) -> float:
        upper = casimir_energy(energy_gap, distance + width, alpha, mass=mass)
        lower = casimir_energy(energy_gap, distance - width, alpha, mass=mass)
        return (upper - lower) / (2.0 * width)

    coarse = derivative(h)
    fine = derivative(0.5 * h)
    return coarse, fine, (4.0 * fine - coarse) / 3.0


def casimir_force(energy_gap: float, distance: float, alpha: float, mass: float = 0.0) -> float:
    """F_C = −∂δẼ/∂L; negative values pull the detectors together."""
    return -casimir_force_estimates(energy_gap, distance, alpha, mass)[2]
