"""
Two-point functions of a free scalar field in 3+1 Minkowski spacetime.

Scalar entry points (`wightman`, `commutator_eps`, `feynman`,
`positive_frequency`) take one (dt, r) pair and a Regulator. The `*_array`
variants evaluate on arrays of time differences for every rung of a regulator
ladder at once and return an array of shape (rungs, points); they are what the
time-domain integrands use.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

from ..errors import ConvergenceError, PhysicsError
from .quadrature import QuadraturePolicy, quad_checked

logger = logging.getLogger(__name__)

FOUR_PI2 = 4.0 * math.pi ** 2

# Below this separation the mode integral switches to its r -> 0 limit.
SMALL_SEPARATION = 1e-9

# The damped mode integrand is cut where ε·E_p reaches this value.
DAMPING_CUTOFF = 40.0

WIGHTMAN_METHODS = ("closed", "modes", "bessel")


@dataclass(frozen=True)
class Regulator:
    """iε regulator: a working ε plus the ladder used for ε → 0 extrapolation."""

    ladder: Tuple[float, ...] = tuple(0.1 * 0.5 ** j for j in range(8))
    order: int = 3
    eps: Optional[float] = None

    def __post_init__(self) -> None:
        ladder = tuple(float(e) for e in self.ladder)
        if not ladder:
            raise ValueError("regulator ladder is empty")
        if any(e <= 0 for e in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError(f"regulator ladder must be positive and strictly decreasing, got {ladder}")
        object.__setattr__(self, "ladder", ladder)
        if self.eps is None:
            object.__setattr__(self, "eps", ladder[-1])
        elif not self.eps > 0:
            raise ValueError(f"ε must be > 0, got {self.eps}")

    @classmethod
    def halving(cls, start: float = 0.1, rungs: int = 8, order: int = 3) -> "Regulator":
        return cls(ladder=tuple(start * 0.5 ** j for j in range(rungs)), order=order)

    @classmethod
    def single(cls, eps: float) -> "Regulator":
        """Regulator for one fixed ε (no extrapolation)."""
        return cls(ladder=(eps,), eps=eps)

    def column(self) -> np.ndarray:
        """Ladder as an (rungs, 1) array for broadcasting against points."""
        return np.asarray(self.ladder)[:, None]


@dataclass(frozen=True)
class CommutatorSupport:
    """Massless commutator (i/4πr)(δ(dt + r) − δ(dt − r)) as two weighted loci."""

    separation: float

    def __post_init__(self) -> None:
        if not self.separation > 0:
            raise PhysicsError(f"commutator support needs r > 0, got {self.separation}")

    @property
    def loci(self) -> Tuple[float, float]:
        return (self.separation, -self.separation)

    @property
    def weights(self) -> Tuple[complex, complex]:
        w = 1.0 / (4.0 * math.pi * self.separation)
        return (-1j * w, 1j * w)

    @property
    def weight_magnitude(self) -> float:
        return 1.0 / (4.0 * math.pi * self.separation)


# --------------------------------------------------------------------------
# Vectorized forms
# --------------------------------------------------------------------------

def wightman_array(m: float, dt: np.ndarray, r: float, eps: np.ndarray) -> np.ndarray:
    """W(dt, r) for every ε; dt has shape (N,), eps (R,) or (R, 1) -> (R, N)."""
    dt = np.asarray(dt, dtype=float)[None, :]
    eps = np.asarray(eps, dtype=float).reshape(-1, 1)
    tau = dt - 1j * eps
    if m == 0:
        return -1.0 / (FOUR_PI2 * (tau * tau - r * r))
    root = np.sqrt(r * r - tau * tau)
    return m * special.kv(1, m * root) / (FOUR_PI2 * root)


def commutator_array(m: float, dt: np.ndarray, r: float, eps: np.ndarray) -> np.ndarray:
    dt = np.asarray(dt, dtype=float)
    return wightman_array(m, dt, r, eps) - wightman_array(m, -dt, r, eps)


def feynman_array(m: float, dt: np.ndarray, r: float, eps: np.ndarray) -> np.ndarray:
    return wightman_array(m, np.abs(np.asarray(dt, dtype=float)), r, eps)


# --------------------------------------------------------------------------
# Scalar entry points
# --------------------------------------------------------------------------

def _mode_integral(m: float, dt: float, r: float, eps: float, policy: QuadraturePolicy) -> complex:
    """(1/4π²r) ∫ p sin(pr)/E e^{−iE dt − εE} dp, or its r → 0 limit."""
    e_max = DAMPING_CUTOFF / eps
    p_max = math.sqrt(max(e_max * e_max - m * m, 0.0))
    if p_max == 0.0:
        return 0j

    def energy(p: float) -> float:
        return math.sqrt(p * p + m * m)

    kwargs = dict(limit=max(policy.max_subdivisions, 2000), epsabs=policy.abs_floor, epsrel=policy.rel_tol)
    try:
        if r < SMALL_SEPARATION:
            def re(p):
                e = energy(p)
                return p * p / e * math.cos(e * dt) * math.exp(-eps * e)

            def im(p):
                e = energy(p)
                return -p * p / e * math.sin(e * dt) * math.exp(-eps * e)

            re_val, _ = quad_checked(re, 0.0, p_max, **kwargs)
            im_val, _ = quad_checked(im, 0.0, p_max, **kwargs)
            return complex(re_val, im_val) / FOUR_PI2

        def re_w(p):
            e = energy(p)
            return p / e * math.cos(e * dt) * math.exp(-eps * e)

        def im_w(p):
            e = energy(p)
            return -p / e * math.sin(e * dt) * math.exp(-eps * e)

        re_val, _ = quad_checked(re_w, 0.0, p_max, weight="sin", wvar=r, **kwargs)
        im_val, _ = quad_checked(im_w, 0.0, p_max, weight="sin", wvar=r, **kwargs)
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"Wightman mode integral failed at m={m}, dt={dt}, r={r}, ε={eps}",
            value=exc.value, error=exc.error,
        ) from exc
    return complex(re_val, im_val) / (FOUR_PI2 * r)


def wightman(
    m: float,
    dt: float,
    r: float,
    reg: Optional[Regulator] = None,
    method: Optional[str] = None,
    policy: Optional[QuadraturePolicy] = None,
) -> complex:
    """Wightman function ⟨0|φ(t, x)φ(t − dt, x + r)|0⟩ at the regulator's ε.

    The massless default is the closed form; massive fields default to the
    damped mode integral. `method="bessel"` selects the K₁ closed form.
    """
    if r < 0:
        raise PhysicsError(f"separation must be >= 0, got {r}")
    if m < 0:
        raise PhysicsError(f"field mass must be >= 0, got {m}")
    reg = reg or Regulator()
    if method is None:
        method = "closed" if m == 0 else "modes"
    if method not in WIGHTMAN_METHODS:
        raise ValueError(f"unknown Wightman method {method!r}")

    if method == "modes":
        return _mode_integral(m, float(dt), float(r), reg.eps, policy or QuadraturePolicy(rel_tol=1e-10, abs_floor=1e-14))
    if method == "closed" and m != 0:
        method = "bessel"
    if method == "bessel" and m == 0:
        method = "closed"
    return complex(wightman_array(m, np.array([float(dt)]), float(r), np.array([reg.eps]))[0, 0])


def commutator_eps(m: float, dt: float, r: float, reg: Optional[Regulator] = None, **kwargs) -> complex:
    """Regularized commutator W(dt) − W(−dt); antisymmetric in dt for every ε."""
    return wightman(m, dt, r, reg, **kwargs) - wightman(m, -dt, r, reg, **kwargs)


def commutator_distributional(r: float, m: float = 0.0) -> CommutatorSupport:
    """Delta-supported massless commutator at separation r."""
    if m > 0:
        raise PhysicsError("distributional form implemented for massless only")
    return CommutatorSupport(float(r))


def feynman(m: float, dt: float, r: float, reg: Optional[Regulator] = None, **kwargs) -> complex:
    """Time-ordered two-point function: W(|dt|, r)."""
    return wightman(m, abs(dt), r, reg, **kwargs)


def positive_frequency(m: float, dt: float, r: float, reg: Optional[Regulator] = None, **kwargs) -> complex:
    """⟨0|φ⁺(x)φ⁻(y)|0⟩; in the free vacuum this is the Wightman function."""
    return wightman(m, dt, r, reg, **kwargs)


def ladder_values(func, m: float, dt: float, r: float, reg: Regulator, **kwargs) -> Sequence[Tuple[float, complex]]:
    """(ε, value) pairs of a scalar correlator over the regulator ladder."""
    return [(eps, func(m, dt, r, Regulator.single(eps), **kwargs)) for eps in reg.ladder]
