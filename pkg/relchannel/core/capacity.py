"""
Classical product-state capacity, transmission rate and single-use coherent
information of the detector channel.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import optimize, special

from ..errors import ConvergenceError, PhysicsError
from .channel_algebra import apply_channel, complementary_apply, von_neumann_entropy
from .channel_params import ChannelParams

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
DEGENERATE_GAP = 1e-12
PRIOR_AGREEMENT = 1e-6


def binary_entropy(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """H(x) = −x ln x − (1−x) ln(1−x) in nats, with H(0) = H(1) = 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1) or np.any(~np.isfinite(arr)):
        raise PhysicsError(f"binary entropy argument outside [0, 1]: {x!r}")
    value = special.entr(arr) + special.entr(1.0 - arr)
    return float(value) if np.ndim(value) == 0 else value


def _populations(p: ChannelParams):
    excited = p.pe + p.a
    ground = p.pe + p.b
    for name, value in (("P_e + A", excited), ("P_e + B", ground)):
        if not -1e-12 <= value <= 1.0 + 1e-12:
            raise PhysicsError(f"{name} = {value:.6g} outside [0, 1]")
    return min(max(excited, 0.0), 1.0), min(max(ground, 0.0), 1.0)


def holevo_objective(p: ChannelParams, p1: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Mutual information (nats) for prior p₁ on |e⟩⟨e| and 1 − p₁ on |g⟩⟨g|."""
    excited, ground = _populations(p)
    p1 = np.asarray(p1, dtype=float)
    mixed = np.clip(ground + p1 * (excited - ground), 0.0, 1.0)
    value = binary_entropy(mixed) - p1 * binary_entropy(excited) - (1.0 - p1) * binary_entropy(ground)
    return float(value) if np.ndim(value) == 0 else value


@dataclass
class CapacityResult:
    nats: float
    bits: float
    prior: float
    rate: Optional[float] = None
    window: Optional[float] = None
    degenerate: bool = False
    evaluations: int = 0
    bracket_width: float = 0.0
    closed_form_prior: Optional[float] = None
    closed_form_agrees: Optional[bool] = None


def classical_capacity(
    p: ChannelParams,
    window: Optional[float] = None,
    cross_check: bool = True,
) -> CapacityResult:
    """Maximize the Holevo bracket over the prior p₁ ∈ [0, 1].

    `window` (t_f − t_i) turns the capacity into a rate in bits per unit time;
    it defaults to the window of the scenario the parameters came from.
    """
    excited, ground = _populations(p)
    if window is None and p.scenario is not None:
        window = p.scenario.switching.length

    if abs(excited - ground) <= DEGENERATE_GAP:
        logger.debug("A = B: output independent of input, capacity 0")
        return CapacityResult(0.0, 0.0, 0.5, rate=0.0 if window else None, window=window, degenerate=True)

    res = optimize.minimize_scalar(
        lambda x: -holevo_objective(p, x),
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if not res.success:
        raise ConvergenceError(f"capacity optimizer failed: {res.message}", value=-res.fun)
    prior, nats = float(res.x), float(-res.fun)
    for edge in (0.0, 1.0):
        edge_value = holevo_objective(p, edge)
        if edge_value > nats:
            prior, nats = edge, edge_value
    nats = max(nats, 0.0)
    bits = nats / LN2

    result = CapacityResult(
        nats=nats,
        bits=bits,
        prior=prior,
        rate=bits / window if window else None,
        window=window,
        evaluations=int(res.nfev),
        bracket_width=1e-12,
    )
    if cross_check:
        try:
            closed = closed_form_prior(p)
        except (PhysicsError, ConvergenceError) as exc:
            logger.debug("closed-form prior unavailable: %s", exc)
        else:
            result.closed_form_prior = closed
            result.closed_form_agrees = abs(closed - prior) <= PRIOR_AGREEMENT
            if not result.closed_form_agrees:
                logger.debug("closed-form prior %.9g differs from optimizer %.9g", closed, prior)
    return result


def closed_form_prior(p: ChannelParams) -> float:
    """Optimal prior from the stationarity condition, entropies in bits.

    Solves w − log₂(1 − 2ʷ) = (H₂(P_e+B) − H₂(P_e+A))/(A − B) for w < 0 and
    returns p₁ = (2ʷ − P_e − B)/(A − B), which may fall outside [0, 1] when
    the optimum sits on the boundary.
    """
    excited, ground = _populations(p)
    spread = excited - ground
    if abs(spread) <= DEGENERATE_GAP:
        raise PhysicsError("closed-form prior undefined for A = B")
    rhs = (binary_entropy(ground) - binary_entropy(excited)) / (LN2 * spread)

    def stationarity(w: float) -> float:
        return w - math.log2(-math.expm1(w * LN2)) - rhs

    low, high = -60.0, -1e-12
    f_low, f_high = stationarity(low), stationarity(high)
    if f_low * f_high > 0:
        raise ConvergenceError(
            f"closed-form root not bracketed in [{low}, {high}] (g = {f_low:.3g}, {f_high:.3g})",
        )
    w = optimize.brentq(stationarity, low, high, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return (2.0 ** w - ground) / spread


@dataclass
class CoherentInformation:
    nats: float
    clamped: float
    bits: float
    bloch: np.ndarray
    restarts: int


def _bloch_state(x: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(x))
    r = np.zeros(3) if norm == 0 else math.tanh(norm) * x / norm
    theta = 0.5 * (1.0 + r[2])
    gamma = 0.5 * (r[0] - 1j * r[1])
    return np.array([[theta, gamma], [np.conj(gamma), 1.0 - theta]], dtype=complex)


def coherent_information_single_use(
    p: ChannelParams,
    restarts: int = 32,
    seed: int = 0,
    tolerance: float = 1e-8,
) -> CoherentInformation:
    """max over ρ of S(ξ(ρ)) − S(ξᶜ(ρ)); the raw value may be negative."""

    def negative(x: np.ndarray) -> float:
        rho = _bloch_state(x)
        return von_neumann_entropy(complementary_apply(p, rho)) - von_neumann_entropy(apply_channel(p, rho))

    rng = np.random.default_rng(seed)
    best = None
    converged = 0
    for start in rng.normal(scale=1.5, size=(restarts, 3)):
        res = optimize.minimize(negative, start, method="Nelder-Mead",
                                options={"xatol": tolerance, "fatol": tolerance * 1e-2, "maxiter": 4000})
        converged += bool(res.success)
        if best is None or res.fun < best.fun:
            best = res
    if converged == 0:
        raise ConvergenceError("coherent information search did not converge", value=-best.fun)

    nats = float(-best.fun)
    norm = float(np.linalg.norm(best.x))
    bloch = np.zeros(3) if norm == 0 else math.tanh(norm) * best.x / norm
    logger.debug("coherent information %.6g nats (%d/%d restarts converged)", nats, converged, restarts)
    return CoherentInformation(nats=nats, clamped=max(nats, 0.0), bits=nats / LN2, bloch=bloch, restarts=restarts)
