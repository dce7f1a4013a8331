"""
Leading-order channel parameters P_e, A, B, C, D, plus the Fermi transition
probability and the Glauber-detector leakage.

Time indices 0..3 stand for t₁ ≥ t₂ ≥ t₃ ≥ t₄. Every inter-detector
commutator is described by the pair of time indices it connects; with a
massless field it is collapsed onto its lightcone loci, otherwise it is
ε-regularized together with the Wightman factors and the ε-ladder is
extrapolated to zero.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import PhysicsError
from .correlators import Regulator, commutator_array, commutator_distributional, wightman_array
from .quadrature import (
    Constraint,
    DeltaReduction,
    IntegralResult,
    collapse_delta,
    integrate_polytope,
    integrate_reduction,
    ladder_limit,
    ordered_integrand,
    quad_checked,
)
from .scenario import ScenarioSpec

logger = logging.getLogger(__name__)

METHODS = ("auto", "collapse", "ladder")

# Relative size of an imaginary part tolerated before it is discarded.
PE_IMAG_TOLERANCE = 1e-8
AB_IMAG_TOLERANCE = 1e-6

@dataclass
class ChannelParams:
    """The five scalars of the detector-to-detector channel."""

    pe: float
    a: float
    b: float
    c: complex
    d: complex
    scenario: Optional[ScenarioSpec] = None
    diagnostics: Dict[str, IntegralResult] = field(default_factory=dict)

    @classmethod
    def zero(cls, scenario: Optional[ScenarioSpec] = None) -> "ChannelParams":
        return cls(0.0, 0.0, 0.0, 0j, 0j, scenario)

    def as_tuple(self) -> Tuple[float, float, float, complex, complex]:
        return self.pe, self.a, self.b, self.c, self.d

    def radicands(self) -> Tuple[float, float]:
        """Kraus radicands P_e + A − |C|²/(1−P_e−B) and P_e + B − |D|²/(1−P_e−A)."""
        x = 1.0 - self.pe - self.b
        y = 1.0 - self.pe - self.a
        first = self.pe + self.a - abs(self.c) ** 2 / x if x > 0 else -math.inf
        second = self.pe + self.b - abs(self.d) ** 2 / y if y > 0 else -math.inf
        return first, second

    def violations(self, tolerance: float = 1e-12) -> List[str]:
        problems = []
        values = (self.pe, self.a, self.b, self.c, self.d)
        if not all(np.isfinite(v) for v in values):
            problems.append("non-finite parameter")
            return problems
        if self.pe < -tolerance:
            problems.append(f"P_e = {self.pe:.3e} < 0")
        for name, total in (("P_e + A", self.pe + self.a), ("P_e + B", self.pe + self.b)):
            if not -tolerance <= total <= 1.0 + tolerance:
                problems.append(f"{name} = {total:.3e} outside [0, 1]")
        for name, radicand in zip(("first", "second"), self.radicands()):
            if radicand < -tolerance:
                problems.append(f"{name} Kraus radicand {radicand:.3e} < 0")
        return problems

    def check_physical(self, tolerance: float = 1e-12) -> "ChannelParams":
        problems = self.violations(tolerance)
        if problems:
            raise PhysicsError(
                "nonphysical parameter set: " + "; ".join(problems),
                diagnostics={"params": self.as_tuple()},
            )
        return self

    def max_error(self) -> float:
        return max((r.error + r.residual for r in self.diagnostics.values()), default=0.0)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "P_e": self.pe,
            "A": self.a,
            "B": self.b,
            "C_re": self.c.real,
            "C_im": self.c.imag,
            "D_re": self.d.real,
            "D_im": self.d.imag,
            "error": self.max_error(),
        }


# --------------------------------------------------------------------------
# Integrand terms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    """coefficient · ∏ commutators · rest over the ordered k-simplex.

    `commutators` holds (first, second) time indices: the commutator of the
    field at the first time with the field at the second, at separation L,
    argument t_first − t_second. `rest` maps times (k, N) and the ε column to
    an (rungs, N) array, or (1, N) when it does not depend on ε.
    """

    k: int
    commutators: Tuple[Tuple[int, int], ...]
    rest: Callable[[np.ndarray, np.ndarray], np.ndarray]
    coefficient: complex = 1.0
    wightman_pairs: Tuple[Tuple[int, int], ...] = ()


def _resolve_method(spec: ScenarioSpec, method: str) -> str:
    if method not in METHODS:
        raise ValueError(f"unknown integration method {method!r}; expected one of {', '.join(METHODS)}")
    if method == "auto":
        return "collapse" if spec.mass == 0 else "ladder"
    if method == "collapse" and spec.mass > 0:
        raise PhysicsError("distributional form implemented for massless only")
    return method


def _singular_lines(term: Term, distance: float, method: str) -> List[Constraint]:
    pairs = list(term.wightman_pairs)
    if method == "ladder":
        pairs.extend(term.commutators)
    lines = []
    for a, b in pairs:
        lines.append(Constraint(a, b, distance))
        lines.append(Constraint(b, a, distance))
    return lines


def _integrate_term(spec: ScenarioSpec, term: Term, gap: float, method: str, reg: Regulator) -> IntegralResult:
    """Integrate one Term and extrapolate ε → 0 when it carries a regulator."""
    distance = spec.distance
    mass = spec.mass
    eps = reg.column()
    policy = spec.quadrature
    window = spec.switching.integration_window()
    singular = _singular_lines(term, distance, method)

    if method == "ladder":
        def integrand(times: np.ndarray) -> np.ndarray:
            value = term.rest(times, eps)
            for first, second in term.commutators:
                value = value * commutator_array(mass, times[first] - times[second], distance, eps)
            return value

        base = ordered_integrand(integrand, term.k, window, True, singular)
        result = integrate_polytope(base, policy, frequency=gap)
    else:
        base = ordered_integrand(lambda times: term.rest(times, eps), term.k, window, True, singular)
        support = commutator_distributional(distance)
        branches = [base]
        notes: Tuple[str, ...] = ()
        for first, second in term.commutators:
            axis, partner = max(first, second), min(first, second)
            collapsed = []
            for branch in branches:
                reduction = collapse_delta(branch, support, axis, partner, axis_first=(axis == first))
                collapsed.extend(reduction.branches)
                notes += reduction.warnings
            branches = collapsed
        result = integrate_reduction(DeltaReduction(tuple(branches), notes), policy, frequency=gap,
                                     components=len(reg.ladder) if term.wightman_pairs else 1)

    result = result.scaled(term.coefficient)
    if np.ndim(result.value) == 1 and len(result.value) > 1:
        result = ladder_limit(result, reg)
    elif np.ndim(result.value) == 1:
        result.value = complex(result.value[0])
    return result


def _regulator(spec: ScenarioSpec) -> Regulator:
    return spec.quadrature.regulator(scale=min(1.0, spec.distance, spec.switching.length))


def _eta4(spec: ScenarioSpec, times: np.ndarray) -> np.ndarray:
    eta = spec.switching
    return eta(times[0]) * eta(times[1]) * eta(times[2]) * eta(times[3])


# --------------------------------------------------------------------------
# P_e
# --------------------------------------------------------------------------

def compute_Pe_result(spec: ScenarioSpec) -> IntegralResult:
    """Excitation probability of detector 2 from vacuum fluctuations alone."""
    alpha2 = spec.detector2.coupling
    if alpha2 == 0:
        return IntegralResult(value=0.0)
    gap = spec.energy_gap
    mass = spec.mass
    reg = spec.quadrature.regulator(scale=min(1.0, spec.switching.length))
    eps = reg.column()
    eta = spec.switching

    # The full square is the ordered triangle plus its mirror on the same nodes.
    def integrand(times: np.ndarray) -> np.ndarray:
        tau = times[0] - times[1]
        forward = wightman_array(mass, tau, 0.0, eps) * np.exp(-1j * gap * tau)
        backward = wightman_array(mass, -tau, 0.0, eps) * np.exp(1j * gap * tau)
        return eta(times[0]) * eta(times[1]) * (forward + backward)

    base = ordered_integrand(integrand, 2, spec.switching.integration_window(), True)
    result = ladder_limit(integrate_polytope(base, spec.quadrature, frequency=gap), reg).scaled(alpha2 ** 2)

    value = complex(result.value)
    if abs(value.imag) > PE_IMAG_TOLERANCE * max(abs(value.real), spec.quadrature.abs_floor):
        raise PhysicsError(f"imaginary residue in P_e: {value!r}", diagnostics={"P_e": value})
    slack = 10.0 * (result.error + result.residual) + spec.quadrature.abs_floor
    if value.real < -slack:
        raise PhysicsError(f"nonphysical P_e = {value.real:.3e}", diagnostics={"P_e": value})
    result.value = max(value.real, 0.0)
    return result


def compute_Pe(spec: ScenarioSpec) -> float:
    return float(compute_Pe_result(spec).value)


def switching_fourier_gaussian(omega: np.ndarray, sigma: float) -> np.ndarray:
    """|∫ η(t) e^{iωt} dt| for a unit-peak Gaussian of width σ."""
    return sigma * math.sqrt(2.0 * math.pi) * np.exp(-0.5 * (omega * sigma) ** 2)


def excitation_probability_momentum(spec: ScenarioSpec) -> float:
    """P_e from the momentum representation α₂²/(4π²) ∫ dp p²/E |η̂(E + ΔE)|².

    Only Gaussian switching has a closed-form η̂.
    """
    if spec.switching.kind != "gaussian":
        raise PhysicsError("momentum-space P_e requires gaussian switching")
    alpha2 = spec.detector2.coupling
    sigma = spec.switching.width
    gap = spec.energy_gap
    mass = spec.mass

    def integrand(p: float) -> float:
        energy = math.sqrt(p * p + mass * mass)
        return p * p / energy * float(switching_fourier_gaussian(energy + gap, sigma)) ** 2

    p_max = 12.0 / sigma + 1.0
    value, _ = quad_checked(integrand, 0.0, p_max, epsabs=0.0, epsrel=1e-12, limit=200)
    return alpha2 ** 2 * value / (4.0 * math.pi ** 2)


# --------------------------------------------------------------------------
# C and D
# --------------------------------------------------------------------------

def _first_order(spec: ScenarioSpec, phase: Callable[[np.ndarray], np.ndarray], method: str) -> IntegralResult:
    eta = spec.switching

    def rest(times: np.ndarray, eps: np.ndarray) -> np.ndarray:
        return (eta(times[0]) * eta(times[1]) * phase(times))[None, :]

    # [φ(x₁(t₂)), φ(x₂(t₁))]
    term = Term(k=2, commutators=((1, 0),), rest=rest, coefficient=spec.coupling_product)
    return _integrate_term(spec, term, spec.energy_gap, method, _regulator(spec))


def compute_C_result(spec: ScenarioSpec, method: str = "auto") -> IntegralResult:
    if spec.coupling_product == 0:
        return IntegralResult(value=0j)
    gap = spec.energy_gap
    return _first_order(spec, lambda t: np.exp(1j * gap * (t[1] - t[0])), _resolve_method(spec, method))


def compute_D_result(spec: ScenarioSpec, method: str = "auto") -> IntegralResult:
    if spec.coupling_product == 0:
        return IntegralResult(value=0j)
    gap = spec.energy_gap
    result = _first_order(spec, lambda t: np.exp(1j * gap * (t[1] + t[0])), _resolve_method(spec, method))
    return result.scaled(-1.0)


def compute_C(spec: ScenarioSpec, method: str = "auto") -> complex:
    """Resonant coherence transfer coefficient."""
    return complex(compute_C_result(spec, method).value)


def compute_D(spec: ScenarioSpec, method: str = "auto") -> complex:
    """Non-resonant coherence transfer coefficient."""
    return complex(compute_D_result(spec, method).value)


# --------------------------------------------------------------------------
# A and B
# --------------------------------------------------------------------------

def _block_one(spec: ScenarioSpec, gap: float, order: Sequence[int]) -> Term:
    """First integrand block of A evaluated at permuted times s = t[order]."""
    s1, s2, s3, s4 = order
    mass, distance = spec.mass, spec.distance

    def rest(times: np.ndarray, eps: np.ndarray) -> np.ndarray:
        d34 = times[s3] - times[s4]
        w42 = wightman_array(mass, times[s4] - times[s2], distance, eps)
        w24 = wightman_array(mass, times[s2] - times[s4], distance, eps)
        bracket = np.exp(-1j * gap * d34) * w42 - np.exp(1j * gap * d34) * w24
        return _eta4(spec, times) * np.cos(gap * (times[s1] - times[s2])) * bracket

    # [φ(x₂(s₁)), φ(x₁(s₃))]
    return Term(k=4, commutators=((s1, s3),), rest=rest, wightman_pairs=((s2, s4),))


def _block_two(spec: ScenarioSpec, gap: float) -> Term:
    mass, distance = spec.mass, spec.distance

    def rest(times: np.ndarray, eps: np.ndarray) -> np.ndarray:
        d14 = times[0] - times[3]
        w34 = wightman_array(mass, times[2] - times[3], distance, eps)
        w43 = wightman_array(mass, times[3] - times[2], distance, eps)
        bracket = np.exp(-1j * gap * d14) * w34 + np.exp(1j * gap * d14) * w43
        return 1j * _eta4(spec, times) * np.sin(gap * (times[1] - times[2])) * bracket

    # [φ(x₁(t₂)), φ(x₂(t₁))]
    return Term(k=4, commutators=((1, 0),), rest=rest, wightman_pairs=((2, 3),))


def _real_part(name: str, result: IntegralResult) -> IntegralResult:
    value = complex(result.value)
    scale = max(abs(value.real), result.error + result.residual, 1e-300)
    if abs(value.imag) > AB_IMAG_TOLERANCE * scale and abs(value.imag) > 1e-15:
        raise PhysicsError(f"imaginary residue in {name}: {value!r}", diagnostics={name: value})
    result.value = value.real
    return result


def compute_A_result(spec: ScenarioSpec, method: str = "auto", energy_gap: Optional[float] = None) -> IntegralResult:
    """A(ΔE); pass `energy_gap` to evaluate at another (possibly negative) gap."""
    gap = spec.energy_gap if energy_gap is None else float(energy_gap)
    if spec.coupling_product == 0:
        return IntegralResult(value=0.0)
    method = _resolve_method(spec, method)
    reg = _regulator(spec)
    terms = [
        _block_one(spec, gap, (0, 1, 2, 3)),
        _block_one(spec, gap, (1, 0, 2, 3)),
        _block_one(spec, gap, (0, 2, 1, 3)),
        _block_two(spec, gap),
    ]
    total = None
    for term in terms:
        part = _integrate_term(spec, term, gap, method, reg)
        total = part if total is None else total + part
    total = total.scaled(2.0 * spec.coupling_product ** 2)
    logger.debug("A(%.4g) = %r ± %.2e", gap, total.value, total.error)
    return _real_part("A", total)


def compute_A(spec: ScenarioSpec, method: str = "auto", energy_gap: Optional[float] = None) -> float:
    """Excited-input population transfer coefficient."""
    return float(compute_A_result(spec, method, energy_gap).value)


def compute_B_terms(spec: ScenarioSpec, method: str = "auto") -> Dict[str, IntegralResult]:
    """B split into its A(−ΔE) part and its double-commutator part."""
    if spec.coupling_product == 0:
        zero = IntegralResult(value=0.0)
        return {"A(-dE)": zero, "double_commutator": zero}
    method = _resolve_method(spec, method)
    gap = spec.energy_gap
    def rest(times: np.ndarray, eps: np.ndarray) -> np.ndarray:
        phase = np.sin(gap * (times[1] - times[2])) * np.sin(gap * (times[0] - times[3]))
        return (_eta4(spec, times) * phase)[None, :]

    # [φ(x₁(t₂)), φ(x₂(t₁))] · [φ(x₂(t₄)), φ(x₁(t₃))]
    term = Term(k=4, commutators=((1, 0), (3, 2)), rest=rest, coefficient=4.0 * spec.coupling_product ** 2)
    double = _real_part("B", _integrate_term(spec, term, gap, method, _regulator(spec)))
    return {
        "A(-dE)": compute_A_result(spec, method, energy_gap=-gap),
        "double_commutator": double,
    }


def compute_B_result(spec: ScenarioSpec, method: str = "auto") -> IntegralResult:
    parts = compute_B_terms(spec, method)
    return parts["A(-dE)"] + parts["double_commutator"]


def compute_B(spec: ScenarioSpec, method: str = "auto") -> float:
    """Ground-input population transfer coefficient."""
    return float(compute_B_result(spec, method).value)


def compute_params(spec: ScenarioSpec, method: str = "auto") -> ChannelParams:
    """All five channel parameters for one scenario, validated."""
    spec.check_weak_coupling()
    results = {
        "P_e": compute_Pe_result(spec),
        "A": compute_A_result(spec, method),
        "B": compute_B_result(spec, method),
        "C": compute_C_result(spec, method),
        "D": compute_D_result(spec, method),
    }
    for name, result in results.items():
        for note in result.warnings:
            logger.warning("%s: %s", name, note)
    params = ChannelParams(
        pe=float(np.real(results["P_e"].value)),
        a=float(np.real(results["A"].value)),
        b=float(np.real(results["B"].value)),
        c=complex(results["C"].value),
        d=complex(results["D"].value),
        scenario=spec,
        diagnostics=results,
    )
    logger.debug("channel parameters: %s", params.as_dict())
    return params.check_physical()


# --------------------------------------------------------------------------
# Fermi problem and Glauber detector
# --------------------------------------------------------------------------

def fermi_amplitude(spec: ScenarioSpec) -> IntegralResult:
    """α₁α₂ ∫∫ η η e^{iΔE(t₂−t₁)} D_F over the full square window."""
    if spec.coupling_product == 0:
        return IntegralResult(value=0j)
    gap, mass, distance = spec.energy_gap, spec.mass, spec.distance
    reg = _regulator(spec)
    eps = reg.column()
    eta = spec.switching

    # Mirror pairs (t₁, t₂) and (t₂, t₁) share D_F(|t₁ − t₂|).
    def integrand(times: np.ndarray) -> np.ndarray:
        tau = times[0] - times[1]
        propagator = wightman_array(mass, tau, distance, eps)
        return eta(times[0]) * eta(times[1]) * 2.0 * np.cos(gap * tau) * propagator

    lines = (Constraint(0, 1, distance),)
    base = ordered_integrand(integrand, 2, spec.switching.integration_window(), True, lines)
    result = integrate_polytope(base, spec.quadrature, frequency=gap)
    return ladder_limit(result, reg).scaled(spec.coupling_product)


def fermi_probability(spec: ScenarioSpec) -> float:
    """Transition probability of detector 2 in the Fermi two-atom setup."""
    return abs(complex(fermi_amplitude(spec).value)) ** 2


def glauber_leakage_result(spec: ScenarioSpec) -> IntegralResult:
    if spec.coupling_product == 0:
        return IntegralResult(value=0j)
    gap, mass, distance = spec.energy_gap, spec.mass, spec.distance
    reg = _regulator(spec)
    eps = reg.column()
    eta = spec.switching

    # D(x₂(t₁) − x₁(t₂)) is the positive-frequency correlator
    def integrand(times: np.ndarray) -> np.ndarray:
        tau = times[0] - times[1]
        correlator = wightman_array(mass, tau, distance, eps)
        return eta(times[0]) * eta(times[1]) * np.exp(1j * gap * tau) * correlator

    lines = (Constraint(0, 1, distance),)
    base = ordered_integrand(integrand, 2, spec.switching.integration_window(), True, lines)
    result = integrate_polytope(base, spec.quadrature, frequency=gap)
    return ladder_limit(result, reg).scaled(-spec.coupling_product)


def glauber_leakage(spec: ScenarioSpec) -> complex:
    """O(α²) coefficient of ⟨e|ρ|g⟩ in the Glauber detector's output."""
    return complex(glauber_leakage_result(spec).value)
