"""
The qubit channel ξ defined by (P_e, A, B, C, D): direct map, Kraus
operators, Choi matrix and the complementary channel.

Basis order is (|e⟩, |g⟩) for one qubit and (|ee⟩, |eg⟩, |ge⟩, |gg⟩) for two.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..errors import PhysicsError
from .channel_params import ChannelParams

logger = logging.getLogger(__name__)

BASIS_2 = ("e", "g")
BASIS_4 = ("ee", "eg", "ge", "gg")

STATE_TOLERANCE = 1e-10
COMPLETENESS_TOLERANCE = 1e-12
CHOI_RANK_THRESHOLD = 1e-10

EXCITED = np.array([[1, 0], [0, 0]], dtype=complex)
GROUND = np.array([[0, 0], [0, 1]], dtype=complex)


def density_matrix(theta: float, gamma: complex = 0j) -> np.ndarray:
    """[[θ, γ], [γ*, 1 − θ]]."""
    return np.array([[theta, gamma], [np.conj(gamma), 1.0 - theta]], dtype=complex)


def check_density(rho: np.ndarray, tolerance: float = STATE_TOLERANCE) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    if rho.shape != (n, n):
        raise PhysicsError(f"density matrix must be square, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=tolerance):
        raise PhysicsError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tolerance:
        raise PhysicsError(f"density matrix trace {np.trace(rho).real:.12g} != 1")
    if np.linalg.eigvalsh(rho).min() < -tolerance:
        raise PhysicsError("density matrix is not positive semidefinite")
    return rho


def map_linear(p: ChannelParams, x: np.ndarray) -> np.ndarray:
    """Linear extension of ξ to an arbitrary 2×2 operator."""
    x = np.asarray(x, dtype=complex)
    trace = x[0, 0] + x[1, 1]
    out = trace * np.array([[p.pe, 0], [0, 1.0 - p.pe]], dtype=complex)
    out += x[0, 0] * np.array([[p.a, 0], [0, -p.a]])
    out += x[1, 1] * np.array([[p.b, 0], [0, -p.b]])
    out += x[0, 1] * np.array([[0, p.c], [p.d, 0]])
    out += x[1, 0] * np.array([[0, np.conj(p.d)], [np.conj(p.c), 0]])
    return out


def apply_channel(p: ChannelParams, rho: np.ndarray) -> np.ndarray:
    """ξ(ρ): populations θ' = P_e + θA + βB, coherence γC + γ*D*."""
    rho = check_density(rho)
    out = map_linear(p, rho)
    out = 0.5 * (out + out.conj().T)
    if np.linalg.eigvalsh(out).min() < -STATE_TOLERANCE:
        raise PhysicsError("channel parameters nonphysical for this input",
                           diagnostics={"params": p.as_tuple()})
    return out


@dataclass(frozen=True)
class KrausSet:
    operators: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

    def completeness_defect(self) -> float:
        total = sum(e.conj().T @ e for e in self.operators)
        return float(np.linalg.norm(total - np.eye(2), ord=2))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(e @ rho @ e.conj().T for e in self.operators)

    def __iter__(self):
        return iter(self.operators)


def kraus_set(p: ChannelParams) -> KrausSet:
    """The four Kraus operators of ξ."""
    x = 1.0 - p.pe - p.b
    y = 1.0 - p.pe - p.a
    if x <= 0 or y <= 0:
        raise PhysicsError(
            "degenerate Kraus denominator (1 − P_e − B or 1 − P_e − A is not positive)",
            diagnostics={"1-Pe-B": x, "1-Pe-A": y},
        )
    first, second = p.radicands()
    if first < 0 or second < 0:
        raise PhysicsError("Kraus radicand negative", diagnostics={"radicands": (first, second)})

    sx, sy = math.sqrt(x), math.sqrt(y)
    e1 = np.array([[p.c / sx, 0], [0, sx]], dtype=complex)
    e2 = np.array([[math.sqrt(first), 0], [0, 0]], dtype=complex)
    e3 = np.array([[0, np.conj(p.d) / sy], [sy, 0]], dtype=complex)
    e4 = np.array([[0, math.sqrt(second)], [0, 0]], dtype=complex)
    kraus = KrausSet((e1, e2, e3, e4))

    defect = kraus.completeness_defect()
    if defect > COMPLETENESS_TOLERANCE:
        logger.warning("Kraus completeness defect %.3e", defect)
    return kraus


def choi(p: ChannelParams) -> np.ndarray:
    """(I ⊗ ξ)|β⟩⟨β| with |β⟩ = (|ee⟩ + |gg⟩)/√2; trace 1."""
    out = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2), dtype=complex)
            unit[i, j] = 1.0
            out += 0.5 * np.kron(unit, map_linear(p, unit))
    return out


def choi_spectrum(p: ChannelParams) -> np.ndarray:
    return np.linalg.eigvalsh(choi(p))


def choi_rank(p: ChannelParams, threshold: float = CHOI_RANK_THRESHOLD) -> int:
    """Number of Choi eigenvalues above `threshold` × the largest one."""
    eigenvalues = choi_spectrum(p)
    top = eigenvalues.max()
    if top <= 0:
        return 0
    return int(np.sum(eigenvalues > threshold * top))


def is_cptp(p: ChannelParams, tolerance: float = CHOI_RANK_THRESHOLD) -> bool:
    return bool(choi_spectrum(p).min() >= -tolerance)


def complementary_apply(p: ChannelParams, rho: np.ndarray) -> np.ndarray:
    """Environment output (ξᶜ(ρ))_jk = Tr(E_k ρ E_j†) for the Kraus dilation."""
    rho = check_density(rho)
    ops: List[np.ndarray] = list(kraus_set(p))
    out = np.empty((4, 4), dtype=complex)
    for j, ej in enumerate(ops):
        for k, ek in enumerate(ops):
            out[j, k] = np.trace(ek @ rho @ ej.conj().T)
    return 0.5 * (out + out.conj().T)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(ρ) in nats; eigenvalues below 1e-15 count as zero."""
    eigenvalues = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    eigenvalues = eigenvalues[eigenvalues > 1e-15]
    return float(-np.sum(eigenvalues * np.log(eigenvalues)))
