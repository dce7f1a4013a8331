"""
Physical configuration shared by every computation.

A scenario fixes the scalar field, the two static detectors, the common
switching function and the quadrature policy. All values are frozen
dataclasses and are validated on construction.
"""

import logging
import math
from dataclasses import dataclass, replace
from dataclasses import field as dataclass_field
from enum import Enum
from typing import Any, Optional, Tuple, Union

import numpy as np

from ..errors import PhysicsError
from .quadrature import QuadraturePolicy

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SWITCHING_KINDS = ("smooth-bump", "gaussian", "smoothed-tophat")

# Gaussian switching is integrated over center ± GAUSSIAN_CUTOFF·σ.
GAUSSIAN_CUTOFF = 10.0

# Window length / separation ratio beyond which the whole window of detector 2
# lies inside the future lightcone of detector 1 for all practical purposes.
TIMELIKE_RATIO = 10.0

WEAK_COUPLING_LIMIT = 0.3


class SeparationClass(str, Enum):
    """Causal relation between the two detector windows."""

    SPACELIKE = "spacelike"
    TIMELIKE_REACHABLE = "timelike-reachable"
    MIXED = "mixed"


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise PhysicsError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class FieldSpec:
    """Free scalar field of mass m (natural units)."""

    mass: float = 0.0

    def __post_init__(self) -> None:
        mass = _finite("mass", self.mass)
        if mass < 0:
            raise PhysicsError(f"field mass must be >= 0, got {mass}")
        object.__setattr__(self, "mass", mass)


@dataclass(frozen=True)
class DetectorSpec:
    """A static two-level detector.

    Args:
        position: spatial position (x, y, z)
        coupling: coupling constant α >= 0
        smearing: Gaussian width ΔX > 0, or None for a pointlike detector
    """

    position: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    coupling: float = 0.1
    smearing: Optional[float] = None

    def __post_init__(self) -> None:
        if len(self.position) != 3:
            raise PhysicsError(f"position must have 3 components, got {self.position!r}")
        position = tuple(_finite("position", x) for x in self.position)
        object.__setattr__(self, "position", position)
        coupling = _finite("coupling", self.coupling)
        if coupling < 0:
            raise PhysicsError(f"coupling must be >= 0, got {coupling}")
        object.__setattr__(self, "coupling", coupling)
        if self.smearing is not None:
            width = _finite("smearing", self.smearing)
            if width <= 0:
                raise PhysicsError(f"smearing width must be > 0, got {width}")
            object.__setattr__(self, "smearing", width)

    @property
    def is_pointlike(self) -> bool:
        return self.smearing is None


@dataclass(frozen=True)
class SwitchingSpec:
    """Switching function η(t), shared by both detectors.

    For "smooth-bump" and "smoothed-tophat" the support is [t_start, t_end].
    "smoothed-tophat" ramps up and down over `width`; "gaussian" is centered on
    the midpoint of [t_start, t_end] with standard deviation `width`.
    """

    kind: str = "smooth-bump"
    t_start: float = 0.0
    t_end: float = 1.0
    width: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in SWITCHING_KINDS:
            raise PhysicsError(
                f"unknown switching kind {self.kind!r}; expected one of {', '.join(SWITCHING_KINDS)}"
            )
        t_start = _finite("t_start", self.t_start)
        t_end = _finite("t_end", self.t_end)
        if not t_start < t_end:
            raise PhysicsError(f"switching window needs t_start < t_end, got [{t_start}, {t_end}]")
        object.__setattr__(self, "t_start", t_start)
        object.__setattr__(self, "t_end", t_end)

        width = self.width
        if self.kind == "gaussian" and width is None:
            width = (t_end - t_start) / 2.0
        if self.kind == "smoothed-tophat" and width is None:
            width = (t_end - t_start) / 4.0
        if width is not None:
            width = _finite("width", width)
            if width <= 0:
                raise PhysicsError(f"switching width must be > 0, got {width}")
        if self.kind == "smoothed-tophat" and 2.0 * width > t_end - t_start:
            raise PhysicsError("smoothed-tophat ramps must fit in the window (2·width <= t_end - t_start)")
        object.__setattr__(self, "width", width)

    @property
    def is_compact(self) -> bool:
        return self.kind != "gaussian"

    @property
    def length(self) -> float:
        """Window length t_f - t_i."""
        return self.t_end - self.t_start

    @property
    def center(self) -> float:
        return 0.5 * (self.t_start + self.t_end)

    def integration_window(self) -> Tuple[float, float]:
        """Interval outside of which η vanishes (to double precision for Gaussians)."""
        if self.is_compact:
            return self.t_start, self.t_end
        half = GAUSSIAN_CUTOFF * self.width
        return self.center - half, self.center + half

    def __call__(self, t: ArrayLike) -> ArrayLike:
        return eval_switching(self, t)

    def shifted(self, dt: float) -> "SwitchingSpec":
        return replace(self, t_start=self.t_start + dt, t_end=self.t_end + dt)


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C∞ step: 0 for x <= 0, 1 for x >= 1."""
    out = np.where(x >= 1.0, 1.0, 0.0)
    inside = (x > 0.0) & (x < 1.0)
    if np.any(inside):
        xi = x[inside]
        a = np.exp(-1.0 / xi)
        b = np.exp(-1.0 / (1.0 - xi))
        out[inside] = a / (a + b)
    return out


def eval_switching(s: SwitchingSpec, t: ArrayLike) -> ArrayLike:
    """Evaluate η(t); exactly 0 outside the support of compact kinds."""
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))

    if s.kind == "gaussian":
        out = np.exp(-0.5 * ((tt - s.center) / s.width) ** 2)
    elif s.kind == "smooth-bump":
        u = (2.0 * tt - s.t_start - s.t_end) / (s.t_end - s.t_start)
        out = np.zeros_like(tt)
        inside = np.abs(u) < 1.0
        if np.any(inside):
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    else:
        out = _smooth_step((tt - s.t_start) / s.width) * _smooth_step((s.t_end - tt) / s.width)

    if scalar:
        return float(out[0])
    return out


@dataclass(frozen=True)
class ScenarioSpec:
    """Full physical configuration: field, detectors, switching, gap, quadrature."""

    field: FieldSpec = dataclass_field(default_factory=FieldSpec)
    detector1: DetectorSpec = dataclass_field(default_factory=DetectorSpec)
    detector2: DetectorSpec = dataclass_field(default_factory=lambda: DetectorSpec(position=(1.0, 0.0, 0.0)))
    switching: SwitchingSpec = dataclass_field(default_factory=SwitchingSpec)
    energy_gap: float = 1.0
    quadrature: QuadraturePolicy = dataclass_field(default_factory=QuadraturePolicy)

    def __post_init__(self) -> None:
        gap = _finite("energy_gap", self.energy_gap)
        if gap <= 0:
            raise PhysicsError(f"energy gap ΔE must be > 0, got {gap}")
        object.__setattr__(self, "energy_gap", gap)
        if self.distance <= 0:
            raise PhysicsError("detectors must be separated (L = |x1 - x2| > 0)")

    @property
    def distance(self) -> float:
        """Detector separation L = |x₁ − x₂|."""
        return float(np.linalg.norm(np.subtract(self.detector1.position, self.detector2.position)))

    @property
    def mass(self) -> float:
        return self.field.mass

    @property
    def coupling_product(self) -> float:
        return self.detector1.coupling * self.detector2.coupling

    def check_weak_coupling(self) -> None:
        for name, det in (("detector1", self.detector1), ("detector2", self.detector2)):
            if det.coupling > WEAK_COUPLING_LIMIT:
                logger.warning(
                    "%s coupling %.3g exceeds the weak-coupling threshold %.1f; "
                    "perturbative parameters may be unreliable",
                    name, det.coupling, WEAK_COUPLING_LIMIT,
                )

    def with_changes(self, **changes: Any) -> "ScenarioSpec":
        return replace(self, **changes)


def classify_separation(spec: ScenarioSpec) -> SeparationClass:
    """Classify the two switching windows as spacelike, mixed or timelike-reachable.

    Spacelike iff sup{t − t′ : η(t)η(t′) > 0} < L. For compact support that
    supremum is the window length.
    """
    if not spec.switching.is_compact:
        raise PhysicsError("separation class undefined for non-compact support")
    reach = spec.switching.length
    distance = spec.distance
    if reach < distance:
        return SeparationClass.SPACELIKE
    if reach >= TIMELIKE_RATIO * distance:
        return SeparationClass.TIMELIKE_REACHABLE
    return SeparationClass.MIXED
