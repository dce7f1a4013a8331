"""
relchannel: the quantum channel between two Unruh-DeWitt detectors that
communicate through a relativistic scalar field.
"""

__version__ = "0.1.0"

from .config import Config
from .core.capacity import classical_capacity, coherent_information_single_use
from .core.channel_algebra import apply_channel, choi, choi_rank, kraus_set
from .core.channel_params import ChannelParams, compute_params, fermi_probability, glauber_leakage
from .core.scenario import DetectorSpec, FieldSpec, ScenarioSpec, SwitchingSpec, classify_separation
from .errors import ConfigError, ConvergenceError, PhysicsError, RelChannelError

__all__ = [
    "__version__",
    "ChannelParams",
    "Config",
    "ConfigError",
    "ConvergenceError",
    "DetectorSpec",
    "FieldSpec",
    "PhysicsError",
    "RelChannelError",
    "ScenarioSpec",
    "SwitchingSpec",
    "apply_channel",
    "choi",
    "choi_rank",
    "classical_capacity",
    "classify_separation",
    "coherent_information_single_use",
    "compute_params",
    "fermi_probability",
    "glauber_leakage",
    "kraus_set",
]
