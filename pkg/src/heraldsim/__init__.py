"""heraldsim: Monte Carlo model and counting analysis for a warm-vapour
heralded single-photon source with motional-averaging filter cavities."""

__version__ = "0.1.0"

from .config import CavitySpec, ExperimentConfig, load_config, serialize, validate
from .source import ClickBatch, TrialRecord, simulate

__all__ = [
    "CavitySpec",
    "ClickBatch",
    "ExperimentConfig",
    "TrialRecord",
    "load_config",
    "serialize",
    "simulate",
    "validate",
    "__version__",
]
