"""Method-of-moments fitting of Gaussian mixtures through implicit moment tensors."""
from .estimator import FitConfig, FitReport, fit, match_components, metrics
from .params import GmmParams, ObjectiveEval
from .sampling import SampleMatrix, make_benchmark, sample_gmm

__version__ = "0.1.0"

__all__ = [
    "FitConfig",
    "FitReport",
    "GmmParams",
    "ObjectiveEval",
    "SampleMatrix",
    "fit",
    "make_benchmark",
    "match_components",
    "metrics",
    "sample_gmm",
    "__version__",
]
