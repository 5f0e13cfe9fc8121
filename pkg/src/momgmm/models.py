"""The two-dimensional three-component mixtures used in the convergence experiments."""
from __future__ import annotations

import numpy as np

from .debias import DebiasParams
from .params import GmmParams

_WEIGHTS = [0.4, 0.3, 0.3]
_MEANS = np.array([[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).T


def moments_model() -> GmmParams:
    """Mixture with distinct full covariances."""
    covs = np.array(
        [
            [[0.4, 0.0], [0.0, 0.3]],
            [[0.2, 0.1], [0.1, 0.5]],
            [[0.4, 0.25], [0.25, 0.3]],
        ]
    )
    return GmmParams(_WEIGHTS, _MEANS, covs=covs)


def debias_model() -> DebiasParams:
    """Same weights and means with the common covariance [[0.4, 0.2], [0.2, 0.3]]."""
    return DebiasParams(_WEIGHTS, _MEANS, np.array([[0.4, 0.2], [0.2, 0.3]]))


BUILTIN = {"moments2d": lambda: moments_model(), "debias2d": lambda: debias_model().as_gmm()}
