"""Pearson, Spearman and least-squares calibration on paired series."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels


class InsufficientDataError(ValueError):
    pass


class UndefinedCorrelationError(ValueError):
    pass


class DegenerateFitError(ValueError):
    pass


def _pair_arrays(x, y=None):
    if y is None:  # an AlignedSeries
        x, y = x.candidate, x.reference
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"paired series must be 1-D and equal length, got {x.shape} and {y.shape}")
    if x.shape[0] < 3:
        raise InsufficientDataError(f"need at least 3 pairs, got {x.shape[0]}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("paired values must be finite")
    return x, y


def _corr(x, y) -> float:
    _, _, sxx, syy, sxy = _kernels.centered_moments(x, y)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance on one side")
    r = sxy / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def pearson(x, y=None) -> float:
    """Sample Pearson correlation. Accepts two arrays or one AlignedSeries."""
    x, y = _pair_arrays(x, y)
    return _corr(x, y)


def spearman(x, y=None) -> float:
    """Pearson correlation of average ranks (ties share their mean rank)."""
    x, y = _pair_arrays(x, y)
    return _corr(_kernels.average_ranks(x), _kernels.average_ranks(y))


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float

    def __call__(self, value: float) -> float:
        return self.slope * value + self.intercept


def fit_linear_calibration(x, y=None) -> LinearFit:
    """OLS of reference on candidate: ``reference ~ slope * candidate + intercept``."""
    x, y = _pair_arrays(x, y)
    mx, my, sxx, syy, sxy = _kernels.centered_moments(x, y)
    if sxx == 0.0:
        raise DegenerateFitError("candidate has zero variance")
    slope = sxy / sxx
    intercept = my - slope * mx
    r2 = (sxy * sxy) / (sxx * syy) if syy else 1.0
    return LinearFit(float(slope), float(intercept), float(min(1.0, r2)))
