"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np

from .sampling import SampledFunction


def check_alpha(alpha, name: str = "alpha") -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {alpha}")
    return alpha


def check_sigma(sigma) -> float:
    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma}")
    return sigma


def check_observations(Y, m: int):
    """Return ``(Y2d, single)`` with ``Y2d`` of shape ``(R, m)``.

    Accepts a :class:`SampledFunction`, a length-``m`` vector, a batch of
    shape ``(R, m)`` or a list of sampled functions.
    """
    if isinstance(Y, SampledFunction):
        arr, single = Y.flat[None, :], True
    elif isinstance(Y, (list, tuple)) and Y and isinstance(Y[0], SampledFunction):
        arr, single = np.stack([y.flat for y in Y]), False
    else:
        arr = np.asarray(Y)
        single = arr.ndim == 1
        arr = arr.reshape(1, -1) if single else arr.reshape(arr.shape[0], -1)
    if arr.shape[1] != m:
        raise ValueError(f"observations have {arr.shape[1]} samples, expected {m}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("observations contain non-finite values")
    return arr, single


def check_vectors(W, weight=None, Y=None):
    """Normalize a family of images/vaguelettes to ``(array (N, m), weight)``.

    ``W`` may be a dictionary system, a list of sampled functions or an array.
    The weight is taken from the system, the sampled functions, or ``Y``.
    """
    from .dictionaries import DictionarySystem

    if isinstance(W, DictionarySystem):
        return W, W.weight
    if isinstance(W, (list, tuple)) and W and isinstance(W[0], SampledFunction):
        return np.stack([w.flat for w in W]), W[0].grid.weight if weight is None else weight
    W = np.atleast_2d(np.asarray(W))
    if weight is None:
        if isinstance(Y, SampledFunction):
            weight = Y.grid.weight
        else:
            raise ValueError("pass weight= when images are plain arrays")
    return W, float(weight)
