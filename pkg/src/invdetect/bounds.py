"""Closed-form detection boundaries and separation rates."""

from __future__ import annotations

import csv
import itertools

import numpy as np
from scipy.special import ndtri

from ._validation import check_alpha, check_sigma
from .detection import sup_threshold
from .sampling import ScalarField

__all__ = [
    "gaussian_quantile",
    "boundary_case1_asymptotic",
    "boundary_case1_nonasymptotic",
    "d_alpha_delta",
    "upper_bound_case2",
    "c_delta",
    "lower_bound_case2",
    "separation_rate_case2",
    "bound_table",
    "write_bound_table_csv",
]


def gaussian_quantile(p: float) -> float:
    """Standard normal quantile ``z_p``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return float(ndtri(p))


def _check_N(N):
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")


def boundary_case1_asymptotic(sigma: float, N: int) -> float:
    """Leading-order boundary ``sqrt(2 sigma^2 log N)``."""
    sigma = check_sigma(sigma)
    _check_N(N)
    return float(np.sqrt(2 * sigma**2 * np.log(N)))


def boundary_case1_nonasymptotic(sigma: float, N: int, alpha: float, field=ScalarField.REAL) -> float:
    """``sigma (c_alpha + z_{1-alpha})``: above it the sup test misses with probability at most alpha."""
    sigma = check_sigma(sigma)
    return sigma * (sup_threshold(N, alpha, field) + gaussian_quantile(1 - check_alpha(alpha)))


def d_alpha_delta(alpha: float, delta: float) -> float:
    alpha = check_alpha(alpha)
    delta = float(delta)
    if not alpha < delta < 1:
        raise ValueError(f"need alpha < delta < 1, got alpha={alpha}, delta={delta}")
    g = delta - alpha
    inner = np.log(1 / (alpha * g)) + np.sqrt(2 * np.log(1 / g)) + np.sqrt(2 * np.log(1 / alpha))
    return float(np.sqrt(np.log(1 / g)) + np.sqrt(inner))


def upper_bound_case2(sigma: float, frob_Xi: float, alpha: float, delta: float, field=ScalarField.REAL) -> float:
    """``eps d_alpha(delta) sigma sqrt(||Xi||_F)``; ``eps`` is 1 (real) or sqrt(2) (complex)."""
    sigma = check_sigma(sigma)
    if not frob_Xi >= 0:
        raise ValueError("Frobenius norm must be nonnegative")
    eps = ScalarField.coerce(field).epsilon
    return float(eps * d_alpha_delta(alpha, delta) * sigma * np.sqrt(frob_Xi))


def c_delta(delta: float) -> float:
    """``(log(1 + (2 - 2 delta)^2))^{1/4}``, defined for ``delta`` in ``(0, 1]``."""
    delta = float(delta)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    return float(np.log1p((2 - 2 * delta) ** 2) ** 0.25)


def lower_bound_case2(sigma: float, frob_XiTilde_inv: float, delta: float) -> float:
    """``c(delta) sigma sqrt(||XiTilde^{-1}||_F)``."""
    sigma = check_sigma(sigma)
    if not frob_XiTilde_inv > 0:
        raise ValueError("Frobenius norm must be positive")
    return float(c_delta(delta) * sigma * np.sqrt(frob_XiTilde_inv))


def separation_rate_case2(sigma: float, N: int) -> float:
    """``sigma N^{1/4}``."""
    sigma = check_sigma(sigma)
    _check_N(N)
    return float(sigma * N**0.25)


def bound_table(Ns, alphas, deltas, sigma: float = 1.0, field=ScalarField.REAL) -> list:
    """Rows over the ``(N, alpha, delta)`` grid, assuming ``||Xi||_F = sqrt(N)``.

    Cells where a formula's domain does not apply are ``nan``.
    """
    rows = []
    for N, a, d in itertools.product(Ns, alphas, deltas):
        frob = float(np.sqrt(N))
        up = upper_bound_case2(sigma, frob, a, d, field) if a < d < 1 else float("nan")
        rows.append(
            {
                "N": int(N),
                "alpha": float(a),
                "delta": float(d),
                "case1_asymptotic": boundary_case1_asymptotic(sigma, N),
                "case1_nonasymptotic": boundary_case1_nonasymptotic(sigma, N, a, field),
                "d_alpha_delta": d_alpha_delta(a, d) if a < d < 1 else float("nan"),
                "case2_upper": up,
                "case2_lower": lower_bound_case2(sigma, frob, d) if 0 < d <= 1 else float("nan"),
                "case2_rate": separation_rate_case2(sigma, N),
            }
        )
    return rows


def write_bound_table_csv(path, rows: list):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
