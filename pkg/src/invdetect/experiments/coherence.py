"""Image coherence of periodized wavelets under a smooth periodic kernel.

Anomalies are the ``2^j`` translates ``psi_{j,k}`` (shift ``k / 2^j``);
templates are ``n_shifts`` translates of the same wavelet on a coarser shift
lattice ``l / n_shifts``.  For each anomaly the nearest template (circular
shift distance) is paired with it and the normalized correlation of the two
images under the convolution is recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..operators import ConvolutionKernel, reflect_modes
from ..sampling import make_uniform_grid
from ..wavelets import WaveletBasis1D, periodized_element

__all__ = ["CoherenceExperimentReport", "deconv_coherence_experiment", "template_correlations"]


@dataclass(frozen=True)
class CoherenceExperimentReport:
    j: int
    n_shifts: int
    inf_correlation: float
    worst_anomaly: int
    correlations: tuple

    def as_dict(self) -> dict:
        return {"j": self.j, "n_shifts": self.n_shifts, "inf_correlation": self.inf_correlation, "worst_anomaly": self.worst_anomaly}


def _check_inputs(basis: WaveletBasis1D, kernel: ConvolutionKernel, n: int):
    if not basis.is_differentiable:
        raise ValueError(f"{basis.family} is not differentiable; use at least 6 taps")
    if kernel.is_flat(n):
        raise ValueError("kernel is flat (h' = 0): every image is constant")
    if kernel.decay_params is not None and kernel.decay_params[1] <= 2:
        raise ValueError("kernel with |m|^-a decay, a <= 2, is not continuously differentiable")


def template_correlations(basis: WaveletBasis1D, kernel: ConvolutionKernel, j: int, shifts, n: int = 2**14) -> np.ndarray:
    """Normalized correlation of ``K psi_{j,0}`` with its translates by ``shifts``.

    Translation by ``s`` multiplies the Fourier coefficients by
    ``exp(-2 pi i m s)``, so the correlation is
    ``Re sum |a_m|^2 exp(2 pi i m s) / sum |a_m|^2``.
    """
    grid = make_uniform_grid(0.0, 1.0, n)
    u = periodized_element(basis, j, 0, grid).values
    a = np.fft.fft(u) / n * reflect_modes(kernel.fourier(n))
    w = np.abs(a) ** 2
    m = np.fft.fftfreq(n, 1.0 / n)
    s = np.asarray(shifts, dtype=float)
    return (np.cos(2 * np.pi * np.outer(s, m)) @ w) / w.sum()


def deconv_coherence_experiment(basis: WaveletBasis1D, kernel: ConvolutionKernel, j: int, n_shifts: int = 32, n: int = 2**14) -> CoherenceExperimentReport:
    _check_inputs(basis, kernel, n)
    if n_shifts < 1:
        raise ValueError("need at least one template")
    k = np.arange(2**j)
    anomaly = k / 2.0**j
    templates = np.arange(n_shifts) / n_shifts
    diff = (anomaly[:, None] - templates[None, :] + 0.5) % 1.0 - 0.5
    nearest = np.argmin(np.abs(diff), axis=1)
    d = diff[k, nearest]
    # exact matches are reported as 1 without roundoff
    corr = np.where(np.abs(d) < 1e-15, 1.0, template_correlations(basis, kernel, j, d, n))
    worst = int(np.argmin(corr))
    return CoherenceExperimentReport(int(j), int(n_shifts), float(corr[worst]), worst, tuple(float(c) for c in corr))
