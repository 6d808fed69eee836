import numpy as np
import pytest

from invdetect.experiments.coherence import deconv_coherence_experiment, template_correlations
from invdetect.operators import ConvolutionKernel, convolve_periodic
from invdetect.sampling import make_uniform_grid
from invdetect.wavelets import daubechies_cascade, periodized_element

N = 2**12


@pytest.fixture(scope="module")
def gauss():
    return ConvolutionKernel.periodic_gaussian(0.1)


def test_full_template_set_is_exact(db6, gauss):
    for j in (3, 5):
        rep = deconv_coherence_experiment(db6, gauss, j, n_shifts=2**j, n=N)
        assert rep.inf_correlation == 1.0


def test_template_correlation_matches_direct(db6, gauss):
    # Fourier formula against explicit convolution and shift on the grid
    grid = make_uniform_grid(0.0, 1.0, N)
    j = 4
    a = convolve_periodic(gauss, periodized_element(db6, j, 0, grid)).values
    for s in (1, 37, 200):
        b = np.roll(a, s)
        direct = np.dot(a, b) / np.dot(a, a)
        assert template_correlations(db6, gauss, j, [s / N], N)[0] == pytest.approx(direct, abs=1e-10)


def test_fixed_templates_lose_correlation_as_j_grows(db6, gauss):
    r6 = deconv_coherence_experiment(db6, gauss, 6, n_shifts=32, n=N)
    r8 = deconv_coherence_experiment(db6, gauss, 8, n_shifts=32, n=N)
    assert r6.inf_correlation < 1.0
    assert r8.inf_correlation <= r6.inf_correlation


def test_more_templates_raise_correlation(db6, gauss):
    vals = [deconv_coherence_experiment(db6, gauss, 7, n_shifts=s, n=N).inf_correlation for s in (16, 32, 64, 128)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 1.0


def test_report_fields(db6, gauss):
    rep = deconv_coherence_experiment(db6, gauss, 5, n_shifts=8, n=N)
    assert len(rep.correlations) == 32
    assert rep.correlations[rep.worst_anomaly] == rep.inf_correlation
    assert rep.as_dict()["n_shifts"] == 8


def test_input_errors(db6, gauss):
    haar = daubechies_cascade(2, 8)
    with pytest.raises(ValueError):
        deconv_coherence_experiment(haar, gauss, 4, n=N)
    flat = ConvolutionKernel(coefficients=lambda m: (m == 0).astype(float))
    with pytest.raises(ValueError):
        deconv_coherence_experiment(db6, flat, 4, n=N)
    with pytest.raises(ValueError):
        deconv_coherence_experiment(db6, ConvolutionKernel.power_decay(1.0, 2.0), 4, n=N)
    with pytest.raises(ValueError):
        deconv_coherence_experiment(db6, gauss, 4, n_shifts=0, n=N)
