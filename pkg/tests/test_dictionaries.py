import csv

import numpy as np
import pytest

from invdetect.dictionaries import (
    DictionarySystem,
    anomaly_system,
    vaguelettes_convolution,
    vaguelettes_integration,
    vaguelettes_radon,
    write_dictionary_csv,
    write_values_csv,
)
from invdetect.gram import coherence
from invdetect.operators import ConvolutionKernel, ForwardOperator, radon_forward
from invdetect.sampling import SampledFunction, inner_product_n, make_uniform_grid, product_grid
from invdetect.wavelets import Wavelet2DIndex, build_index_set_interval, build_index_set_square_2d, daubechies_cascade

from conftest import radon_operator


def test_integration_lambda(integration_system):
    np.testing.assert_array_equal(integration_system.lam, 2.0**-6)
    assert integration_system.N == 54


def test_integration_assumption_check(integration_system):
    s = integration_system
    w = s.weight
    lhs = w * np.sum(s.images * s.vaguelettes, axis=1) / s.lam
    uu = w * np.sum(s.elements**2, axis=1)
    assert np.max(np.abs(lhs - uu)) <= 5e-2


def test_integration_biorthogonality(integration_system):
    s = integration_system
    B = s.weight * s.vaguelettes @ s.vtilde.T
    assert np.max(np.abs(B - np.eye(s.N))) <= 5e-2


def test_vtilde_is_scaled_image(integration_system):
    s = integration_system
    assert np.max(np.abs(s.vtilde - s.images / s.lam[:, None])) == 0


def test_vtilde_matches_antiderivative_profile(db6, integration_system):
    # the closed form 2^{j/2} Psi(2^j x - l) with Psi the antiderivative of psi
    from invdetect.wavelets import wavelet_element

    s = integration_system
    g = s.operator.input_grid
    for i in (0, 20, 53):
        j, l = s.index_set[i]
        closed = wavelet_element(db6, j, l, g, "ipsi").values
        assert np.max(np.abs(s.vtilde[i] - closed)) <= 1e-2 * np.max(np.abs(closed))


def test_elements_normalized(integration_system):
    s = integration_system
    norms = np.sqrt(s.weight * np.sum(s.elements**2, axis=1))
    assert np.all(np.abs(norms - 1) <= 1e-2)


def test_integration_rejects_haar(unit_grid):
    haar = daubechies_cascade(2, 8)
    with pytest.raises(ValueError):
        vaguelettes_integration(haar, [(3, 0)], unit_grid)


def test_integration_coherence_bounded_by_support_length(integration_anomalies, db6):
    rep = coherence(integration_anomalies.images, integration_anomalies.weight)
    assert rep.M_sigma <= db6.support_length


def test_system_invariants(integration_anomalies):
    s = integration_anomalies
    with pytest.raises(ValueError):
        DictionarySystem(s.operator, [], s.element_fn, s.images[:0])
    with pytest.raises(ValueError):
        DictionarySystem(s.operator, s.index_set, s.element_fn, s.images, lam=np.zeros(s.N))


def test_synthesize_and_lazy_elements(integration_anomalies):
    s = integration_anomalies
    c = np.zeros(s.N)
    c[3], c[7] = 2.0, -1.0
    f = s.synthesize(c)
    np.testing.assert_allclose(f.values, 2 * s.element(3).values - s.element(7).values)
    lazy = DictionarySystem(s.operator, s.index_set, s.element_fn, s.images)
    np.testing.assert_allclose(lazy.synthesize(c).values, f.values)


@pytest.fixture(scope="module")
def conv_grid():
    return make_uniform_grid(0, 1, 2**12)


def test_convolution_a_zero_is_identity(db6, conv_grid):
    k = ConvolutionKernel.power_decay(1.0, 0.0)
    s = vaguelettes_convolution(k, db6, 5, conv_grid)
    np.testing.assert_allclose(s.lam, 1.0)
    np.testing.assert_allclose(s.vaguelettes, s.elements, atol=1e-12)
    np.testing.assert_allclose(s.vtilde, s.elements, atol=1e-12)


@pytest.mark.parametrize("C,a", [(1.0, 1.0), (0.5, 2.0), (3.0, 0.5)])
def test_convolution_lambda(db6, conv_grid, C, a):
    s = vaguelettes_convolution(ConvolutionKernel.power_decay(C, a), db6, 4, conv_grid)
    np.testing.assert_allclose(s.lam, 2.0 ** (-4 * a) * C)


def test_convolution_biorthogonality(db6, conv_grid):
    k = ConvolutionKernel.power_decay(1.0, 1.0)
    s5 = vaguelettes_convolution(k, db6, 5, conv_grid)
    s6 = vaguelettes_convolution(k, db6, 6, conv_grid)
    V = np.concatenate([s5.vaguelettes, s6.vaguelettes])
    Vt = np.concatenate([s5.vtilde, s6.vtilde])
    B = conv_grid.weight * V @ np.conj(Vt).T
    assert np.max(np.abs(B - np.eye(B.shape[0]))) <= 5e-2


def test_convolution_pairing_identity(db6, conv_grid):
    # <K f, v_k> = lambda_k <f, u_k> for arbitrary f, exactly on the grid
    k = ConvolutionKernel.power_decay(2.0, 1.0)
    s = vaguelettes_convolution(k, db6, 5, conv_grid)
    f = SampledFunction(conv_grid, np.random.default_rng(0).standard_normal(conv_grid.n))
    Kf = s.operator.apply(f)
    lhs = s.pair(Kf, "vaguelettes")
    rhs = s.lam * conv_grid.weight * (s.elements @ f.flat)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * np.max(np.abs(rhs)))


def test_convolution_missing_decay(db6, conv_grid):
    with pytest.raises(ValueError):
        vaguelettes_convolution(ConvolutionKernel.periodic_gaussian(0.1), db6, 5, conv_grid)


def test_convolution_vanishing_coefficient(db6, conv_grid):
    base = ConvolutionKernel.power_decay(1.0, 1.0)

    def coeffs(m):
        out = base.coefficients(m)
        out[np.abs(np.asarray(m)) == 3] = 0.0
        return out

    k = ConvolutionKernel(coefficients=coeffs, decay_params=(1.0, 1.0))
    with pytest.raises(ValueError):
        vaguelettes_convolution(k, db6, 5, conv_grid)


def test_radon_lambda(radon_system):
    np.testing.assert_allclose(radon_system.lam, 2.0**-1.5)
    assert radon_system.N == 12


def test_radon_images_match_direct_projection(radon_system):
    s = radon_system
    for i in (0, 4, 11):
        direct = s.operator.apply(s.element(i)).flat
        assert np.linalg.norm(direct - s.images[i]) <= 2e-3 * np.linalg.norm(direct)


def _bumps(grid, seed):
    rng = np.random.default_rng(seed)
    X, Y = np.meshgrid(grid.axes[0], grid.axes[1], indexing="ij")
    f = np.zeros(grid.shape)
    for _ in range(6):
        cx, cy = rng.uniform(-0.3, 0.3, 2)
        f += rng.standard_normal() * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * 0.06**2))
    return SampledFunction(grid, f)


def test_radon_pairing_identity_random_f(radon_system):
    s = radon_system
    f = _bumps(s.operator.input_grid, 1)
    lhs = s.pair(s.operator.apply(f), "vaguelettes")
    rhs = s.lam * s.operator.input_grid.weight * (s.elements @ f.flat)
    assert np.linalg.norm(lhs - rhs) <= 5e-2 * np.linalg.norm(rhs)


def test_radon_ramp_matches_2d_fourier_multiplier(radon_system):
    # independent route: |xi| / (2 pi) applied to the image by a padded 2-D DFT, then projected
    s = radon_system
    g = s.operator.input_grid
    m, h = g.shape[0], g.spacing[0]
    M = 4 * m
    off = (M - m) // 2
    side = make_uniform_grid(-0.5 - off * h, -0.5 - off * h + M * h, M)
    nu = np.fft.fftfreq(M, h)
    mult = np.sqrt(nu[:, None] ** 2 + nu[None, :] ** 2)
    for i in (0, 8):
        pad = np.zeros((M, M))
        pad[off : off + m, off : off + m] = s.element(i).values
        omega = np.real(np.fft.ifft2(np.fft.fft2(pad) * mult))
        big = SampledFunction(product_grid(side, side), omega)
        sino = radon_forward(big, s.operator.params["t_grid"], s.operator.params["theta_grid"]).flat
        v = s.lam[i] * sino
        assert np.linalg.norm(v - s.vaguelettes[i]) <= 0.1 * np.linalg.norm(s.vaguelettes[i])


def test_radon_zero_signal(radon_system):
    s = radon_system
    zero = s.operator.output_grid.zeros()
    assert np.all(s.pair(zero, "vaguelettes") == 0) and np.all(s.pair(zero) == 0)


def test_radon_index_outside_domain(db4, radon_fast_op):
    with pytest.raises(ValueError):
        vaguelettes_radon(db4, [Wavelet2DIndex(3, (-5, 0), 1)], radon_fast_op)


def test_radon_under_resolved(db4):
    op = radon_operator(m=16, nt=16, nth=8)
    with pytest.raises(ValueError):
        vaguelettes_radon(db4, build_index_set_square_2d(db4, 5)[:3], op)


def test_dictionary_csv(tmp_path, integration_system, radon_system):
    p = tmp_path / "d.csv"
    write_dictionary_csv(p, integration_system)
    rows = list(csv.DictReader(open(p)))
    assert len(rows) == 54 and set(rows[0]) == {"j", "l", "lambda", "image_norm"}
    assert float(rows[0]["lambda"]) == 2.0**-6
    write_dictionary_csv(p, radon_system)
    rows = list(csv.DictReader(open(p)))
    assert set(rows[0]) == {"j", "l1", "l2", "eps", "lambda", "image_norm"}
    q = tmp_path / "v.csv"
    write_values_csv(q, radon_system, "vaguelettes")
    vals = np.loadtxt(q, delimiter=",")
    np.testing.assert_array_equal(vals, radon_system.vaguelettes)
