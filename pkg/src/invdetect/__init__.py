"""Minimax signal detection for linear inverse problems under white noise."""

from .bounds import (
    boundary_case1_asymptotic,
    boundary_case1_nonasymptotic,
    c_delta,
    d_alpha_delta,
    lower_bound_case2,
    separation_rate_case2,
    upper_bound_case2,
)
from .detection import Chi2Test, SupTest, TestOutcome, chi2_null_quantile, chi2_statistic, sup_statistic, sup_threshold
from .dictionaries import DictionarySystem, anomaly_system, vaguelettes_convolution, vaguelettes_integration, vaguelettes_radon
from .gram import (
    CoherenceReport,
    GramMatrix,
    GramVariant,
    NotPositiveDefinite,
    coherence,
    frobenius,
    frobenius_inverse,
    gram,
    greedy_negative_corr_subset,
    riesz_bounds,
)
from .operators import ConvolutionKernel, ForwardOperator, OperatorKind, apply, convolve_periodic, integrate_forward, radon_forward
from .sampling import (
    Grid,
    ObservationConfig,
    SampledFunction,
    ScalarField,
    inner_product_n,
    make_uniform_grid,
    simulate_observation,
)
from .wavelets import (
    Wavelet2DIndex,
    WaveletBasis1D,
    build_index_set_interval,
    build_index_set_square_2d,
    daubechies_cascade,
    wavelet_element,
)

__version__ = "0.1.0"
