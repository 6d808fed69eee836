from .coherence import CoherenceExperimentReport, deconv_coherence_experiment
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .power import (
    BracketError,
    Chi2PairingSimulator,
    DeltaEstimate,
    GridSimulator,
    PowerCurve,
    PowerPoint,
    SupPairingSimulator,
    find_delta_at_power,
    sample_uniform_sphere_alternative,
)
from .studies import beta_star_case1, beta_star_case2, build_system, radon_scenario_figure1, run_study
