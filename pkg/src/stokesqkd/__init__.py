"""Continuous-variable QKD with Gaussian-modulated Stokes variables of bright polarized coherent states."""

from .channel import (
    Basis,
    ChannelParams,
    RoundBatch,
    RoundRecord,
    clone_noise,
    draw_modulation,
    eta_to_nB,
    make_rng,
    nB_to_eta,
    simulate_rounds,
    transmit,
    transmit_round,
)
from .infotheory import (
    MIReport,
    Regime,
    SurfaceGrid,
    delta_i,
    estimate_mi_gaussian,
    generate_surface,
    mutual_info_ab,
    mutual_info_ae,
)
from .stokes import (
    NormalizedStokes,
    PolarizedState,
    StokesMoments,
    encode_modulation,
    normalized_stokes,
    normalized_variances,
    stokes_expectations,
    stokes_variances,
    uncertainty_product,
)

__version__ = "0.1.0"
