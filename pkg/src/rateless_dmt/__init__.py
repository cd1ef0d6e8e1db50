"""Diversity-multiplexing tradeoff of rateless codes over block fading.

Exact rational tradeoff curves, a Monte Carlo engine for the rateless
stopping protocol over Rayleigh MIMO channels, permutation codes with
sequential ML prefix decoding, and a CLI that reproduces the curves and
runs the verification suite.
"""

from .configs import AntennaConfig, RateSpec, RatelessConfig
from .permcode import (
    Constellation,
    ErrorDecomposition,
    PermutationCode,
    ReceivedPrefix,
    UniversalityEvidence,
    build_qam,
    encode,
    identity_code,
    load_codebook,
    ml_decode_prefix,
    prefix_min_products,
    run_rateless_code_trials,
    save_codebook,
    search_permutation_code,
    universality_margin,
)
from .simulate import (
    ChannelRealization,
    EffectiveRate,
    OutageProfile,
    SlopeEstimate,
    SnrPoint,
    StopOutcome,
    block_mutual_info,
    diversity_slope,
    diversity_slope_from_neg_log2,
    effective_rate,
    estimate_outage_profile,
    rateless_stop,
    run_rateless_experiment,
    sample_channel,
    siso_outage_closed_form,
    siso_outage_neg_log2,
    siso_outage_profile,
)
from .tradeoff import (
    DmtCurve,
    GainPoint,
    conventional_dmt,
    default_r_n_grid,
    parallel_dmt_curve,
    parallel_identical_dmt,
    parallel_iid_dmt,
    rateless_dmt_curve,
    rateless_dmt_point,
    rateless_segment,
    tradeoff_f,
    write_curves_csv,
)

__version__ = "0.1.0"
