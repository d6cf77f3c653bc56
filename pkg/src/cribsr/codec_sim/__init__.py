"""Monte Carlo double binning and forward-encoding codecs at desk scale."""

from .codebook import (
    MAX_LAYER,
    MAX_N,
    Codebook,
    Layout,
    Policy,
    SimConfig,
    bin_audit,
    build_codebook,
    source_blocks,
)
from .engine import (
    DecFail,
    EncFail,
    Encoding,
    SimReport,
    TrialRecord,
    decode2_noncausal,
    encode_noncausal,
    merge,
    rate_point,
    run_block_markov,
    run_double_binning,
    run_trial,
    simulate,
    trial_seed,
)
from .typicality import deviation_scores, is_typical, typical_average_bound

__all__ = [
    "MAX_LAYER", "MAX_N", "Codebook", "Layout", "Policy", "SimConfig", "bin_audit", "build_codebook",
    "source_blocks", "DecFail", "EncFail", "Encoding", "SimReport", "TrialRecord", "decode2_noncausal",
    "encode_noncausal", "merge", "rate_point", "run_block_markov", "run_double_binning", "run_trial", "simulate",
    "trial_seed", "deviation_scores", "is_typical", "typical_average_bound",
]
