"""Label recovery from pairwise and local queries, viewed as locally encodable source coding."""

from .bounds import (
    BoundCurve,
    alg1_exact_error,
    alg1_printed_error,
    and_distortion_formula,
    counting_lower_rate,
    distortion_lower_thm3,
    distortion_rate_unconstrained,
    gallager_lower_rate,
    massey_bound,
    miller_rate,
    queries_for_target_delta,
    trivial_lower_rate,
    xor_achievable_rate,
)
from .decoders import (
    DecodeReport,
    decode_and_onehop,
    decode_group_same_cluster,
    decode_threshold_alg1,
    decode_xor_typical,
)
from .errors import DecodeFailure, DomainError, ParseError, QueryCodeError, ValidationError
from .model import (
    AnswerVector,
    LabelVector,
    NoiseModel,
    Prior,
    QueryGraph,
    QueryKind,
    hamming_distortion,
    sample_labels,
)
from .oracle import answer, answer_noiseless, apply_noise
from .schemes import (
    build_group_scheme,
    build_random_and_scheme,
    build_ring_regular_scheme,
    build_xor_ensemble,
    subsample_ring,
)
from .sim import ExperimentConfig, SimResult, run_experiment, run_trial, survey_replication, sweep

__version__ = "0.1.0"

__all__ = [
    "BoundCurve",
    "alg1_exact_error",
    "alg1_printed_error",
    "and_distortion_formula",
    "counting_lower_rate",
    "distortion_lower_thm3",
    "distortion_rate_unconstrained",
    "gallager_lower_rate",
    "massey_bound",
    "miller_rate",
    "queries_for_target_delta",
    "trivial_lower_rate",
    "xor_achievable_rate",
    "DecodeReport",
    "decode_and_onehop",
    "decode_group_same_cluster",
    "decode_threshold_alg1",
    "decode_xor_typical",
    "AnswerVector",
    "LabelVector",
    "NoiseModel",
    "Prior",
    "QueryGraph",
    "QueryKind",
    "hamming_distortion",
    "sample_labels",
    "build_group_scheme",
    "build_random_and_scheme",
    "build_ring_regular_scheme",
    "build_xor_ensemble",
    "subsample_ring",
    "DecodeFailure",
    "DomainError",
    "ParseError",
    "QueryCodeError",
    "ValidationError",
    "answer",
    "answer_noiseless",
    "apply_noise",
    "ExperimentConfig",
    "SimResult",
    "run_experiment",
    "run_trial",
    "survey_replication",
    "sweep",
]
