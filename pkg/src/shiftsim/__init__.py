"""Distributed discrete-distribution estimation under b-bit messages.

Simulates clusters of categorical datapoints whose distributions differ
sparsely from a shared center, the uniform-hashing communication codec, the
two-stage robust-collaboration + fine-tuning estimator with knowledge
transfer, the local/pooled baselines, and the synthetic and letter k-gram
experiment protocols.
"""

from ._backend import backend_name, use_backend
from .aggregate import CentralEstimate, entrywise_median, entrywise_trimmed_mean
from .codec import (
    EncodedMessage,
    HashKey,
    debias,
    decode_cluster,
    encode,
    encode_cluster,
    hashed_mean,
    read_messages,
    write_messages,
)
from .estimator import (
    default_alpha,
    fine_tune,
    robust_center,
    shift_estimate,
    transfer_to_new_cluster,
)
from .evaluation import (
    MetricSummary,
    baseline_global,
    baseline_local,
    entrywise_tests,
    heterogeneity_gap,
    metrics,
    pairwise_chi_squared,
)
from .model import (
    Distribution,
    FineTuneReport,
    HashedEstimate,
    HeterogeneitySpec,
    ShiftConfig,
    ShiftSimError,
    sparsity_distance,
    validate_distribution,
)
from .ngrams import (
    Corpus,
    KGramDistribution,
    empirical_kgram_distribution,
    kgram_index,
    load_corpus,
    normalize_text,
    resample_cluster,
)
from .seeds import derive_seed
from .synthetic import (
    PerturbationRecord,
    generate_clusters,
    perturb_sparse,
    sample_cluster,
    truncated_geometric_central,
    uniform_central,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "use_backend",
    "CentralEstimate",
    "entrywise_median",
    "entrywise_trimmed_mean",
    "EncodedMessage",
    "HashKey",
    "debias",
    "decode_cluster",
    "encode",
    "encode_cluster",
    "hashed_mean",
    "read_messages",
    "write_messages",
    "default_alpha",
    "fine_tune",
    "robust_center",
    "shift_estimate",
    "transfer_to_new_cluster",
    "MetricSummary",
    "baseline_global",
    "baseline_local",
    "entrywise_tests",
    "heterogeneity_gap",
    "metrics",
    "pairwise_chi_squared",
    "Distribution",
    "FineTuneReport",
    "HashedEstimate",
    "HeterogeneitySpec",
    "ShiftConfig",
    "ShiftSimError",
    "sparsity_distance",
    "validate_distribution",
    "Corpus",
    "KGramDistribution",
    "empirical_kgram_distribution",
    "kgram_index",
    "load_corpus",
    "normalize_text",
    "resample_cluster",
    "derive_seed",
    "PerturbationRecord",
    "generate_clusters",
    "perturb_sparse",
    "sample_cluster",
    "truncated_geometric_central",
    "uniform_central",
    "__version__",
]
