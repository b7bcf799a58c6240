"""Streaming change-point detection for dynamic networks under the snapshot model.

Samples a fixed set of dyads, estimates their edge probabilities per sliding
window from two-state Markov chain statistics, scores the dissimilarity of
consecutive windows, and flags the windows whose score exceeds an
upper-quantile threshold.  Includes a temporally correlated synthetic
generator with scripted model changes and an evaluation harness.
"""

from .chains import (
    ChainCounts,
    DyadSample,
    WindowConfig,
    accumulate_counts,
    sample_dyads,
    window_index_sequence,
)
from .detector import (
    DetectionResult,
    DetectorConfig,
    compute_threshold,
    flag_changes,
    run_pipeline,
)
from .dissimilarity import GroupPartition, euclidean, kl_group, ks_group, score_pair
from .estimators import (
    DegenerateChainError,
    WindowEstimate,
    frequency_estimate,
    mle_approx_multi,
    mle_single_chain,
)
from .evaluate import (
    bench_scaling,
    likelihood_curve,
    precision_recall,
    run_benchmark_scenario,
    truth_windows,
)
from .generate import (
    BENCHMARK_CHANGE_WINDOWS,
    ChangeBlockRates,
    GeneratedSequence,
    ModelSchedule,
    ReassignCommunities,
    RegenerateWeights,
    ScheduledMutation,
    apply_mutation,
    benchmark_schedule,
    evolve_snapshot,
    generate_sequence,
    iter_sequence,
    sample_initial_snapshot,
    snapshot_log_likelihood,
    stream_er_snapshots,
)
from .models import (
    BTER,
    BlockChungLu,
    ChungLu,
    ErdosRenyi,
    GenerativeModel,
    Snapshot,
    StochasticBlockModel,
    dyad_count,
    dyad_index,
    dyad_pair,
)
from .streams import (
    IngestError,
    SnapshotReader,
    ingest_snapshots,
    read_change_points,
    read_corpus,
    write_corpus,
)

__version__ = "0.1.0"
