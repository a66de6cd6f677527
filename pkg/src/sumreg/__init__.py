"""Decorrelating regularizers from summary vectors of correlation matrices.

The summary vector of a d x d cross-correlation or covariance matrix sums
its wrapped diagonals; regularizing those sums instead of the individual
entries can be computed spectrally in O(n d log d) straight from the
embeddings, never materializing the matrix. This package provides the
exact naive oracle, the spectral fast path with analytic gradients, block
grouping, feature permutation, composite twin-view losses, a desk-scale
synthetic trainer, and a kernel micro-benchmark harness.
"""

from .batch import (
    CorrMatrix,
    EmbeddingBatch,
    PermutationSpec,
    StandardizedBatch,
    center,
    covariance,
    cross_correlation,
    permute_features,
    permute_matrix,
    sample_permutation,
    standardize,
)
from .bench import TimingRecord, bench_sweep, declared_buffers, run_bench
from .errors import (
    BatchError,
    ConfigError,
    ContractError,
    DataError,
    DimensionError,
    NumericError,
    SumregError,
    TrainingError,
)
from .losses import LossBreakdown, bt_style_loss, normalized_bt_metric, normalized_vic_metric, vic_style_loss
from .mlp import Mlp, MlpSpec
from .oracle import (
    circ_conv_naive,
    involution_naive,
    roff_naive,
    rsum_from_summary,
    rsum_grouped_naive,
    rvar,
    summary_naive,
    summary_via_circcorr_naive,
)
from .regularizers import (
    GradBatch,
    PermutationStream,
    RegConfig,
    roff_baseline,
    rsum_cov,
    rsum_cross,
    rvar_batch,
)
from .spectral import circ_conv_fft, dft, idft, summary_fft, summary_fft_grouped, summary_power_fft
from .trainer import (
    SyntheticTaskSpec,
    TrainLog,
    generate_twin_batch,
    linear_probe,
    train,
)

__version__ = "0.1.0"
