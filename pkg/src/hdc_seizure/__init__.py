"""Binary hyperdimensional computing for windowed-biosignal classification.

The library encodes feature windows into bit-packed binary hypervectors
and classifies them with nearest-centroid models trained by single-pass,
multi-pass, multi-centroid, and weighted online strategies. The
``hdc-seizure`` command line drives the full experiment pipeline.
"""

__version__ = "0.1.0"

from .encoder import ItemMemory, encode_table, encode_window, fit_item_memory
from .evaluation import (
    LabelSequence,
    MetricsReport,
    evaluate_sequences,
    post_process,
    wilcoxon_signed_rank,
)
from .hv import (
    Accumulator,
    Hypervector,
    accumulate,
    bind,
    binarize,
    build_level_table,
    bundle,
    hamming,
    random_hv,
    similarity,
)
from .learning import (
    STRATEGIES,
    EncodedDataset,
    EncodedFile,
    Model,
    StopRule,
    predict,
    train_strategy,
)

__all__ = [
    "__version__",
    "Accumulator",
    "EncodedDataset",
    "EncodedFile",
    "Hypervector",
    "ItemMemory",
    "LabelSequence",
    "MetricsReport",
    "Model",
    "STRATEGIES",
    "StopRule",
    "accumulate",
    "binarize",
    "bind",
    "build_level_table",
    "bundle",
    "encode_table",
    "encode_window",
    "evaluate_sequences",
    "fit_item_memory",
    "hamming",
    "post_process",
    "predict",
    "random_hv",
    "similarity",
    "train_strategy",
    "wilcoxon_signed_rank",
]
