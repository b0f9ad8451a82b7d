"""Warm-start softmax classifier heads from a trained source classifier.

New class rows are built as convex combinations of the most similar source
rows, with similarity taken from a taxonomy, from word embeddings, or from
inference of the source model on the new data.  See the subpackage modules:

* ``matrixio``: plain-text file formats for matrices, labels, features
* ``taxonomy``: DAG depths, Wu-Palmer similarity, target typing
* ``embedsim``: label embedding and cosine similarity
* ``infersim``: source-output F-scores and the ``ClassifierHead`` bundle
* ``warmstart``: neighbor selection and head construction
* ``trainer``: Adam training with dropout and metric tracking
* ``experiment``: synthetic tasks and comparison protocols
* ``backend``: numba/numpy kernel selection (``HEADSTART_BACKEND``)
"""

from .embedsim import (
    EmbeddingTable,
    cosine,
    embed_label,
    read_embeddings,
    tokenize_label,
    word2vec_similarity_matrix,
    write_embeddings,
)
from .infersim import (
    ClassifierHead,
    fscore,
    inference_similarity_matrix,
    predict_source,
    read_head,
    write_head,
)
from .matrixio import (
    FeatureDataset,
    FormatError,
    LabelEntry,
    LabelSet,
    PredictionRecord,
    read_features,
    read_labels,
    read_matrix,
    read_predictions,
    write_features,
    write_labels,
    write_matrix,
    write_predictions,
)
from .taxonomy import (
    TargetType,
    Taxonomy,
    TaxonomyError,
    read_taxonomy,
    read_types,
    wordnet_similarity_matrix,
    write_taxonomy,
    write_types,
)
from .trainer import (
    MetricHistory,
    MetricRecord,
    TrainConfig,
    evaluate,
    forward,
    train,
    write_history,
)
from .warmstart import (
    InitSpec,
    Neighbor,
    build_target_head,
    combine,
    select_neighbors,
    xavier_init,
)
from .experiment import (
    ComparisonReport,
    SyntheticTask,
    chance_macro_f1,
    generate_task,
    run_comparison,
    run_data_reduction,
    run_k_sweep,
)

__version__ = "0.1.0"
