"""Zero-shot referring image segmentation engine.

Consumes exported cross-attention tensors, candidate masks, and
embeddings through a small binary container format, and produces a
selected referring mask plus dataset-level IoU metrics.  All pre-trained
model inference lives behind the file boundary; this package is pure
numpy and fully deterministic.
"""

from .attnmap import (
    AttentionStack,
    CorrelationMap,
    average_heads,
    correlation_matrix,
    normalize_minmax,
    resize_bilinear,
    select_token_map,
)
from .errors import RefdiffError
from .evaluation import EvalReport, emit_report, evaluate_dataset, iou
from .fixtures import FixtureSpec, SplitMix64, gen_dataset, gen_sample
from .io import (
    Direction,
    Mode,
    RunConfig,
    SampleManifest,
    load_dataset_index,
    load_manifest,
    load_tensor,
    peek_tensor,
    save_tensor,
)
from .pipeline import segment_sample
from .proposals import (
    ProposalSet,
    ProposalSource,
    dedup_proposals,
    ingest_external_proposals,
    threshold_masks,
    weight_free_proposals,
)
from .refexpr import (
    ReferringExpression,
    detect_direction,
    find_root_token,
    parse_expression,
    tokenize,
)
from .scoring import (
    PositionalBias,
    ScoredSelection,
    build_positional_bias,
    combine_proposal_embedding,
    discriminative_score,
    fuse_scores,
    generative_score,
    select_best,
)

__version__ = "0.1.0"
