"""procqa: procedural-video question answering at desk scale.

Eight video-representation variants (question-only, frame recurrence,
segment sequence, segment graph, and a recurrent-graph hybrid, each with
and without question attention), two answer heads, narrative modalities,
a synthetic recipe world with a brute-force QA oracle, and a training
harness — all on a small tape-based autodiff core.
"""

from . import accel, autodiff, blocks, fusion, heads, models, qagen, world
from .autodiff import ContractError, DimensionError, NumericsError, Tape, Tensor
from .dataset import (
    DatasetConfig,
    Manifest,
    SchemaError,
    generate_splits,
    load_dataset,
    save_dataset,
)
from .harness import MetricsReport, RunConfig, evaluate_checkpoint, train
from .model import QAModel, build_token_vocab, prepare_split
from .qagen import QAItem, generate_qa, oracle_answer
from .world import RecipeTrace, WorldConfig, generate_recipe

__version__ = "0.1.0"
