"""Diversity-reducing primitives, their hierarchical compositions and property checks."""
from .combiners import ConcatLayout, average, average_recover, concat, split
from .core import (
    DEFAULT_GRID,
    FiniteSet,
    MappingLog,
    Sample,
    Shape,
    ShapeError,
    canonical_quantize,
    diversity,
    log_is_surjective_function,
)
from .primitive import (
    ArchetypeId,
    Codebook,
    Primitive,
    encode,
    output_set,
    project,
    train_exemplar_quantizer,
    train_primitive,
    train_trivial,
)

__version__ = "0.1.0"
