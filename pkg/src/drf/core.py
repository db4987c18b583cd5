"""Shared value types: shapes, samples, finite sets and mapping logs.

Set semantics are exact: two samples are the same element when their shapes
match and their (already quantized) values are bitwise equal.  Quantization
onto a fixed grid happens at the boundaries where new values are created, so
cardinalities are always decidable.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_GRID = 1e-6


class ShapeError(ValueError):
    """Raised when a sample or set does not have the expected shape."""


@dataclass(frozen=True)
class Shape:
    dims: tuple[int, ...]

    def __init__(self, dims: Iterable[int] | int):
        if isinstance(dims, (int, np.integer)):
            dims = (int(dims),)
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise ShapeError("shape needs at least one extent")
        if any(d < 1 for d in dims):
            raise ShapeError(f"every extent must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def to_json(self) -> list[int]:
        return list(self.dims)

    def __repr__(self) -> str:
        return f"Shape{self.dims}"


class Sample:
    """Immutable flat vector of finite doubles with a declared shape.

    Equality and hashing are exact on the stored values (``-0.0`` is folded
    into ``0.0``), which is what gives sets of samples a well defined
    cardinality.
    """

    __slots__ = ("shape", "values", "_key")

    def __init__(self, values, shape: Shape | Iterable[int] | int | None = None):
        arr = np.array(values, dtype=np.float64).reshape(-1)
        if shape is None:
            shape = Shape(arr.size)
        elif not isinstance(shape, Shape):
            shape = Shape(shape)
        if arr.size != shape.size:
            raise ShapeError(f"{arr.size} values do not fit {shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample values must be finite")
        arr = arr + 0.0  # folds -0.0 into 0.0
        arr.setflags(write=False)
        self.shape = shape
        self.values = arr
        self._key = arr.tobytes()

    @property
    def key(self) -> tuple[tuple[int, ...], bytes]:
        return (self.shape.dims, self._key)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return self.shape == other.shape and self._key == other._key

    def __hash__(self) -> int:
        return hash(self.key)

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        vals = ", ".join(f"{v:g}" for v in self.values[:6])
        more = ", ..." if self.values.size > 6 else ""
        return f"Sample([{vals}{more}])"

    def to_json(self) -> list[float]:
        return [float(v) for v in self.values]

    def sort_key(self) -> tuple[float, ...]:
        return tuple(self.values.tolist())


def canonical_quantize(x: Sample, grid: float = DEFAULT_GRID) -> Sample:
    """Round every value of ``x`` to the nearest multiple of ``grid`` (ties to even)."""
    if not grid > 0:
        raise ValueError(f"grid must be positive, got {grid}")
    return Sample(quantize_array(x.values, grid), x.shape)


def quantize_array(values: np.ndarray, grid: float) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot quantize non-finite values")
    return np.rint(values / grid) * grid + 0.0


class FiniteSet:
    """Deduplicated, immutable collection of samples.

    Iteration follows first-insertion order; equality ignores order.  When a
    ``grid`` is given, elements are quantized before deduplication.
    """

    __slots__ = ("_items", "_index")

    def __init__(self, elements: Iterable[Sample] = (), grid: float | None = None):
        items: list[Sample] = []
        index: dict = {}
        for s in elements:
            if grid is not None:
                s = canonical_quantize(s, grid)
            if s.key not in index:
                index[s.key] = len(items)
                items.append(s)
        self._items = tuple(items)
        self._index = index

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self._items)

    def __contains__(self, s: object) -> bool:
        return isinstance(s, Sample) and s.key in self._index

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteSet):
            return NotImplemented
        return self._index.keys() == other._index.keys()

    def __hash__(self) -> int:
        return hash(frozenset(self._index))

    def __repr__(self) -> str:
        return f"FiniteSet(n={len(self)})"

    def add(self, s: Sample) -> FiniteSet:
        return FiniteSet((*self._items, s))

    def index(self, s: Sample) -> int:
        return self._index[s.key]

    def shapes(self) -> set[Shape]:
        return {s.shape for s in self._items}

    def canonical(self) -> list[Sample]:
        """Elements in lexicographic order of their values."""
        return sorted(self._items, key=Sample.sort_key)

    def to_json(self) -> list[list[float]]:
        return [s.to_json() for s in self._items]

    @classmethod
    def from_json(cls, rows: Sequence[Sequence[float]], shape: Shape) -> FiniteSet:
        return cls(Sample(r, shape) for r in rows)


def diversity(s: FiniteSet | Iterable[Sample]) -> int:
    """Number of distinct elements."""
    if not isinstance(s, FiniteSet):
        s = FiniteSet(s)
    return len(s)


@dataclass(frozen=True)
class MappingLog:
    """Recorded ``(input, output)`` pairs of one processing run."""

    pairs: tuple[tuple[Sample, Sample], ...]
    input_set: FiniteSet = field(compare=False)
    output_set: FiniteSet = field(compare=False)

    @classmethod
    def record(cls, pairs: Iterable[tuple[Sample, Sample]], output_set: FiniteSet | None = None) -> MappingLog:
        pairs = tuple(pairs)
        inputs = FiniteSet(p[0] for p in pairs)
        if output_set is None:
            output_set = FiniteSet(p[1] for p in pairs)
        return cls(pairs, inputs, output_set)

    @classmethod
    def from_process(cls, inputs: Iterable[Sample], process) -> MappingLog:
        return cls.record((x, process(x)) for x in inputs)

    def preimages(self) -> dict[Sample, list[Sample]]:
        pre: dict[Sample, list[Sample]] = defaultdict(list)
        seen = set()
        for i, o in self.pairs:
            if (i, o) not in seen:
                seen.add((i, o))
                pre[o].append(i)
        return dict(pre)


def log_is_surjective_function(log: MappingLog) -> bool:
    """True iff every input has a single output and every output is hit."""
    image: dict[Sample, Sample] = {}
    for i, o in log.pairs:
        if image.setdefault(i, o) != o:
            return False
        if o not in log.output_set:
            return False
    hit = set(image.values())
    return all(o in hit for o in log.output_set)
