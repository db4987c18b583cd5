"""Composition functions between levels: pairwise averaging and concatenation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DEFAULT_GRID, Sample, Shape, ShapeError, quantize_array
from .primitive import Codebook


class RecoveryError(ValueError):
    """The averaged value could not have come from the given sibling output."""


def average(a: Sample, b: Sample, grid: float = DEFAULT_GRID) -> Sample:
    if a.shape != b.shape:
        raise ShapeError(f"cannot average {a.shape} with {b.shape}")
    return Sample(quantize_array((a.values + b.values) / 2.0, grid), a.shape)


def average_recover(o: Sample, o2: Sample, first: Codebook | Callable[[Sample], Sample]) -> Sample:
    """Undo ``o = average(o1, o2)`` and project ``o1`` through the first primitive.

    ``first`` is the first primitive's codebook, its bound ``project``
    method, or a callable taking the archetype vector ``2*o - o2`` to an
    input of that primitive.
    """
    if o.shape != o2.shape:
        raise ShapeError(f"cannot recover from {o.shape} and {o2.shape}")
    o1 = Sample(2.0 * o.values - o2.values, o.shape)
    if isinstance(getattr(first, "__self__", None), Codebook):
        first = first.__self__  # Codebook.project takes ids, so look the vector up first
    if callable(first) and not isinstance(first, Codebook):
        return first(o1)
    a = first.index_of(o1)
    if a is None:
        raise RecoveryError(f"2*o - o2 = {o1!r} is not an archetype of the first primitive")
    return first.project(a)


@dataclass(frozen=True)
class ConcatLayout:
    part_shapes: tuple[Shape, ...]

    def __init__(self, part_shapes: Sequence[Shape | Sequence[int] | int]):
        shapes = tuple(s if isinstance(s, Shape) else Shape(s) for s in part_shapes)
        if not shapes:
            raise ShapeError("a layout needs at least one part")
        object.__setattr__(self, "part_shapes", shapes)

    @property
    def arity(self) -> int:
        return len(self.part_shapes)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.cumsum([0] + [s.size for s in self.part_shapes])[:-1])

    @property
    def total(self) -> int:
        return sum(s.size for s in self.part_shapes)

    @property
    def shape(self) -> Shape:
        if self.arity == 1:
            return self.part_shapes[0]
        return Shape(self.total)

    def slot_slice(self, slot: int) -> slice:
        start = self.offsets[slot]
        return slice(start, start + self.part_shapes[slot].size)

    def to_json(self) -> list[list[int]]:
        return [s.to_json() for s in self.part_shapes]

    @classmethod
    def from_json(cls, data) -> ConcatLayout:
        return cls([Shape(s) for s in data])


def concat(parts: Sequence[Sample], layout: ConcatLayout) -> Sample:
    if len(parts) != layout.arity:
        raise ShapeError(f"layout expects {layout.arity} parts, got {len(parts)}")
    for slot, (p, s) in enumerate(zip(parts, layout.part_shapes)):
        if p.shape != s:
            raise ShapeError(f"slot {slot}: expected {s}, got {p.shape}")
    return Sample(np.concatenate([p.values for p in parts]), layout.shape)


def split(x: Sample, layout: ConcatLayout) -> list[Sample]:
    if len(x) != layout.total:
        raise ShapeError(f"layout covers {layout.total} values, sample has {len(x)}")
    return [Sample(x.values[layout.slot_slice(k)], s) for k, s in enumerate(layout.part_shapes)]
