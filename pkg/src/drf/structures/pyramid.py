"""Discriminatory columns and pyramids.

Level numbering follows the usual top-down convention: level 0 is the single
primitive at the top, the bottom level receives raw inputs.  A column stores
one codebook per level; a pyramid of depth ``n`` stores ``2**l`` codebooks at
level ``l`` for ``l = 0..n`` and averages adjacent pairs between levels.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np

from ..combiners import average
from ..core import DEFAULT_GRID, FiniteSet, Sample, Shape, ShapeError
from ..primitive import ArchetypeId, Codebook, train_primitive


class ProjectionError(RuntimeError):
    pass


def _input_set(inputs: Iterable[Sample], shape: Shape) -> list[Sample]:
    items = FiniteSet(inputs)
    if len(items) < 2:
        raise ValueError(f"need at least 2 distinct inputs, got {len(items)}")
    for s in items:
        if s.shape != shape:
            raise ShapeError(f"input {s!r} has {s.shape}, expected {shape}")
    return items.canonical()


def _descend(codebooks: Iterable[Codebook], top_id: int) -> Sample:
    """Project through a chain of codebooks, top first."""
    codebooks = list(codebooks)
    s = codebooks[0].project(top_id)
    for depth, cb in enumerate(codebooks[1:], start=1):
        a = cb.index_of(s)
        if a is None:
            raise ProjectionError(f"level {depth}: {s!r} is not an archetype of the level below")
        s = cb.project(a)
    return s


@dataclass(frozen=True, eq=False)
class DiscriminatoryColumn:
    shape: Shape
    codebooks: tuple[Codebook, ...]  # codebooks[0] is the top level

    @property
    def levels(self) -> int:
        return len(self.codebooks)

    @property
    def top(self) -> Codebook:
        return self.codebooks[0]

    def bottom_up(self) -> list[Codebook]:
        return list(reversed(self.codebooks))

    def trace(self, x: Sample) -> list[Sample]:
        """Output of every level for ``x``, bottom level first."""
        if x.shape != self.shape:
            raise ShapeError(f"expected {self.shape}, got {x.shape}")
        out = []
        for cb in self.bottom_up():
            x = cb.encode(x)[1]
            out.append(x)
        return out

    def encode(self, x: Sample) -> Sample:
        return self.trace(x)[-1]

    def encode_id(self, x: Sample) -> ArchetypeId:
        return self.top.index_of(self.encode(x))

    def project(self, top_id: int) -> Sample:
        return column_project(self, top_id)

    def level_output_sets(self, inputs: Iterable[Sample]) -> list[FiniteSet]:
        """Output set of each level over ``inputs``, bottom level first."""
        current = list(FiniteSet(inputs))
        sets = []
        for cb in self.bottom_up():
            current = list(cb.output_set(current))
            sets.append(FiniteSet(current))
        return sets

    def output_set(self, inputs: Iterable[Sample]) -> FiniteSet:
        return self.level_output_sets(inputs)[-1]

    def to_dict(self) -> dict[str, Any]:
        return {"shape": self.shape.to_json(), "codebooks": [cb.to_dict() for cb in self.codebooks]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DiscriminatoryColumn:
        return cls(Shape(d["shape"]), tuple(Codebook.from_dict(c) for c in d["codebooks"]))


def train_column(inputs: Iterable[Sample], levels: int, params: dict[str, Any],
                 shape: Shape | None = None, grid: float = DEFAULT_GRID) -> DiscriminatoryColumn:
    """Train ``levels`` stacked primitives, each on the output set of the one below."""
    if levels < 1:
        raise ValueError("a column needs at least one level")
    inputs = list(inputs)
    shape = shape or inputs[0].shape
    current = _input_set(inputs, shape)
    trained = []
    for _ in range(levels):
        cb = train_primitive(current, shape, params, grid)
        trained.append(cb)
        current = cb.output_set(current).canonical()
    return DiscriminatoryColumn(shape, tuple(reversed(trained)))


def column_encode(c: DiscriminatoryColumn, x: Sample) -> Sample:
    return c.encode(x)


def column_project(c: DiscriminatoryColumn, top_archetype: int) -> Sample:
    """Compose projections from the top level down to a training input."""
    return _descend(c.codebooks, top_archetype)


@dataclass(frozen=True, eq=False)
class DiscriminatoryPyramid:
    shape: Shape
    grid: float
    codebooks: tuple[tuple[Codebook, ...], ...]  # codebooks[l] holds 2**l codebooks
    witnesses: np.ndarray  # one training input per top archetype

    def __post_init__(self):
        for l, row in enumerate(self.codebooks):
            if len(row) != 2 ** l:
                raise ValueError(f"level {l} must hold {2 ** l} primitives, has {len(row)}")
        w = np.array(self.witnesses, dtype=np.float64).reshape(len(self.codebooks[0][0]), -1)
        w.setflags(write=False)
        object.__setattr__(self, "witnesses", w)

    @property
    def depth(self) -> int:
        return len(self.codebooks) - 1

    @property
    def levels(self) -> int:
        return len(self.codebooks)

    @property
    def top(self) -> Codebook:
        return self.codebooks[0][0]

    @property
    def is_uniform(self) -> bool:
        """True when every level's primitives are identical."""
        return all(cb == row[0] for row in self.codebooks for cb in row)

    def level_streams(self, x: Sample) -> list[list[Sample]]:
        """Inputs fed to each primitive, bottom level first; the last entry is the top output."""
        if x.shape != self.shape:
            raise ShapeError(f"expected {self.shape}, got {x.shape}")
        feeds = [x] * len(self.codebooks[-1])
        streams = []
        for row in reversed(self.codebooks):
            streams.append(feeds)
            outs = [cb.encode(f)[1] for cb, f in zip(row, feeds)]
            feeds = [average(outs[k], outs[k + 1], self.grid) for k in range(0, len(outs) - 1, 2)]
        streams.append(outs)
        return streams

    def encode(self, x: Sample) -> Sample:
        return self.level_streams(x)[-1][0]

    def encode_id(self, x: Sample) -> ArchetypeId:
        return self.top.index_of(self.encode(x))

    def project(self, top_id: int) -> Sample:
        return pyramid_project(self, top_id)

    def output_set(self, inputs: Iterable[Sample]) -> FiniteSet:
        return FiniteSet(self.encode(x) for x in FiniteSet(inputs))

    def level_sets(self, inputs: Iterable[Sample]) -> list[FiniteSet]:
        """Distinct values entering each level above the bottom, then the output set.

        For a pyramid the set entering level ``l`` is the union over its
        primitives of their averaged input streams.
        """
        per_input = [self.level_streams(x) for x in FiniteSet(inputs)]
        sets = []
        for l in range(1, self.levels + 1):
            sets.append(FiniteSet(s for st in per_input for s in st[l]))
        return sets

    def to_dict(self) -> dict[str, Any]:
        return {
            "shape": self.shape.to_json(),
            "grid": self.grid,
            "codebooks": [[cb.to_dict() for cb in row] for row in self.codebooks],
            "witnesses": self.witnesses.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DiscriminatoryPyramid:
        return cls(
            Shape(d["shape"]),
            d["grid"],
            tuple(tuple(Codebook.from_dict(c) for c in row) for row in d["codebooks"]),
            np.array(d["witnesses"], dtype=np.float64),
        )


def instance_params(params: dict[str, Any], count: int) -> list[dict[str, Any]]:
    """Per-instance parameters; ``jitter`` scales each merge radius by ``1 + U(-jitter, jitter)``."""
    jitter = float(params.get("jitter", 0.0))
    if jitter == 0.0 or "merge_radius" not in params:
        return [dict(params) for _ in range(count)]
    rng = np.random.default_rng(int(params.get("seed", 0)))
    out = []
    for f in rng.uniform(-jitter, jitter, size=count):
        p = dict(params)
        p["merge_radius"] = float(params["merge_radius"]) * (1.0 + float(f))
        out.append(p)
    return out


def train_pyramid(inputs: Iterable[Sample], depth: int, params: dict[str, Any],
                  shape: Shape | None = None, grid: float = DEFAULT_GRID) -> DiscriminatoryPyramid:
    """Train a pyramid whose bottom level (index ``depth``) has ``2**depth`` primitives.

    Every bottom primitive sees the raw input set.  Adjacent pairs are
    averaged per input to form the streams of the level above, and each
    primitive trains on the distinct values of its stream.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    inputs = list(inputs)
    shape = shape or inputs[0].shape
    ordered = _input_set(inputs, shape)
    per_instance = iter(instance_params(params, 2 ** (depth + 1) - 1))

    streams = [ordered] * (2 ** depth)
    rows: list[tuple[Codebook, ...]] = []
    for l in range(depth, -1, -1):
        row, outs = [], []
        for stream in streams:
            cb = train_primitive(FiniteSet(stream).canonical(), shape, next(per_instance), grid)
            row.append(cb)
            outs.append([cb.archetype(int(a)) for a in cb.encode_many(stream)])
        rows.append(tuple(row))
        if l > 0:
            streams = [[average(a, b, grid) for a, b in zip(outs[k], outs[k + 1])]
                       for k in range(0, len(outs), 2)]

    top = rows[-1][0]
    top_stream = streams[0]
    witnesses = np.empty_like(top.representatives)
    for a in range(len(top)):
        rep = top.project(a)
        witnesses[a] = next(x for x, s in zip(ordered, top_stream) if s == rep).values
    return DiscriminatoryPyramid(shape, grid, tuple(reversed(rows)), witnesses)


def pyramid_encode(p: DiscriminatoryPyramid, x: Sample) -> Sample:
    return p.encode(x)


def pyramid_project(p: DiscriminatoryPyramid, top_id: int) -> Sample:
    """Training input that the pyramid maps to ``top_id``.

    Uniform pyramids project like the equivalent column.  Otherwise the
    stored witness of the top representative is returned.
    """
    if p.is_uniform:
        return _descend([row[0] for row in p.codebooks], top_id)
    if not 0 <= top_id < len(p.top):
        raise IndexError(f"archetype id {top_id} out of range")
    return Sample(p.witnesses[top_id], p.shape)


def as_column(p: DiscriminatoryPyramid) -> DiscriminatoryColumn:
    """Column made of the first primitive of each level (exact only for uniform pyramids)."""
    return DiscriminatoryColumn(p.shape, tuple(row[0] for row in p.codebooks))
