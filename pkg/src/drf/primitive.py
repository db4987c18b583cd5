"""Diversity-reducing primitives with exact projections.

A trained primitive is a :class:`Codebook`: a list of archetype vectors, each
paired with one stored training input (its representative).  ``encode`` maps a
sample to its nearest archetype; ``project`` hands back the representative,
which always encodes to the archetype it came from.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, NewType

import numpy as np

from .core import DEFAULT_GRID, FiniteSet, Sample, Shape, ShapeError, quantize_array

ArchetypeId = NewType("ArchetypeId", int)


class NotTrainedError(RuntimeError):
    pass


class DegenerateInputWarning(UserWarning):
    """Training set has fewer than two distinct elements, so nothing can be reduced."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def nearest(centers: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index of the nearest center for every point; ties go to the lowest index."""
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


@dataclass(frozen=True, eq=False)
class Codebook:
    shape: Shape
    archetypes: np.ndarray
    representatives: np.ndarray
    grid: float = DEFAULT_GRID
    merge_radius: float | None = None
    kind: str = "exemplar"
    degenerate: bool = False
    _lookup: dict = field(init=False, repr=False)

    def __post_init__(self):
        arch = _readonly(self.archetypes).reshape(-1, self.shape.size)
        reps = _readonly(self.representatives).reshape(-1, self.shape.size)
        if len(arch) < 1:
            raise ValueError("a codebook needs at least one archetype")
        if arch.shape != reps.shape:
            raise ValueError("one representative per archetype is required")
        object.__setattr__(self, "archetypes", arch)
        object.__setattr__(self, "representatives", reps)
        lookup = {}
        for a in range(len(arch)):
            lookup.setdefault(self.archetype(a).key, a)
        object.__setattr__(self, "_lookup", lookup)

    def __len__(self) -> int:
        return len(self.archetypes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.kind == other.kind
            and self.grid == other.grid
            and np.array_equal(self.archetypes, other.archetypes)
            and np.array_equal(self.representatives, other.representatives)
        )

    __hash__ = None

    def _check(self, x: Sample) -> None:
        if x.shape != self.shape:
            raise ShapeError(f"expected {self.shape}, got {x.shape}")

    def archetype(self, a: int) -> Sample:
        if not 0 <= a < len(self):
            raise IndexError(f"archetype id {a} out of range (codebook has {len(self)})")
        return Sample(self.archetypes[a], self.shape)

    @property
    def archetype_set(self) -> FiniteSet:
        return FiniteSet(self.archetype(a) for a in range(len(self)))

    def index_of(self, o: Sample) -> ArchetypeId | None:
        """Id of the archetype whose vector equals ``o`` exactly, if any."""
        a = self._lookup.get(o.key)
        return None if a is None else ArchetypeId(a)

    def encode(self, x: Sample) -> tuple[ArchetypeId, Sample]:
        self._check(x)
        a = int(nearest(self.archetypes, x.values[None, :])[0])
        return ArchetypeId(a), self.archetype(a)

    def encode_many(self, xs: list[Sample]) -> np.ndarray:
        for x in xs:
            self._check(x)
        if not xs:
            return np.zeros(0, dtype=int)
        return nearest(self.archetypes, np.stack([x.values for x in xs]))

    def project(self, a: int) -> Sample:
        if not 0 <= a < len(self):
            raise IndexError(f"archetype id {a} out of range (codebook has {len(self)})")
        return Sample(self.representatives[a], self.shape)

    def output_set(self, inputs: Iterable[Sample]) -> FiniteSet:
        return output_set(self, inputs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "shape": self.shape.to_json(),
            "grid": self.grid,
            "merge_radius": self.merge_radius,
            "degenerate": self.degenerate,
            "archetypes": self.archetypes.tolist(),
            "representatives": self.representatives.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Codebook:
        return cls(
            shape=Shape(d["shape"]),
            archetypes=np.array(d["archetypes"], dtype=np.float64),
            representatives=np.array(d["representatives"], dtype=np.float64),
            grid=d["grid"],
            merge_radius=d.get("merge_radius"),
            kind=d.get("kind", "exemplar"),
            degenerate=d.get("degenerate", False),
        )


def _canonical(inputs: Iterable[Sample], shape: Shape) -> list[Sample]:
    items = inputs if isinstance(inputs, FiniteSet) else FiniteSet(inputs)
    for s in items:
        if s.shape != shape:
            raise ShapeError(f"input {s!r} has {s.shape}, expected {shape}")
    return items.canonical()


def train_trivial(inputs: Iterable[Sample], shape: Shape, grid: float = DEFAULT_GRID) -> Codebook:
    """Merge every input into a single archetype (their mean)."""
    ordered = _canonical(inputs, shape)
    if not ordered:
        raise ValueError("cannot train on an empty set")
    X = np.stack([s.values for s in ordered])
    center = quantize_array(X.mean(axis=0), grid)
    return Codebook(shape, center[None, :], X[:1], grid=grid, kind="trivial",
                    degenerate=len(ordered) < 2)


def train_exemplar_quantizer(
    inputs: Iterable[Sample],
    merge_radius: float,
    shape: Shape,
    grid: float = DEFAULT_GRID,
) -> Codebook:
    """Leader-style quantizer over the canonical ordering of ``inputs``.

    Each input joins the nearest archetype within ``merge_radius`` (running
    mean, re-quantized) or seeds a new one.  Archetypes left without members
    are dropped, representatives are re-picked among members, and if no
    reduction happened the two closest archetypes are merged until there are
    fewer archetypes than distinct inputs.
    """
    if not merge_radius > 0:
        raise ValueError(f"merge_radius must be positive, got {merge_radius}")
    ordered = _canonical(inputs, shape)
    if len(ordered) < 2:
        warnings.warn("fewer than 2 distinct inputs; returning a one-archetype codebook",
                      DegenerateInputWarning, stacklevel=2)
        cb = train_trivial(ordered, shape, grid)
        return Codebook(shape, cb.archetypes, cb.representatives, grid=grid,
                        merge_radius=merge_radius, kind="exemplar", degenerate=True)

    X = np.stack([s.values for s in ordered])
    n = len(X)
    r2 = merge_radius * merge_radius
    centers: list[np.ndarray] = []
    counts: list[int] = []
    seeds: list[int] = []
    for idx, x in enumerate(X):
        if centers:
            d2 = ((np.asarray(centers) - x) ** 2).sum(axis=1)
            j = int(np.argmin(d2))
            if d2[j] <= r2:
                counts[j] += 1
                centers[j] = quantize_array(centers[j] + (x - centers[j]) / counts[j], grid)
                continue
        centers.append(quantize_array(x, grid))
        counts.append(1)
        seeds.append(idx)

    C = np.asarray(centers)
    C, labels, seeds = _settle(C, X, seeds)
    while len(C) >= n:
        C, seeds = _merge_closest(C, X, labels, seeds, grid)
        C, labels, seeds = _settle(C, X, seeds)

    reps = np.empty_like(C)
    for a in range(len(C)):
        members = np.flatnonzero(labels == a)
        s = seeds[a]
        reps[a] = X[s] if labels[s] == a else X[members[0]]
    return Codebook(shape, C, reps, grid=grid, merge_radius=merge_radius, kind="exemplar")


def _settle(C: np.ndarray, X: np.ndarray, seeds: list[int]):
    """Drop archetypes no input reaches and renumber the assignment."""
    labels = nearest(C, X)
    used = np.unique(labels)
    remap = np.full(len(C), -1)
    remap[used] = np.arange(len(used))
    return C[used], remap[labels], [seeds[u] for u in used]


def _merge_closest(C, X, labels, seeds, grid):
    k = len(C)
    d2 = ((C[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    d2[np.tril_indices(k)] = np.inf
    i, j = np.unravel_index(int(np.argmin(d2)), d2.shape)
    ni, nj = int((labels == i).sum()), int((labels == j).sum())
    merged = quantize_array((ni * C[i] + nj * C[j]) / (ni + nj), grid)
    C = C.copy()
    C[i] = merged
    C = np.delete(C, j, axis=0)
    seeds = [s for t, s in enumerate(seeds) if t != j]
    return C, seeds


def encode(cb: Codebook, x: Sample) -> tuple[ArchetypeId, Sample]:
    return cb.encode(x)


def project(cb: Codebook, a: int) -> Sample:
    return cb.project(a)


def output_set(cb: Codebook, inputs: Iterable[Sample]) -> FiniteSet:
    """Distinct archetype vectors reached by ``inputs``."""
    xs = list(inputs)
    return FiniteSet(cb.archetype(int(a)) for a in cb.encode_many(xs))


def train_primitive(inputs: Iterable[Sample], shape: Shape, params: dict[str, Any],
                    grid: float = DEFAULT_GRID) -> Codebook:
    """Dispatch on ``params["primitive"]`` (``"exemplar"`` or ``"trivial"``)."""
    kind = params.get("primitive", "exemplar")
    if kind == "trivial":
        return train_trivial(inputs, shape, grid)
    if kind == "exemplar":
        return train_exemplar_quantizer(inputs, float(params["merge_radius"]), shape, grid)
    raise ValueError(f"unknown primitive kind {kind!r}")


class Primitive:
    """A primitive instance: parameters plus, once trained, its codebook."""

    def __init__(self, shape: Shape, params: dict[str, Any], grid: float = DEFAULT_GRID):
        self.shape = shape
        self.params = dict(params)
        self.grid = grid
        self.codebook: Codebook | None = None

    @property
    def trained(self) -> bool:
        return self.codebook is not None

    def train(self, inputs: Iterable[Sample]) -> Codebook:
        if self.trained:
            raise RuntimeError("primitive is frozen after training")
        self.codebook = train_primitive(inputs, self.shape, self.params, self.grid)
        return self.codebook

    def _cb(self) -> Codebook:
        if self.codebook is None:
            raise NotTrainedError("primitive has not been trained")
        return self.codebook

    def encode(self, x: Sample) -> tuple[ArchetypeId, Sample]:
        return self._cb().encode(x)

    def project(self, a: int) -> Sample:
        return self._cb().project(a)
