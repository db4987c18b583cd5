"""Associative layers: concatenate synchronized inputs, then reduce with one primitive."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from ..combiners import ConcatLayout, concat, split
from ..core import DEFAULT_GRID, FiniteSet, Sample, ShapeError
from ..primitive import ArchetypeId, Codebook, train_primitive


@dataclass(frozen=True, eq=False)
class AssociativeLayer:
    layout: ConcatLayout
    codebook: Codebook
    inputs: FiniteSet  # distinct observed concatenations, canonical order
    labels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.codebook.shape != self.layout.shape:
            raise ShapeError(f"codebook {self.codebook.shape} does not match layout {self.layout.shape}")
        object.__setattr__(self, "labels", self.codebook.encode_many(list(self.inputs)))

    def encode(self, parts: Sequence[Sample]) -> Sample:
        return al_encode(self, parts)

    def encode_id(self, parts: Sequence[Sample]) -> ArchetypeId:
        return self.codebook.encode(concat(parts, self.layout))[0]

    def project(self, a: int) -> list[Sample]:
        return split(self.codebook.project(a), self.layout)

    def complete(self, known: Mapping[int, Sample], refine: bool = True) -> list[Sample]:
        return al_complete(self, known, refine=refine)

    def output_set(self) -> FiniteSet:
        return self.codebook.output_set(self.inputs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "layout": self.layout.to_json(),
            "codebook": self.codebook.to_dict(),
            "inputs": self.inputs.to_json(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AssociativeLayer:
        layout = ConcatLayout.from_json(d["layout"])
        return cls(layout, Codebook.from_dict(d["codebook"]), FiniteSet.from_json(d["inputs"], layout.shape))


def observed_set(tuples: Iterable[Sequence[Sample]], layout: ConcatLayout) -> FiniteSet:
    """Distinct concatenations of the presented tuples (never their product)."""
    return FiniteSet(concat(t, layout) for t in tuples)


def train_associative_layer(tuples: Iterable[Sequence[Sample]], layout: ConcatLayout,
                            params: dict[str, Any], grid: float = DEFAULT_GRID) -> AssociativeLayer:
    inputs = FiniteSet(observed_set(tuples, layout).canonical())
    if not len(inputs):
        raise ValueError("no tuples presented")
    cb = train_primitive(inputs, layout.shape, params, grid)
    return AssociativeLayer(layout, cb, inputs)


def al_encode(al: AssociativeLayer, parts: Sequence[Sample]) -> Sample:
    return al.codebook.encode(concat(parts, al.layout))[1]


def _restricted(layout: ConcatLayout, known: Mapping[int, Sample]) -> tuple[np.ndarray, np.ndarray]:
    cols, vals = [], []
    for slot in sorted(known):
        if not 0 <= slot < layout.arity:
            raise IndexError(f"slot {slot} out of range for arity {layout.arity}")
        s = known[slot]
        if s.shape != layout.part_shapes[slot]:
            raise ShapeError(f"slot {slot}: expected {layout.part_shapes[slot]}, got {s.shape}")
        sl = layout.slot_slice(slot)
        cols.extend(range(sl.start, sl.stop))
        vals.append(s.values)
    return np.asarray(cols), np.concatenate(vals)


def al_complete(al: AssociativeLayer, known: Mapping[int, Sample], refine: bool = True) -> list[Sample]:
    """Fill in the unknown slots of a tuple from the known ones.

    The winning archetype is the nearest one measured on the known slots'
    coordinates only (lowest index on ties).  Without ``refine`` the answer
    is the split projection of the winner.  With ``refine`` (default) the
    answer is the training tuple mapped to the winner whose known slots match
    best, so inputs merged into one archetype can still be told apart.
    """
    if not known:
        raise ValueError("at least one slot must be known")
    if len(known) >= al.layout.arity:
        raise ValueError("every slot is already known; nothing to complete")
    cols, q = _restricted(al.layout, known)
    cb = al.codebook
    d2 = ((cb.archetypes[:, cols] - q) ** 2).sum(axis=1)
    winner = int(np.argmin(d2))
    if not refine:
        return split(cb.project(winner), al.layout)
    members = [x for x, a in zip(al.inputs, al.labels) if a == winner]
    if not members:
        return split(cb.project(winner), al.layout)
    M = np.stack([m.values for m in members])
    best = int(np.argmin(((M[:, cols] - q) ** 2).sum(axis=1)))
    return split(members[best], al.layout)
