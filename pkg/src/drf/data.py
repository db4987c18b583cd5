"""Synthetic row-aligned multimodal datasets and their CSV + JSON sidecar format.

Every row holds one sample per modality and, optionally, a class label.  The
samples in one row are what an associative layer sees together.

On disk a dataset is ``dataset.csv``::

    digit.0,digit.1,hand.0,label
    0.1,0.7,0.3,0
    ...

plus ``dataset.json`` declaring each modality's shape, the label encoding
and the class of every row per modality.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core import DEFAULT_GRID, FiniteSet, Sample, Shape, quantize_array

CSV_NAME = "dataset.csv"
SIDECAR_NAME = "dataset.json"
LABEL = "label"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class ModalitySpec:
    name: str
    shape: Shape
    classes: int
    samples_per_class: int
    noise_std: float
    seed: int


@dataclass(frozen=True)
class DatasetSpec:
    modalities: tuple[ModalitySpec, ...]
    correlation: str = "correlated"
    label_slot: str | None = None  # "onehot", "scalar" or None
    seed: int = 0
    grid: float = DEFAULT_GRID

    def __post_init__(self):
        if not self.modalities:
            raise DatasetError("at least one modality is required")
        if self.correlation not in ("correlated", "independent"):
            raise DatasetError(f"correlation must be 'correlated' or 'independent', got {self.correlation!r}")
        if self.label_slot not in (None, "onehot", "scalar"):
            raise DatasetError(f"label_slot must be 'onehot', 'scalar' or null, got {self.label_slot!r}")
        names = [m.name for m in self.modalities]
        if len(set(names)) != len(names) or LABEL in names:
            raise DatasetError(f"modality names must be unique and not {LABEL!r}: {names}")
        for m in self.modalities:
            if m.classes < 2:
                raise DatasetError(f"{m.name}: need at least 2 classes")
            if m.samples_per_class < 1:
                raise DatasetError(f"{m.name}: samples_per_class must be >= 1")
            if m.noise_std < 0:
                raise DatasetError(f"{m.name}: noise_std must be >= 0")
        rows = {m.classes * m.samples_per_class for m in self.modalities}
        if len(rows) != 1:
            raise DatasetError("every modality must yield the same number of rows")
        if self.label_slot and len({m.classes for m in self.modalities}) != 1:
            raise DatasetError("a label stream needs the same class count in every modality")

    @property
    def rows(self) -> int:
        m = self.modalities[0]
        return m.classes * m.samples_per_class

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DatasetSpec:
        try:
            mods = tuple(
                ModalitySpec(m["name"], Shape(m["shape"]), int(m["classes"]),
                             int(m["samples_per_class"]), float(m.get("noise_std", 0.0)), int(m["seed"]))
                for m in d["modalities"]
            )
            return cls(mods, d.get("correlation", "correlated"), d.get("label_slot"),
                       int(d.get("seed", mods[0].seed if mods else 0)), float(d.get("grid", DEFAULT_GRID)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DatasetError):
                raise
            raise DatasetError(f"invalid dataset spec: {exc!r}") from exc


@dataclass
class Dataset:
    shapes: dict[str, Shape]
    columns: dict[str, list[Sample]]
    classes: dict[str, list[int]]
    labels: list[int] | None = None
    label_encoding: str | None = None
    n_classes: int | None = None
    fingerprint: str = field(default="", compare=False)

    @property
    def modalities(self) -> list[str]:
        return list(self.shapes)

    def __len__(self) -> int:
        return len(next(iter(self.columns.values())))

    def label_sample(self, c: int) -> Sample:
        if self.label_encoding == "onehot":
            v = np.zeros(self.n_classes)
            v[c] = 1.0
            return Sample(v)
        return Sample([float(c + 1)])

    def streams(self) -> dict[str, list[Sample]]:
        """Per-row samples of every modality plus the label stream if present."""
        out = {k: list(v) for k, v in self.columns.items()}
        if self.labels is not None:
            out[LABEL] = [self.label_sample(c) for c in self.labels]
        return out

    def sets(self) -> dict[str, FiniteSet]:
        return {k: FiniteSet(v) for k, v in self.streams().items()}

    def row(self, r: int) -> dict[str, Sample]:
        return {k: v[r] for k, v in self.streams().items()}

    def info(self) -> dict[str, Any]:
        return {"sha256": self.fingerprint, "rows": len(self)}


def _prototypes(rng: np.random.Generator, k: int, d: int, min_dist: float) -> np.ndarray:
    for _ in range(10_000):
        P = rng.uniform(0.0, 1.0, size=(k, d))
        gaps = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
        gaps[np.diag_indices(k)] = np.inf
        if gaps.min() >= min_dist and gaps.min() > 0:
            return P
    raise DatasetError(f"cannot place {k} prototypes in [0,1]^{d} at distance >= {min_dist}")


def _modality(m: ModalitySpec, grid: float) -> list[list[np.ndarray]]:
    rng = np.random.default_rng(m.seed)
    d = m.shape.size
    protos = _prototypes(rng, m.classes, d, 4.0 * m.noise_std)
    seen: set[bytes] = set()
    out = []
    for c in range(m.classes):
        rows = []
        for _ in range(m.samples_per_class):
            while True:
                v = quantize_array(protos[c] + rng.normal(0.0, m.noise_std, size=d), grid)
                if m.noise_std == 0 or v.tobytes() not in seen:
                    break
            seen.add(v.tobytes())
            rows.append(v)
        out.append(rows)
    return out


def generate(spec: DatasetSpec) -> Dataset:
    """Class prototypes plus Gaussian noise, aligned by class per row.

    In independent mode every modality after the first is shuffled with its
    own permutation, so co-occurrence carries no class information.  Labels
    follow the first modality.
    """
    n = spec.rows
    rng = np.random.default_rng(spec.seed)
    columns, classes = {}, {}
    for i, m in enumerate(spec.modalities):
        per_class = _modality(m, spec.grid)
        vals = [v for rows in per_class for v in rows]
        cls = [c for c in range(m.classes) for _ in range(m.samples_per_class)]
        if spec.correlation == "independent" and i > 0:
            perm = rng.permutation(n)
            vals = [vals[p] for p in perm]
            cls = [cls[p] for p in perm]
        columns[m.name] = [Sample(v, m.shape) for v in vals]
        classes[m.name] = cls
    first = spec.modalities[0]
    labels = list(classes[first.name]) if spec.label_slot else None
    ds = Dataset({m.name: m.shape for m in spec.modalities}, columns, classes, labels,
                 spec.label_slot, first.classes if spec.label_slot else None)
    ds.fingerprint = hashlib.sha256(_csv_text(ds).encode()).hexdigest()
    return ds


def _header(ds: Dataset) -> list[str]:
    cols = [f"{name}.{i}" for name, shape in ds.shapes.items() for i in range(shape.size)]
    if ds.labels is not None:
        cols.append(LABEL)
    return cols


def _csv_text(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_header(ds))
    for r in range(len(ds)):
        row = [repr(float(v)) for name in ds.shapes for v in ds.columns[name][r].values]
        if ds.labels is not None:
            row.append(str(ds.labels[r]))
        w.writerow(row)
    return buf.getvalue()


def _sidecar(ds: Dataset) -> dict[str, Any]:
    return {
        "modalities": [{"name": k, "shape": s.to_json()} for k, s in ds.shapes.items()],
        "label": None if ds.labels is None else {"encoding": ds.label_encoding, "classes": ds.n_classes},
        "classes": ds.classes,
    }


def write(ds: Dataset, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text = _csv_text(ds)
    (out / CSV_NAME).write_text(text)
    (out / SIDECAR_NAME).write_text(json.dumps(_sidecar(ds), indent=1) + "\n")
    return out


def load_rows(path: str | Path) -> Dataset:
    """Read ``dataset.csv`` and its sidecar from a directory (or the CSV path)."""
    path = Path(path)
    csv_path = path / CSV_NAME if path.is_dir() else path
    side_path = csv_path.with_suffix(".json")
    if not csv_path.exists():
        raise DatasetError(f"{csv_path}: no such file")
    if not side_path.exists():
        raise DatasetError(f"{side_path}: sidecar with shapes is missing")
    try:
        side = json.loads(side_path.read_text())
        shapes = {m["name"]: Shape(m["shape"]) for m in side["modalities"]}
        label = side.get("label")
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{side_path}: invalid sidecar: {exc!r}") from exc

    text = csv_path.read_text()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = [f"{name}.{i}" for name, s in shapes.items() for i in range(s.size)]
    if label:
        expected.append(LABEL)
    if header != expected:
        raise DatasetError(f"{csv_path}: header {header} does not match sidecar columns {expected}")

    columns: dict[str, list[Sample]] = {k: [] for k in shapes}
    labels: list[int] | None = [] if label else None
    for r, row in enumerate(reader, start=1):
        if len(row) != len(expected):
            raise DatasetError(f"{csv_path}: row {r} has {len(row)} cells, expected {len(expected)}")
        pos = 0
        for name, s in shapes.items():
            vals = []
            for i in range(s.size):
                cell = row[pos]
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(f"{csv_path}: row {r}, column {expected[pos]}: not a number: {cell!r}")
                if not math.isfinite(v):
                    raise DatasetError(f"{csv_path}: row {r}, column {expected[pos]}: non-finite value {cell!r}")
                vals.append(v)
                pos += 1
            columns[name].append(Sample(vals, s))
        if labels is not None:
            try:
                c = int(row[pos])
            except ValueError:
                raise DatasetError(f"{csv_path}: row {r}, column {LABEL}: not an integer: {row[pos]!r}")
            if not 0 <= c < int(label["classes"]):
                raise DatasetError(f"{csv_path}: row {r}, column {LABEL}: class {c} out of range")
            labels.append(c)

    n = len(next(iter(columns.values())))
    classes = {k: list(v) for k, v in side.get("classes", {}).items()}
    for k, v in classes.items():
        if len(v) != n:
            raise DatasetError(f"{side_path}: classes for {k!r} cover {len(v)} rows, csv has {n}")
    ds = Dataset(shapes, columns, classes, labels,
                 label["encoding"] if label else None, int(label["classes"]) if label else None)
    ds.fingerprint = hashlib.sha256(text.encode()).hexdigest()
    return ds


def load_spec(path: str | Path) -> DatasetSpec:
    with open(path) as f:
        return DatasetSpec.from_dict(json.load(f))
