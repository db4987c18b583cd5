"""Config-driven DAGs of primitives, columns, pyramids and associative layers.

A config names external ``sources`` (dataset modalities), a list of
``nodes`` with their parameters, ``edges`` wiring an upstream name into a
node's input slot, and the ``sink`` whose output is the architecture output.
"""
from __future__ import annotations

import graphlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from ..combiners import ConcatLayout
from ..core import DEFAULT_GRID, FiniteSet, Sample, Shape, ShapeError
from ..primitive import Codebook, train_primitive
from .associative import AssociativeLayer, al_complete, train_associative_layer
from .pyramid import (
    DiscriminatoryColumn,
    DiscriminatoryPyramid,
    ProjectionError,
    train_column,
    train_pyramid,
)

KINDS = ("primitive", "column", "pyramid", "associative_layer")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NodeSpec:
    name: str
    kind: str
    params: dict[str, Any]

    @property
    def layout(self) -> ConcatLayout | None:
        if self.kind != "associative_layer":
            return None
        return ConcatLayout.from_json(self.params["layout"])

    @property
    def arity(self) -> int:
        return self.layout.arity if self.kind == "associative_layer" else 1

    def input_shape(self, slot: int) -> Shape:
        if self.kind == "associative_layer":
            return self.layout.part_shapes[slot]
        return Shape(self.params["shape"])

    @property
    def output_shape(self) -> Shape:
        if self.kind == "associative_layer":
            return self.layout.shape
        return Shape(self.params["shape"])


@dataclass
class ArchitectureGraph:
    sources: list[str]
    nodes: dict[str, NodeSpec]
    inputs: dict[str, list[str]]  # node -> upstream name per slot
    sink: str
    grid: float = DEFAULT_GRID
    seed: int = 0
    name: str = "architecture"
    source_shapes: dict[str, Shape] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> ArchitectureGraph:
        try:
            return cls._parse(cfg)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed architecture config: {exc!r}") from exc

    @classmethod
    def _parse(cls, cfg) -> ArchitectureGraph:
        sources, source_shapes = [], {}
        for s in cfg["sources"]:
            if isinstance(s, str):
                sources.append(s)
            else:
                sources.append(s["name"])
                if "shape" in s:
                    source_shapes[s["name"]] = Shape(s["shape"])
        nodes: dict[str, NodeSpec] = {}
        for n in cfg["nodes"]:
            name, kind = n["name"], n["kind"]
            if kind not in KINDS:
                raise ConfigError(f"node {name!r}: unknown kind {kind!r}")
            if name in nodes or name in sources:
                raise ConfigError(f"duplicate name {name!r}")
            params = dict(n.get("params", {}))
            key = "layout" if kind == "associative_layer" else "shape"
            if key not in params:
                raise ConfigError(f"node {name!r}: params.{key} is required")
            nodes[name] = NodeSpec(name, kind, params)
        if not nodes:
            raise ConfigError("architecture has no nodes")

        wiring: dict[str, list[str | None]] = {n: [None] * spec.arity for n, spec in nodes.items()}
        for e in cfg["edges"]:
            src, dst, slot = e["from"], e["to"], int(e.get("slot", 0))
            if dst not in nodes:
                raise ConfigError(f"edge into unknown node {dst!r}")
            if src not in nodes and src not in sources:
                raise ConfigError(f"edge from unknown name {src!r} into {dst!r}")
            if not 0 <= slot < nodes[dst].arity:
                raise ConfigError(f"node {dst!r} has no input slot {slot}")
            if wiring[dst][slot] is not None:
                raise ConfigError(f"node {dst!r} slot {slot} is wired twice")
            wiring[dst][slot] = src
        for n, slots in wiring.items():
            for k, src in enumerate(slots):
                if src is None:
                    raise ConfigError(f"node {n!r} slot {k} is not wired")

        sink = cfg["sink"]
        if sink not in nodes:
            raise ConfigError(f"sink {sink!r} is not a node")

        g = cls(sources, nodes, wiring, sink, grid=float(cfg.get("grid", DEFAULT_GRID)),
                seed=int(cfg.get("seed", 0)), name=cfg.get("name", "architecture"),
                source_shapes=source_shapes)
        g.order = g._topological_order()
        g._check_shapes()
        return g

    def _topological_order(self) -> list[str]:
        ts = graphlib.TopologicalSorter()
        for n in self.nodes:
            ts.add(n, *[u for u in self.inputs[n] if u in self.nodes])
        try:
            return list(ts.static_order())
        except graphlib.CycleError as exc:
            raise ConfigError(f"architecture has a cycle: {exc.args[1]}") from exc

    def output_shape(self, name: str) -> Shape | None:
        if name in self.nodes:
            return self.nodes[name].output_shape
        return self.source_shapes.get(name)

    def _check_shapes(self) -> None:
        for n in self.order:
            spec = self.nodes[n]
            for slot, up in enumerate(self.inputs[n]):
                have = self.output_shape(up)
                want = spec.input_shape(slot)
                if have is not None and have.size != want.size:
                    raise ConfigError(f"edge {up!r} -> {n!r}[{slot}]: {have} does not fit {want}")

    def to_config(self) -> dict[str, Any]:
        edges = [{"from": up, "to": n, "slot": k}
                 for n in self.nodes for k, up in enumerate(self.inputs[n])]
        sources = [{"name": s, "shape": self.source_shapes[s].to_json()} if s in self.source_shapes else s
                   for s in self.sources]
        return {
            "name": self.name,
            "grid": self.grid,
            "seed": self.seed,
            "sources": sources,
            "nodes": [{"name": s.name, "kind": s.kind, "params": s.params} for s in self.nodes.values()],
            "edges": edges,
            "sink": self.sink,
        }

    def sources_under(self, name: str) -> list[str]:
        if name in self.sources:
            return [name]
        out: list[str] = []
        for up in self.inputs[name]:
            out.extend(s for s in self.sources_under(up) if s not in out)
        return out


def load_config(path: str | Path) -> ArchitectureGraph:
    with open(path) as f:
        return ArchitectureGraph.from_config(json.load(f))


# node-level helpers -------------------------------------------------------

Node = Codebook | DiscriminatoryColumn | DiscriminatoryPyramid | AssociativeLayer


def _top(node: Node) -> Codebook:
    if isinstance(node, Codebook):
        return node
    if isinstance(node, AssociativeLayer):
        return node.codebook
    return node.top


def node_encode(node: Node, inp) -> Sample:
    if isinstance(node, Codebook):
        return node.encode(inp)[1]
    return node.encode(inp)


def node_project(node: Node, value: Sample):
    """Input of ``node`` that maps to the archetype vector ``value``."""
    a = _top(node).index_of(value)
    if a is None:
        raise ProjectionError(f"{value!r} is not an output archetype")
    return node.project(a)


def node_to_dict(kind: str, node: Node) -> dict[str, Any]:
    return node.to_dict()


def node_from_dict(kind: str, d: dict[str, Any]) -> Node:
    return {
        "primitive": Codebook,
        "column": DiscriminatoryColumn,
        "pyramid": DiscriminatoryPyramid,
        "associative_layer": AssociativeLayer,
    }[kind].from_dict(d)


def _train_node(spec: NodeSpec, inputs: list, grid: float, seed: int) -> Node:
    p = {k: v for k, v in spec.params.items() if k not in ("shape", "layout", "levels")}
    if spec.kind == "associative_layer":
        return train_associative_layer(inputs, spec.layout, p, grid)
    shape = spec.output_shape
    inputs = [Sample(x.values, shape) for x in inputs]
    if spec.kind == "primitive":
        return train_primitive(FiniteSet(inputs), shape, p, grid)
    levels = int(spec.params.get("levels", 1))
    if spec.kind == "column":
        return train_column(inputs, levels, p, shape, grid)
    p.setdefault("seed", seed)
    return train_pyramid(inputs, levels - 1, p, shape, grid)


# trained graph -----------------------------------------------------------

@dataclass
class TrainedGraph:
    graph: ArchitectureGraph
    nodes: dict[str, Node]
    stats: dict[str, dict[str, int]]
    dataset: dict[str, Any] = field(default_factory=dict)

    def _inputs_for(self, name: str, values: Mapping[str, Sample]):
        spec = self.graph.nodes[name]
        ups = self.graph.inputs[name]
        if spec.kind == "associative_layer":
            return [Sample(values[u].values, s) for u, s in zip(ups, spec.layout.part_shapes)]
        return Sample(values[ups[0]].values, spec.output_shape)

    def encode_all(self, inputs: Mapping[str, Sample]) -> dict[str, Sample]:
        missing = [s for s in self.graph.sources if s not in inputs]
        if missing:
            raise KeyError(f"unbound sources: {missing}")
        values = dict(inputs)
        for n in self.graph.order:
            values[n] = node_encode(self.nodes[n], self._inputs_for(n, values))
        return values

    def encode(self, inputs: Mapping[str, Sample]) -> Sample:
        return self.encode_all(inputs)[self.graph.sink]

    def project_value(self, name: str, value: Sample) -> dict[str, Sample]:
        """Source values that ``name`` maps to ``value``."""
        if name in self.graph.sources:
            return {name: value}
        inp = node_project(self.nodes[name], value)
        parts = inp if isinstance(inp, list) else [inp]
        out: dict[str, Sample] = {}
        for up, part in zip(self.graph.inputs[name], parts):
            shape = self.graph.output_shape(up) or part.shape
            for src, v in self.project_value(up, Sample(part.values, shape)).items():
                if src in out and out[src] != v:
                    raise ProjectionError(f"source {src!r} projects inconsistently through {name!r}")
                out[src] = v
        return out

    def project(self, archetype: int) -> dict[str, Sample]:
        sink = self.nodes[self.graph.sink]
        return self.project_value(self.graph.sink, _top(sink).archetype(archetype))

    def complete(self, known: Mapping[str, Sample]) -> dict[str, Sample]:
        """Fill in unknown sources through the associative layers above them."""
        sources = self.graph.sources
        unknown = [s for s in sources if s not in known]
        if not unknown:
            raise ValueError("every source is known; nothing to complete")
        if len(unknown) == len(sources):
            raise ValueError("at least one source must be known")
        return self._complete(self.graph.sink, dict(known))

    def _complete(self, name: str, known: dict[str, Sample]) -> dict[str, Sample]:
        under = self.graph.sources_under(name)
        if all(s in known for s in under):
            return {s: known[s] for s in under}
        if name in self.graph.sources:
            raise ValueError(f"source {name!r} cannot be completed without an associative layer above it")
        spec = self.graph.nodes[name]
        ups = self.graph.inputs[name]
        if spec.kind != "associative_layer":
            return self._complete(ups[0], known)
        slot_known: dict[int, Sample] = {}
        result: dict[str, Sample] = {}
        for k, up in enumerate(ups):
            below = self.graph.sources_under(up)
            if any(s in known for s in below):
                filled = self._complete(up, known)
                result.update(filled)
                vals = self.encode_all_partial(up, filled)
                slot_known[k] = Sample(vals.values, spec.layout.part_shapes[k])
        if not slot_known:
            raise ValueError(f"no known slot under {name!r}")
        parts = al_complete(self.nodes[name], slot_known)
        for k, up in enumerate(ups):
            if k not in slot_known:
                shape = self.graph.output_shape(up) or parts[k].shape
                result.update(self.project_value(up, Sample(parts[k].values, shape)))
        return result

    def encode_all_partial(self, name: str, sources: Mapping[str, Sample]) -> Sample:
        """Output of ``name`` given values for the sources beneath it."""
        if name in self.graph.sources:
            return sources[name]
        values = dict(sources)
        for n in self.graph.order:
            if all(u in values for u in self.graph.inputs[n]) and n not in values:
                values[n] = node_encode(self.nodes[n], self._inputs_for(n, values))
            if n == name:
                break
        return values[name]

    def node_streams(self, rows: Mapping[str, Sequence[Sample]]) -> dict[str, list]:
        """Per-row inputs seen by every node when ``rows`` are pushed through."""
        return _propagate(self.graph, rows, self.nodes)[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": "drf-model/1",
            "config": self.graph.to_config(),
            "dataset": self.dataset,
            "stats": self.stats,
            "nodes": {n: node_to_dict(self.graph.nodes[n].kind, self.nodes[n]) for n in self.graph.order},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrainedGraph:
        g = ArchitectureGraph.from_config(d["config"])
        nodes = {n: node_from_dict(g.nodes[n].kind, nd) for n, nd in d["nodes"].items()}
        return cls(g, nodes, d.get("stats", {}), d.get("dataset", {}))

    @classmethod
    def load(cls, path: str | Path) -> TrainedGraph:
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _propagate(g: ArchitectureGraph, rows: Mapping[str, Sequence[Sample]],
               trained: dict[str, Node] | None = None):
    """Train (when ``trained`` is None) or replay nodes in topological order.

    Returns the per-node input streams, the per-node output streams and the
    trained nodes.
    """
    for s in g.sources:
        if s not in rows:
            raise ConfigError(f"source {s!r} is not bound to any data")
    lengths = {len(rows[s]) for s in g.sources}
    if len(lengths) != 1:
        raise ConfigError(f"source streams have different lengths: {sorted(lengths)}")
    for s, shape in g.source_shapes.items():
        if rows[s] and rows[s][0].shape.size != shape.size:
            raise ShapeError(f"source {s!r}: data has {rows[s][0].shape}, config declares {shape}")

    outputs: dict[str, list[Sample]] = {s: list(rows[s]) for s in g.sources}
    streams: dict[str, list] = {}
    nodes: dict[str, Node] = {} if trained is None else trained
    for idx, n in enumerate(g.order):
        spec = g.nodes[n]
        ups = g.inputs[n]
        for k, up in enumerate(ups):
            have = outputs[up][0].shape if outputs[up] else None
            if have is not None and have.size != spec.input_shape(k).size:
                raise ShapeError(f"edge {up!r} -> {n!r}[{k}]: {have} does not fit {spec.input_shape(k)}")
        if spec.kind == "associative_layer":
            shapes = spec.layout.part_shapes
            stream = [[Sample(outputs[u][r].values, s) for u, s in zip(ups, shapes)]
                      for r in range(len(outputs[ups[0]]))]
        else:
            stream = [Sample(x.values, spec.output_shape) for x in outputs[ups[0]]]
        streams[n] = stream
        if trained is None:
            nodes[n] = _train_node(spec, stream, g.grid, g.seed * 1009 + idx)
        outputs[n] = _encode_stream(nodes[n], stream)
    return streams, outputs, nodes


def _encode_stream(node: Node, stream: list) -> list[Sample]:
    cache: dict = {}
    out = []
    for inp in stream:
        key = tuple(p.key for p in inp) if isinstance(inp, list) else inp.key
        if key not in cache:
            cache[key] = node_encode(node, inp)
        out.append(cache[key])
    return out


def _distinct_inputs(stream: list) -> int:
    return len({tuple(p.key for p in x) if isinstance(x, list) else x.key for x in stream})


def graph_train(g: ArchitectureGraph, rows: Mapping[str, Sequence[Sample]],
                dataset_info: dict[str, Any] | None = None) -> TrainedGraph:
    """Train every node in topological order on its upstream output streams."""
    streams, outputs, nodes = _propagate(g, rows)
    stats = {n: {"input": _distinct_inputs(streams[n]), "output": len(FiniteSet(outputs[n]))}
             for n in g.order}
    return TrainedGraph(g, nodes, stats, dict(dataset_info or {}))


def graph_encode(t: TrainedGraph, inputs: Mapping[str, Sample]) -> dict[str, Sample]:
    return t.encode_all(inputs)


def graph_project(t: TrainedGraph, archetype: int) -> dict[str, Sample]:
    return t.project(archetype)
