"""Executable property checks for trained primitives and structures.

Every check returns a :class:`CheckResult`; a failing result always carries
a JSON-serializable counterexample.  :func:`run_all` applies every relevant
check to each node of a trained architecture and returns a
:class:`VerificationReport` whose entries follow ``THEOREM_IDS`` order.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .combiners import ConcatLayout, RecoveryError, average, average_recover, concat, split
from .core import DEFAULT_GRID, FiniteSet, MappingLog, Sample, log_is_surjective_function
from .primitive import Codebook
from .structures.associative import AssociativeLayer, observed_set
from .structures.graph import TrainedGraph, _top
from .structures.pyramid import (
    DiscriminatoryColumn,
    DiscriminatoryPyramid,
    train_column,
    train_pyramid,
)

THEOREM_IDS = (
    "surjective_map",
    "diversity_reduction",
    "latent_set",
    "latent_transitivity",
    "average_latent",
    "pyramid_latent",
    "cardinality_chain",
    "pyramid_column_equivalence",
    "correlated_tuples",
    "independent_product",
    "concat_bijective",
    "associative_latent",
    "architecture_latent",
)

PASS, FAIL, UNMET, DEFERRED = "pass", "fail", "precondition_unmet", "deferred"


@dataclass
class CheckResult:
    theorem_id: str
    status: str
    cases_run: int
    counterexample: Any = None
    subject: str = ""
    note: str = ""
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.status == FAIL and self.counterexample is None:
            raise ValueError(f"{self.theorem_id}: a failed check needs a counterexample")

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class VerificationReport:
    checks: list[CheckResult]
    seed: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {"seed": self.seed, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            mark = {PASS: "ok", FAIL: "FAIL", UNMET: "n/a", DEFERRED: "deferred"}[c.status]
            subject = f" [{c.subject}]" if c.subject else ""
            note = f"  ({c.note})" if c.note else ""
            lines.append(f"{mark:>8}  {c.theorem_id}{subject}  cases={c.cases_run}{note}")
        return "\n".join(lines)


class Stage(NamedTuple):
    """A trained map with its projection, both on sample values."""

    encode: Callable[[Sample], Sample]
    project: Callable[[Sample], Sample]


def codebook_stage(cb: Codebook) -> Stage:
    def proj(o: Sample) -> Sample:
        a = cb.index_of(o)
        if a is None:
            raise LookupError(f"{o!r} is not an archetype")
        return cb.project(a)

    return Stage(lambda x: cb.encode(x)[1], proj)


def _w(s: Sample | None):
    return None if s is None else s.to_json()


# primitive-level checks -------------------------------------------------------

def check_surjective_equivalence(log: MappingLog, subject: str = "") -> CheckResult:
    """The recorded run is a surjective function; with fewer outputs, some output is shared."""
    n = len(log.pairs)
    if not log_is_surjective_function(log):
        image: dict[Sample, Sample] = {}
        for i, o in log.pairs:
            if image.setdefault(i, o) != o:
                return CheckResult("surjective_map", FAIL, n, {"input": _w(i), "outputs": [_w(image[i]), _w(o)]},
                                   subject, "input mapped to two outputs")
        hit = set(image.values())
        missed = next((o for o in log.output_set if o not in hit), None)
        stray = next((o for o in image.values() if o not in log.output_set), None)
        return CheckResult("surjective_map", FAIL, n, {"unreached_output": _w(missed), "stray_output": _w(stray)},
                           subject, "outputs not covered exactly")
    if len(log.output_set) < len(log.input_set):
        shared = [o for o, pre in log.preimages().items() if len(pre) >= 2]
        if not shared:
            return CheckResult("surjective_map", FAIL, n, {"sizes": [len(log.input_set), len(log.output_set)]},
                               subject, "pigeonhole violated")
    return CheckResult("surjective_map", PASS, max(n, 1), subject=subject,
                       details={"inputs": len(log.input_set), "outputs": len(log.output_set)})


def check_diversity_reduction(log: MappingLog, subject: str = "") -> CheckResult:
    """Strictly fewer outputs than inputs, witnessed by two inputs sharing an output."""
    n_in, n_out = len(log.input_set), len(log.output_set)
    if n_in < 2:
        return CheckResult("diversity_reduction", UNMET, max(n_in, 1), subject=subject,
                           note="fewer than 2 distinct inputs")
    if n_out >= n_in:
        return CheckResult("diversity_reduction", FAIL, n_in, {"inputs": n_in, "outputs": n_out}, subject,
                           "no reduction")
    for o, pre in log.preimages().items():
        if len(pre) >= 2:
            return CheckResult("diversity_reduction", PASS, n_in, subject=subject,
                               details={"inputs": n_in, "outputs": n_out,
                                        "witness": {"output": _w(o), "inputs": [_w(pre[0]), _w(pre[1])]}})
    return CheckResult("diversity_reduction", FAIL, n_in, {"inputs": n_in, "outputs": n_out}, subject,
                       "no shared output despite reduction")


def check_latent_set(inputs: Iterable[Sample], encode: Callable[[Sample], Sample],
                     project: Callable[[Sample], Sample], contains: Callable[[Sample], bool] | None = None,
                     theorem_id: str = "latent_set", subject: str = "") -> CheckResult:
    """Outputs are fewer than inputs and each projects to an input that encodes back to it.

    ``contains`` overrides membership in the input set (used when the
    projection lands in a product of per-source sets).
    """
    I = FiniteSet(inputs)
    member = contains or (lambda s: s in I)
    O = FiniteSet(encode(i) for i in I)
    if len(I) < 2:
        return CheckResult(theorem_id, UNMET, 1, subject=subject, note="fewer than 2 distinct inputs")
    if len(O) >= len(I):
        return CheckResult(theorem_id, FAIL, len(I), {"inputs": len(I), "outputs": len(O)}, subject,
                           "output set is not smaller")
    seen: dict = {}
    for o in O:
        try:
            p = project(o)
        except Exception as exc:  # a missing projection is itself the counterexample
            return CheckResult(theorem_id, FAIL, len(O), {"archetype": _w(o), "error": repr(exc)}, subject,
                               "projection failed")
        if not member(p):
            return CheckResult(theorem_id, FAIL, len(O), {"archetype": _w(o), "projection": _w(p)}, subject,
                               "projection is not an input")
        back = encode(p)
        if back != o:
            return CheckResult(theorem_id, FAIL, len(O),
                               {"archetype": _w(o), "projection": _w(p), "re_encoded": _w(back)}, subject,
                               "projection does not encode back")
        if p in seen:
            return CheckResult(theorem_id, FAIL, len(O),
                               {"archetypes": [_w(seen[p]), _w(o)], "projection": _w(p)}, subject,
                               "projection not injective")
        seen[p] = o
    return CheckResult(theorem_id, PASS, len(O), subject=subject,
                       details={"inputs": len(I), "outputs": len(O)})


def check_latent_transitivity(inputs: Iterable[Sample], mid: Stage, top: Stage, subject: str = "") -> CheckResult:
    """Composing two latent maps stays latent relative to the original inputs."""
    I = FiniteSet(inputs)
    mids = FiniteSet(mid.encode(i) for i in I)
    tops = FiniteSet(top.encode(m) for m in mids)
    for o2 in tops:
        try:
            i = mid.project(top.project(o2))
        except Exception as exc:
            return CheckResult("latent_transitivity", FAIL, len(tops), {"archetype": _w(o2), "error": repr(exc)},
                               subject, "composed projection failed")
        if i not in I:
            return CheckResult("latent_transitivity", FAIL, len(tops), {"archetype": _w(o2), "projection": _w(i)},
                               subject, "composed projection is not an input")
        back = top.encode(mid.encode(i))
        if back != o2:
            return CheckResult("latent_transitivity", FAIL, len(tops),
                               {"archetype": _w(o2), "projection": _w(i), "re_encoded": _w(back)}, subject,
                               "composed projection does not encode back")
    return CheckResult("latent_transitivity", PASS, max(len(tops), 1), subject=subject,
                       details={"inputs": len(I), "middle": len(mids), "outputs": len(tops)})


def check_average_latent(inputs: Iterable[Sample], p1: Codebook, p2: Codebook,
                         grid: float = DEFAULT_GRID, subject: str = "") -> CheckResult:
    """Averaging two primitives' outputs keeps a recoverable latent set.

    Recovery through ``2*o - o2`` is only exact when the averaged value was
    not rounded; inputs where rounding occurred are counted and, if nothing
    else is left, the check reports the precondition as unmet.
    """
    I = FiniteSet(inputs)
    averaged, pairs = set(), set()
    aligned = 0
    for i in I:
        o1, o2 = p1.encode(i)[1], p2.encode(i)[1]
        o = average(o1, o2, grid)
        averaged.add(o)
        pairs.add((o1, o2))
        if not np.array_equal(2.0 * o.values - o2.values, o1.values):
            continue
        aligned += 1
        try:
            r = average_recover(o, o2, p1)
        except RecoveryError as exc:
            return CheckResult("average_latent", FAIL, aligned, {"input": _w(i), "average": _w(o), "error": str(exc)},
                               subject, "recovery found no archetype")
        if p1.encode(r)[1] != o1:
            return CheckResult("average_latent", FAIL, aligned,
                               {"input": _w(i), "average": _w(o), "recovered": _w(r)}, subject,
                               "recovered input maps elsewhere")
    n1, n2 = len(p1.output_set(I)), len(p2.output_set(I))
    details = {"inputs": len(I), "averaged": len(averaged), "occurring_pairs": len(pairs),
               "first": n1, "second": n2, "within_max_bound": len(averaged) <= max(n1, n2),
               "unrounded": aligned}
    if aligned == 0:
        return CheckResult("average_latent", UNMET, max(len(I), 1), subject=subject, details=details,
                           note="every average was rounded by the grid")
    if len(averaged) >= len(I):
        return CheckResult("average_latent", FAIL, aligned, details, subject,
                           "averaged set is not smaller than the input set")
    note = "" if aligned == len(I) else f"{len(I) - aligned} rounded averages skipped"
    return CheckResult("average_latent", PASS, aligned, subject=subject, details=details, note=note)


def check_cardinality_chain(input_size: int, single_size: int, level_sizes: Sequence[int],
                            subject: str = "") -> CheckResult:
    """``|I| > |O_single| >= ...`` with every level strictly smaller than the one below.

    ``level_sizes`` runs bottom to top; the structure's output is the last one.
    """
    chain = [input_size, *level_sizes]
    bad = next((k for k in range(1, len(chain)) if not chain[k] < chain[k - 1]), None)
    if bad is not None and chain[bad - 1] >= 2:
        return CheckResult("cardinality_chain", FAIL, len(chain), {"chain": chain, "level": bad}, subject,
                           "level did not reduce")
    top = chain[-1]
    if not input_size > single_size:
        return CheckResult("cardinality_chain", FAIL, len(chain), {"inputs": input_size, "single": single_size},
                           subject, "single primitive did not reduce")
    if len(level_sizes) > 1 and not single_size > top and single_size >= 2:
        return CheckResult("cardinality_chain", FAIL, len(chain), {"single": single_size, "structure": top},
                           subject, "structure not finer than a single primitive")
    note = "" if bad is None else "stopped at a single archetype"
    return CheckResult("cardinality_chain", PASS, len(chain), subject=subject, note=note,
                       details={"chain": chain, "single": single_size})


def _compare_pyramid_column(inputs: list[Sample], pyr: DiscriminatoryPyramid, col: DiscriminatoryColumn,
                            subject: str) -> CheckResult:
    if not pyr.is_uniform:
        same = pyr.output_set(inputs) == col.output_set(inputs)
        return CheckResult("pyramid_column_equivalence", UNMET, len(inputs), subject=subject,
                           note="pyramid primitives differ within a level", details={"outputs_equal": same})
    po, co = pyr.output_set(inputs), col.output_set(inputs)
    if po != co:
        return CheckResult("pyramid_column_equivalence", FAIL, len(inputs),
                           {"pyramid_outputs": po.to_json(), "column_outputs": co.to_json()}, subject,
                           "output sets differ")
    for x in inputs:
        a, b = pyr.encode(x), col.encode(x)
        if a != b:
            return CheckResult("pyramid_column_equivalence", FAIL, len(inputs),
                               {"input": _w(x), "pyramid": _w(a), "column": _w(b)}, subject, "encodings differ")
    return CheckResult("pyramid_column_equivalence", PASS, len(inputs), subject=subject,
                       details={"levels": pyr.levels, "outputs": len(po)})


def check_pyramid_column_corollary(inputs: Iterable[Sample], levels: int, params: dict[str, Any],
                                   grid: float = DEFAULT_GRID, subject: str = "") -> CheckResult:
    """Train a pyramid and a column with ``levels`` levels each and compare them."""
    xs = FiniteSet(inputs).canonical()
    pyr = train_pyramid(xs, levels - 1, params, grid=grid)
    col = train_column(xs, levels, params, grid=grid)
    return _compare_pyramid_column(xs, pyr, col, subject)


# associative checks -----------------------------------------------------------

def check_correlation(presented: Sequence[Sequence[Sample]], al_input_set: FiniteSet, layout: ConcatLayout,
                      mode: str = "correlated", subject: str = "") -> CheckResult:
    """The layer's input set is exactly the presented tuples, or their full product.

    ``mode="independent"`` needs the presentation to cover the product of
    per-slot value sets; otherwise the result is deferred.
    """
    observed = observed_set(presented, layout)
    if mode == "correlated":
        extra = next((x for x in al_input_set if x not in observed), None)
        missing = next((x for x in observed if x not in al_input_set), None)
        if extra is not None or missing is not None:
            return CheckResult("correlated_tuples", FAIL, len(presented),
                               {"unpresented_tuple": _w(extra), "missing_tuple": _w(missing)}, subject,
                               "input set differs from presented tuples")
        return CheckResult("correlated_tuples", PASS, max(len(presented), 1), subject=subject,
                           details={"presented": len(presented), "distinct": len(observed)})
    if mode != "independent":
        raise ValueError(f"unknown mode {mode!r}")
    slots = [FiniteSet(t[k] for t in presented) for k in range(layout.arity)]
    size = int(np.prod([len(s) for s in slots]))
    details = {"product": size, "distinct": len(observed)}
    # observed tuples are a subset of the product, so equal sizes means full coverage
    if len(observed) != size:
        return CheckResult("independent_product", DEFERRED, max(len(presented), 1), subject=subject,
                           details=details, note="presentation does not cover the product")
    product = FiniteSet(concat(list(combo), layout) for combo in itertools.product(*slots))
    if al_input_set != product:
        missing = next((x for x in product if x not in al_input_set), None)
        extra = next((x for x in al_input_set if x not in product), None)
        return CheckResult("independent_product", FAIL, len(product),
                           {"missing_tuple": _w(missing), "extra_tuple": _w(extra)}, subject,
                           "input set is not the full product")
    return CheckResult("independent_product", PASS, len(product), subject=subject, details=details)


def check_concat_bijective(layout: ConcatLayout, trials: int = 1000, seed: int = 0,
                           alphabet: int = 3, subject: str = "") -> CheckResult:
    """``split`` inverts ``concat`` both ways and distinct tuples never collide.

    Values come from a small alphabet so that repeated tuples do occur and
    the injectivity comparison is not vacuous.
    """
    rng = np.random.default_rng(seed)
    by_concat: dict = {}
    for t in range(trials):
        parts = [Sample(rng.integers(0, alphabet, size=s.size).astype(float), s) for s in layout.part_shapes]
        x = concat(parts, layout)
        back = split(x, layout)
        if back != parts:
            return CheckResult("concat_bijective", FAIL, t + 1, {"parts": [_w(p) for p in parts]}, subject,
                               "split(concat(p)) != p")
        y = Sample(rng.normal(size=layout.total), layout.shape)
        if concat(split(y, layout), layout) != y:
            return CheckResult("concat_bijective", FAIL, t + 1, {"vector": _w(y)}, subject,
                               "concat(split(x)) != x")
        prev = by_concat.setdefault(x.key, tuple(p.key for p in parts))
        if prev != tuple(p.key for p in parts):
            return CheckResult("concat_bijective", FAIL, t + 1, {"concatenation": _w(x)}, subject,
                               "two tuples share a concatenation")
    return CheckResult("concat_bijective", PASS, trials, subject=subject,
                       details={"arity": layout.arity, "distinct_tuples": len(by_concat)})


# structure adapters -----------------------------------------------------------

def column_stage(c: DiscriminatoryColumn | DiscriminatoryPyramid) -> Stage:
    def proj(o: Sample) -> Sample:
        a = c.top.index_of(o)
        if a is None:
            raise LookupError(f"{o!r} is not a top archetype")
        return c.project(a)

    return Stage(c.encode, proj)


def column_checks(inputs: Sequence[Sample], col: DiscriminatoryColumn, subject: str = "") -> list[CheckResult]:
    I = FiniteSet(inputs)
    out = []
    stages = [codebook_stage(cb) for cb in col.bottom_up()]
    # compose the lower levels into one stage and add the next level on top
    for k in range(1, len(stages)):
        lower = DiscriminatoryColumn(col.shape, tuple(reversed(col.bottom_up()[:k])))
        out.append(check_latent_transitivity(I, column_stage(lower), stages[k], f"{subject}:level{k}"))
    sizes = [len(s) for s in col.level_output_sets(I)]
    out.append(check_cardinality_chain(len(I), sizes[0], sizes, subject))
    return out


def pyramid_checks(inputs: Sequence[Sample], pyr: DiscriminatoryPyramid, params: dict[str, Any],
                   grid: float, subject: str = "") -> list[CheckResult]:
    I = FiniteSet(inputs)
    out = [check_latent_set(I, *column_stage(pyr), theorem_id="pyramid_latent", subject=subject)]
    if pyr.depth >= 1:
        bottom = pyr.codebooks[-1]
        out.append(check_average_latent(I, bottom[0], bottom[1], grid, f"{subject}:bottom"))
    single = len(pyr.codebooks[-1][0].output_set(I))
    sizes = [len(s) for s in pyr.level_sets(I)]
    out.append(check_cardinality_chain(len(I), single, sizes, subject))
    col = train_column(I.canonical(), pyr.levels, {k: v for k, v in params.items() if k != "jitter"},
                       pyr.shape, grid)
    out.append(_compare_pyramid_column(I.canonical(), pyr, col, subject))
    return out


def al_checks(presented: Sequence[Sequence[Sample]], al: AssociativeLayer, seed: int,
              subject: str = "") -> list[CheckResult]:
    out = [
        check_correlation(presented, al.inputs, al.layout, "correlated", subject),
        check_correlation(presented, al.inputs, al.layout, "independent", subject),
        check_concat_bijective(al.layout, 1000, seed, subject=subject),
        check_latent_set(al.inputs, *codebook_stage(al.codebook), theorem_id="associative_latent", subject=subject),
    ]
    return out


def _key(inp) -> Any:
    return tuple(p.key for p in inp) if isinstance(inp, list) else inp.key


def run_all(tg: TrainedGraph, rows: Mapping[str, Sequence[Sample]], seed: int = 0) -> VerificationReport:
    """Run every applicable check on every node and on the whole architecture."""
    g = tg.graph
    if not g.order:
        raise ValueError("cannot verify an empty architecture")
    streams = tg.node_streams(rows)
    found: list[CheckResult] = []
    for n in g.order:
        node, kind = tg.nodes[n], g.nodes[n].kind
        stream = streams[n]
        if kind == "associative_layer":
            flat = [concat(t, node.layout) for t in stream]
            log = MappingLog.from_process(FiniteSet(flat), lambda x: node.codebook.encode(x)[1])
        else:
            flat = stream
            enc = (lambda x, c=node: c.encode(x)[1]) if kind == "primitive" else node.encode
            log = MappingLog.from_process(FiniteSet(flat), enc)
        found.append(check_surjective_equivalence(log, n))
        found.append(check_diversity_reduction(log, n))
        if kind == "primitive":
            found.append(check_latent_set(flat, *codebook_stage(node), subject=n))
        elif kind == "column":
            found.append(check_latent_set(flat, *column_stage(node), subject=n))
            found.extend(column_checks(flat, node, n))
        elif kind == "pyramid":
            found.extend(pyramid_checks(flat, node, g.nodes[n].params, g.grid, n))
        else:
            found.extend(al_checks(stream, node, seed, n))

    found.append(_architecture_check(tg, rows))
    if not found or any(c.cases_run < 1 for c in found):
        raise ValueError("a check ran no cases")
    order = {t: k for k, t in enumerate(THEOREM_IDS)}
    found.sort(key=lambda c: order[c.theorem_id])
    return VerificationReport(found, seed)


def _architecture_check(tg: TrainedGraph, rows: Mapping[str, Sequence[Sample]]) -> CheckResult:
    g = tg.graph
    sources = g.sources
    source_sets = {s: FiniteSet(rows[s]) for s in sources}
    layout = ConcatLayout([rows[s][0].shape for s in sources])
    n = len(rows[sources[0]])
    I = FiniteSet(concat([rows[s][r] for s in sources], layout) for r in range(n))

    def enc(x: Sample) -> Sample:
        return tg.encode(dict(zip(sources, split(x, layout))))

    def proj(o: Sample) -> Sample:
        vals = tg.project_value(g.sink, o)
        return concat([vals[s] for s in sources], layout)

    def contains(x: Sample) -> bool:
        return all(p in source_sets[s] for s, p in zip(sources, split(x, layout)))

    return check_latent_set(I, enc, proj, contains, theorem_id="architecture_latent", subject=g.name)


# fault injection --------------------------------------------------------------

def corrupt_codebook(cb: Codebook) -> Codebook:
    """Rotate representatives by one so each archetype projects to a neighbour's input."""
    if len(cb) < 2:
        raise ValueError("need at least two archetypes to corrupt")
    return Codebook(cb.shape, cb.archetypes, np.roll(cb.representatives, 1, axis=0), cb.grid,
                    cb.merge_radius, cb.kind, cb.degenerate)


def inject_fault(tg: TrainedGraph) -> TrainedGraph:
    """Copy of ``tg`` with the first corruptible codebook's projections scrambled."""
    nodes = dict(tg.nodes)
    for n in tg.graph.order:
        node = nodes[n]
        cb = _top(node)
        if len(cb) < 2:
            continue
        bad = corrupt_codebook(cb)
        if isinstance(node, Codebook):
            nodes[n] = bad
        elif isinstance(node, AssociativeLayer):
            nodes[n] = AssociativeLayer(node.layout, bad, node.inputs)
        elif isinstance(node, DiscriminatoryColumn):
            nodes[n] = DiscriminatoryColumn(node.shape, (bad, *node.codebooks[1:]))
        else:
            rows = tuple((tuple(corrupt_codebook(c) if len(c) > 1 else c for c in row)) for row in node.codebooks)
            nodes[n] = DiscriminatoryPyramid(node.shape, node.grid, rows, np.roll(node.witnesses, 1, axis=0))
        return TrainedGraph(tg.graph, nodes, tg.stats, tg.dataset)
    raise ValueError("no codebook with two or more archetypes to corrupt")
