import json
from fractions import Fraction

import numpy as np
import pytest

from drf.combiners import ConcatLayout, concat
from drf.core import FiniteSet, MappingLog, Sample, Shape
from drf.primitive import train_exemplar_quantizer, train_trivial
from drf.structures import ArchitectureGraph, ConfigError, DiscriminatoryColumn, graph_train, train_column
from drf.verify import (
    THEOREM_IDS,
    CheckResult,
    check_average_latent,
    check_cardinality_chain,
    check_concat_bijective,
    check_correlation,
    check_diversity_reduction,
    check_latent_set,
    check_latent_transitivity,
    check_pyramid_column_corollary,
    check_surjective_equivalence,
    codebook_stage,
    column_stage,
    corrupt_codebook,
    inject_fault,
    run_all,
)

GRID = 2.0 ** -10


def S(*v):
    return Sample(v)


def line(n, seed=0):
    rng = np.random.default_rng(seed)
    return [Sample([v]) for v in np.round(rng.uniform(0, 10, n), 3)]


def test_failed_result_needs_counterexample():
    with pytest.raises(ValueError):
        CheckResult("latent_set", "fail", 1)
    assert CheckResult("latent_set", "deferred", 1).passed


def test_surjective_and_diversity_checks():
    log = MappingLog.record([(S(0), S(0)), (S(1), S(0)), (S(2), S(2))])
    assert check_surjective_equivalence(log).status == "pass"
    d = check_diversity_reduction(log)
    assert d.status == "pass" and len(d.details["witness"]["inputs"]) == 2
    bad = MappingLog.record([(S(0), S(0)), (S(0), S(1))])
    r = check_surjective_equivalence(bad)
    assert r.status == "fail" and r.counterexample["input"] == [0.0]
    unreached = MappingLog.record([(S(0), S(0))], output_set=FiniteSet([S(0), S(5)]))
    assert check_surjective_equivalence(unreached).counterexample["unreached_output"] == [5.0]
    ident = MappingLog.record([(S(0), S(0)), (S(1), S(1))])
    assert check_diversity_reduction(ident).status == "fail"
    assert check_diversity_reduction(MappingLog.record([(S(0), S(0))])).status == "precondition_unmet"


def test_latent_set_pass_fail_and_trivial():
    xs = line(30)
    cb = train_exemplar_quantizer(FiniteSet(xs), 0.6, Shape(1))
    assert check_latent_set(xs, *codebook_stage(cb)).status == "pass"
    bad = corrupt_codebook(cb)
    r = check_latent_set(xs, *codebook_stage(bad))
    assert r.status == "fail"
    # replaying the counterexample reproduces the failure
    o = Sample(r.counterexample["archetype"])
    p = Sample(r.counterexample["projection"])
    assert codebook_stage(bad).project(o) == p
    assert codebook_stage(bad).encode(p) != o
    triv = train_trivial([S(0), S(1)], Shape(1))
    assert check_latent_set([S(0), S(1)], *codebook_stage(triv)).status == "pass"


def test_latent_set_fails_without_reduction():
    xs = [S(0), S(5)]
    ident = (lambda x: x, lambda o: o)
    r = check_latent_set(xs, *ident)
    assert r.status == "fail" and r.counterexample == {"inputs": 2, "outputs": 2}


def test_latent_transitivity_on_column_and_fault():
    xs = line(10, seed=4)
    col = train_column(xs, 2, {"merge_radius": 0.7})
    mid, top = col.codebooks[1], col.codebooks[0]
    assert check_latent_transitivity(xs, codebook_stage(mid), codebook_stage(top)).status == "pass"
    if len(mid) >= 2:
        r = check_latent_transitivity(xs, codebook_stage(corrupt_codebook(mid)), codebook_stage(top))
        assert r.status == "fail" and r.counterexample is not None


def _aligned_inputs():
    return [Sample([k / 8.0]) for k in (0, 1, 3, 8, 9, 20, 22, 23, 40, 41)]


def test_average_latent_two_radii_with_exact_oracle():
    xs = _aligned_inputs()
    p1 = train_exemplar_quantizer(FiniteSet(xs), 0.2, Shape(1), grid=2 * GRID)
    p2 = train_exemplar_quantizer(FiniteSet(xs), 0.6, Shape(1), grid=2 * GRID)
    r = check_average_latent(xs, p1, p2, GRID)
    assert r.status == "pass" and r.details["unrounded"] == len(xs)
    exact = {(Fraction(p1.encode(x)[1].values[0]) + Fraction(p2.encode(x)[1].values[0])) / 2 for x in xs}
    assert r.details["averaged"] == len(exact)
    assert r.details["averaged"] < len(xs)


def test_average_latent_unmet_when_every_average_rounds():
    xs = [S(0.0), S(0.3), S(7.0)]
    p1 = train_exemplar_quantizer(FiniteSet(xs), 0.5, Shape(1), grid=0.1)
    p2 = train_exemplar_quantizer(FiniteSet(xs), 0.2, Shape(1), grid=0.1)
    # a coarse average grid rounds every half-step sum
    r = check_average_latent(xs, p1, p2, grid=5.0)
    assert r.status == "precondition_unmet"
    assert r.details["unrounded"] == 0


def test_cardinality_chain_examples():
    assert check_cardinality_chain(100, 40, [40, 20, 10]).status == "pass"
    assert check_cardinality_chain(100, 40, [40, 40, 10]).status == "fail"
    assert check_cardinality_chain(100, 100, [100]).status == "fail"
    stop = check_cardinality_chain(10, 3, [3, 1, 1])
    assert stop.status == "pass" and stop.note


@pytest.mark.parametrize("levels, n", [(2, 5), (4, 40)])
def test_pyramid_column_corollary(levels, n):
    r = check_pyramid_column_corollary(line(n, seed=n), levels, {"merge_radius": 0.5})
    assert r.status == "pass", r


def test_pyramid_column_corollary_jitter_unmet():
    r = check_pyramid_column_corollary(line(30), 3, {"merge_radius": 0.5, "jitter": 0.3, "seed": 2})
    assert r.status == "precondition_unmet"


def test_correlation_modes():
    layout = ConcatLayout([[1], [1]])
    rows = [[S(c), S(10 + c)] for c in range(5) for _ in range(3)]
    I = FiniteSet(concat(r, layout) for r in rows)
    ok = check_correlation(rows, I, layout, "correlated")
    assert ok.status == "pass" and ok.details["distinct"] == 5
    extra = FiniteSet([*I, concat([S(0), S(11)], layout)])
    bad = check_correlation(rows, extra, layout, "correlated")
    assert bad.status == "fail" and bad.counterexample["unpresented_tuple"] == [0.0, 11.0]

    full = [[S(a), S(b)] for a in (0, 1) for b in (0, 1)]
    If = FiniteSet(concat(r, layout) for r in full)
    assert check_correlation(full, If, layout, "independent").status == "pass"
    partial = full[:3]
    assert check_correlation(partial, FiniteSet(concat(r, layout) for r in partial), layout,
                             "independent").status == "deferred"


@pytest.mark.parametrize("parts", [[[2], [3], [1]], [[4]]])
def test_concat_bijective(parts):
    r = check_concat_bijective(ConcatLayout(parts), trials=1000, seed=1)
    assert r.status == "pass" and r.cases_run == 1000


def test_concat_distinct_tuples_distinct_vectors():
    layout = ConcatLayout([[1], [1], [1]])
    rng = np.random.default_rng(0)
    tuples = {tuple(rng.integers(0, 4, 3)) for _ in range(50)}
    vecs = {concat([S(float(v)) for v in t], layout) for t in tuples}
    assert len(vecs) == len(tuples)


def test_run_all_on_architecture(dataset_350, arch_configs):
    rows = dataset_350.streams()
    tg = graph_train(ArchitectureGraph.from_config(arch_configs[1]), rows)
    rep = run_all(tg, rows, seed=0)
    assert rep.passed, rep.summary()
    ids = [c.theorem_id for c in rep.checks]
    assert ids == sorted(ids, key=THEOREM_IDS.index)
    assert "architecture_latent" in ids
    json.loads(rep.dumps())

    broken = run_all(inject_fault(tg), rows)
    assert not broken.passed
    assert all(c.counterexample is not None for c in broken.failures())


def test_run_all_on_column_graph():
    cfg = {
        "sources": [{"name": "x", "shape": [1]}],
        "nodes": [{"name": "c", "kind": "column", "params": {"levels": 3, "merge_radius": 0.4, "shape": [1]}}],
        "edges": [{"from": "x", "to": "c"}],
        "sink": "c",
    }
    xs = line(40, seed=8)
    rep = run_all(graph_train(ArchitectureGraph.from_config(cfg), {"x": xs}), {"x": xs})
    assert rep.passed, rep.summary()
    assert {"latent_transitivity", "cardinality_chain"} <= {c.theorem_id for c in rep.checks}


def test_empty_graph_rejected():
    with pytest.raises(ConfigError):
        ArchitectureGraph.from_config({"sources": ["x"], "nodes": [], "edges": [], "sink": "x"})


def test_column_stage_projects_into_inputs():
    xs = line(20, seed=6)
    col = train_column(xs, 2, {"merge_radius": 0.5})
    assert isinstance(col, DiscriminatoryColumn)
    assert check_latent_set(xs, *column_stage(col)).status == "pass"
