"""``drf`` command line: generate data, train architectures, complete, verify, report.

Exit codes: 0 success, 1 verification (or monotonicity) failure, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import data
from .core import Sample, ShapeError
from .structures.graph import ArchitectureGraph, ConfigError, TrainedGraph, graph_train
from .structures.pyramid import ProjectionError
from .verify import inject_fault, run_all

log = logging.getLogger("drf")

USAGE_ERRORS = (ConfigError, data.DatasetError, ShapeError, FileNotFoundError, KeyError, ValueError,
                ProjectionError, json.JSONDecodeError)


class UsageError(Exception):
    pass


def _read_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    with open(p) as f:
        return json.load(f)


def cmd_gen(args) -> int:
    spec_dict = _read_json(args.config)
    if args.seed is not None:
        spec_dict["seed"] = args.seed
        for k, m in enumerate(spec_dict.get("modalities", [])):
            m["seed"] = args.seed + k
    ds = data.generate(data.DatasetSpec.from_dict(spec_dict))
    out = data.write(ds, args.out)
    print(f"wrote {len(ds)} rows to {out / data.CSV_NAME}")
    return 0


def _summary(tg: TrainedGraph, rows) -> dict:
    sources = tg.graph.sources
    n = len(rows[sources[0]])
    distinct = len({tuple(rows[s][r].key for s in sources) for r in range(n)})
    return {"input": distinct, "output": tg.stats[tg.graph.sink]["output"]}


def train_model(config: dict, ds: data.Dataset, seed: int | None = None) -> TrainedGraph:
    if seed is not None:
        config = {**config, "seed": seed}
    g = ArchitectureGraph.from_config(config)
    rows = ds.streams()
    tg = graph_train(g, rows, ds.info())
    tg.dataset["summary"] = _summary(tg, rows)
    return tg


def cmd_train(args) -> int:
    ds = data.load_rows(args.data)
    tg = train_model(_read_json(args.config), ds, args.seed)
    tg.save(args.out)
    for n in tg.graph.order:
        s = tg.stats[n]
        print(f"{n:<20} {tg.graph.nodes[n].kind:<18} |I|={s['input']:<5} |O|={s['output']}")
    summ = tg.dataset["summary"]
    print(f"{tg.graph.name}: {summ['input']} distinct rows -> {summ['output']} archetypes; model written to {args.out}")
    return 0


def _parse_known(items: list[str]) -> dict[str, list[float]]:
    known = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--known expects name=v1,v2,...; got {item!r}")
        name, vals = item.split("=", 1)
        try:
            known[name] = [float(v) for v in vals.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--known {name}: values must be numbers")
    return known


def cmd_complete(args) -> int:
    tg = TrainedGraph.load(_model_path(args.model))
    g = tg.graph
    raw = _parse_known(args.known)
    unknown_names = [k for k in raw if k not in g.sources]
    if unknown_names:
        raise UsageError(f"unknown sources {unknown_names}; model sources are {g.sources}")
    known = {}
    for name, vals in raw.items():
        shape = _source_shape(tg, name)
        known[name] = Sample(vals, shape) if shape else Sample(vals)
    filled = tg.complete(known)
    print(json.dumps({s: filled[s].to_json() for s in g.sources}))
    return 0


def _source_shape(tg: TrainedGraph, name: str):
    g = tg.graph
    if name in g.source_shapes:
        return g.source_shapes[name]
    for n in g.order:
        for k, up in enumerate(g.inputs[n]):
            if up == name:
                return g.nodes[n].input_shape(k)
    return None


def _model_path(path: str) -> str:
    if not Path(path).is_file():
        raise UsageError(f"{path}: no such model file")
    return path


def cmd_verify(args) -> int:
    tg = TrainedGraph.load(_model_path(args.model))
    ds = data.load_rows(args.data)
    if tg.dataset.get("sha256") and tg.dataset["sha256"] != ds.fingerprint:
        log.warning("dataset differs from the one the model was trained on")
    if args.inject_fault:
        tg = inject_fault(tg)
    report = run_all(tg, ds.streams(), seed=args.seed or 0)
    print(report.summary())
    if args.out:
        Path(args.out).write_text(report.dumps() + "\n")
    print("PASSED" if report.passed else f"FAILED ({len(report.failures())} checks)")
    return 0 if report.passed else 1


def cmd_report(args) -> int:
    rows, fingerprints = [], set()
    for path in args.models:
        tg = TrainedGraph.load(_model_path(path))
        summ = tg.dataset.get("summary") or {"input": None, "output": tg.stats[tg.graph.sink]["output"]}
        fingerprints.add(tg.dataset.get("sha256"))
        rows.append({"model": path, "architecture": tg.graph.name, "input": summ["input"],
                     "output": summ["output"], "depth": _depth(tg)})
    if len(fingerprints) > 1:
        log.warning("models were trained on different datasets")
    print(f"{'architecture':<28} {'depth':>5} {'|I|':>6} {'|O|':>6} {'reduction':>10}")
    for r in rows:
        red = "" if r["input"] is None else f"{r['input'] - r['output']:>10}"
        print(f"{r['architecture']:<28} {r['depth']:>5} {r['input'] or '':>6} {r['output']:>6} {red}")
    out = {"architectures": rows}
    status = 0
    if args.assert_monotone:
        outs = [r["output"] for r in rows]
        ok = all(b <= a for a, b in zip(outs, outs[1:]))
        out["monotone"] = ok
        if not ok:
            print(f"output sizes are not non-increasing: {outs}", file=sys.stderr)
            status = 1
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=1) + "\n")
    return status


def _depth(tg: TrainedGraph) -> int:
    g = tg.graph
    memo: dict[str, int] = {}

    def depth(name: str) -> int:
        if name in g.sources:
            return 0
        if name not in memo:
            spec = g.nodes[name]
            own = int(spec.params.get("levels", 1)) if spec.kind in ("column", "pyramid") else 1
            memo[name] = own + max(depth(u) for u in g.inputs[name])
        return memo[name]

    return depth(g.sink)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", help="generate a synthetic dataset")
    s.add_argument("--config", required=True, help="dataset spec JSON")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("train", help="train an architecture")
    s.add_argument("--config", required=True, help="architecture config JSON")
    s.add_argument("--data", required=True, help="dataset directory")
    s.add_argument("--out", required=True, help="model JSON to write")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("complete", help="fill in unknown sources of a tuple")
    s.add_argument("--model", required=True)
    s.add_argument("--known", action="append", default=[], metavar="NAME=V1,V2,...")
    s.set_defaults(func=cmd_complete)

    s = sub.add_parser("verify", help="run every property check on a trained model")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", help="report JSON to write")
    s.add_argument("--seed", type=int)
    s.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("report", help="compare architectures' reductions")
    s.add_argument("models", nargs="+")
    s.add_argument("--out", help="JSON table to write")
    s.add_argument("--assert-monotone", action="store_true")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"drf: error: {exc}", file=sys.stderr)
        return 2
    except USAGE_ERRORS as exc:
        print(f"drf: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
