"""Command line interface.

Subcommands: gen (sample a corpus of random models), discover (run relfci
or rcd against the independence oracle), dsep (answer one relational
d-separation query), bench (benchmark sweep with delimited output and
figures), eval (score a saved discovery result against its model's ground
truth).

Exit codes: 0 success, 1 usage error, 2 runtime failure.  RELFCI_SEED
provides the default seed.  Every output file embeds the tool version and
the fully resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .discovery import RULE_NAMES, RunConfig, run_discovery
from .evaluation import (ADJACENCY, ORIENTED, parm_edge_marks, score_marks,
                         sweep)
from .generate import generate_model
from .maagg import truth_edges
from .oracle import CiOracle
from .report import render_report
from .schema import load_model, parse_variable, save_model
from .state import ConflictError, Mark


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


class UsageError(ValueError):
    pass


def _default_seed() -> int:
    return int(os.environ.get("RELFCI_SEED", "0"))


def _end_str(end: tuple[str, str]) -> str:
    return f"{end[0]}.{end[1]}"


def _parse_end(text: str) -> tuple[str, str]:
    cls, attr = text.split(".", 1)
    return (cls, attr)


def _meta(args, keys) -> dict:
    return {"version": __version__,
            "config": {key: getattr(args, key) for key in keys}}


def _parm_payload(parm) -> dict:
    edges = []
    for key, mark_sets in sorted(parm_edge_marks(parm).items()):
        for marks in sorted(mark_sets, key=lambda ms: [m.value for m in ms]):
            edges.append({
                "ends": [_end_str(end) for end in key],
                "marks": [m.value for m in marks],
            })
    return {
        "required": sorted(str(d) for d in parm.required),
        "possible": sorted(str(d) for d in parm.possible),
        "bidirected": sorted(p.key for p in parm.bidirected),
        "edges": edges,
    }


def cmd_gen(args) -> int:
    for n in args.entities:
        if not 2 <= n <= 4:
            raise UsageError(f"--entities must lie in [2, 4], got {n}")
    for n in args.deps:
        if n not in (6, 8, 10, 12):
            raise UsageError(f"--deps must be one of 6 8 10 12, got {n}")
    for n in args.latents:
        if not 0 <= n <= 2:
            raise UsageError(f"--latents must lie in [0, 2], got {n}")
    os.makedirs(args.out, exist_ok=True)
    manifest = dict(_meta(args, ("entities", "deps", "latents", "per_config",
                                 "seed", "hop_threshold")), models=[])
    index = 0
    for n_ent in args.entities:
        for n_dep in args.deps:
            for n_lat in args.latents:
                for i in range(args.per_config):
                    seed = args.seed * 1_000_003 + index
                    model = generate_model(seed, n_ent, n_dep, n_lat,
                                           hop_threshold=args.hop_threshold)
                    name = f"model_e{n_ent}_d{n_dep}_l{n_lat}_{i}.json"
                    save_model(model, os.path.join(args.out, name))
                    manifest["models"].append({
                        "file": name, "seed": seed, "entities": n_ent,
                        "dependencies": n_dep, "latents": n_lat})
                    index += 1
    with open(os.path.join(args.out, "manifest.json"), "w") as handle:
        json.dump(manifest, handle, indent=2)
    print(f"wrote {index} models and manifest.json to {args.out}")
    return 0


def cmd_discover(args) -> int:
    model = load_model(args.model)
    if args.h is not None and args.h != model.hop_threshold:
        model = type(model)(model.schema, model.dependencies, args.h)
        model.validate()
    config = RunConfig(args.algo, args.h_prime, args.max_cond_size, args.seed)
    result = run_discovery(model, config)
    payload = dict(_meta(args, ("model", "algo", "h", "h_prime",
                                "max_cond_size", "seed")))
    payload.update({
        "algo": result.algo,
        "h_prime": config.resolve(model).h_prime,
        "parm": _parm_payload(result.parm),
        "rule_counts": {name: result.rule_counts.get(name, 0)
                        for name in RULE_NAMES},
        "ci_queries": result.ci_queries,
        "elapsed": result.elapsed,
    })
    if args.dump_paagg:
        payload["paaggs"] = {
            persp: result.state.dump_paagg(persp)
            for persp in sorted(result.state.paaggs)}
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_dsep(args) -> int:
    model = load_model(args.model)
    oracle = CiOracle(model, args.h_prime or 2 * model.hop_threshold)
    x = parse_variable(args.x)
    y = parse_variable(args.y)
    zs = frozenset(parse_variable(z) for z in args.z or ())
    print("SEPARATED" if oracle.ci(x, y, zs) else "CONNECTED")
    return 0


def cmd_bench(args) -> int:
    def progress(cell, n_cells, index, per_cell):
        if index == per_cell - 1:
            print(f"cell {cell + 1}/{n_cells} done", file=sys.stderr)

    report = sweep(models_per_cell=args.models_per_cell,
                   master_seed=args.seed,
                   entities=tuple(args.entities),
                   dependencies=tuple(args.deps),
                   latents=tuple(args.latents),
                   mode=args.mode,
                   jobs=args.jobs,
                   progress=progress if args.verbose else None)
    paths = render_report(report, args.out)
    meta = _meta(args, ("models_per_cell", "seed", "entities", "deps",
                        "latents", "mode", "jobs"))
    with open(os.path.join(args.out, "run_meta.json"), "w") as handle:
        json.dump(meta, handle, indent=2)
    print(f"fci-rule fraction: {report.fci_rule_fraction():.4f}")
    for path in paths.values():
        print(f"wrote {path}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    with open(args.result) as handle:
        payload = json.load(handle)
    learned: dict = {}
    for edge in payload["parm"]["edges"]:
        key = tuple(sorted(_parse_end(e) for e in edge["ends"]))
        learned.setdefault(key, set()).add(
            tuple(Mark(m) for m in edge["marks"]))
    truth = truth_edges(model, payload.get("h_prime",
                                           2 * model.hop_threshold))
    result = score_marks(learned, truth, args.mode)
    print(f"precision={result.precision:.4f} recall={result.recall:.4f} "
          f"tp={result.tp} fp={result.fp} fn={result.fn}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="relfci",
        description="relational causal discovery with latent confounders")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a corpus of random models",
                       parents=[])
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--entities", type=int, nargs="+", default=[2])
    p.add_argument("--deps", type=int, nargs="+", default=[6])
    p.add_argument("--latents", type=int, nargs="+", default=[1])
    p.add_argument("--per-config", type=int, default=1)
    p.add_argument("--hop-threshold", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("discover", help="run discovery on a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--algo", choices=("relfci", "rcd"), default="relfci")
    p.add_argument("--h", type=int, default=None)
    p.add_argument("--h-prime", type=int, default=None)
    p.add_argument("--max-cond-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--dump-paagg", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("dsep", help="relational d-separation query")
    p.add_argument("--model", required=True)
    p.add_argument("--perspective", default=None,
                   help="informational; inferred from --x")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", action="append", default=[])
    p.add_argument("--h-prime", type=int, default=None)
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("bench", help="benchmark sweep with report")
    p.add_argument("--models-per-cell", type=int, default=5)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--entities", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--deps", type=int, nargs="+", default=[6, 8, 10, 12])
    p.add_argument("--latents", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--mode", choices=(ADJACENCY, ORIENTED), default=ADJACENCY)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score a saved result against truth")
    p.add_argument("--model", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--mode", choices=(ADJACENCY, ORIENTED), default=ADJACENCY)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConflictError as exc:
        print(f"orientation conflict: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
