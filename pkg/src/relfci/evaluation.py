"""Scoring learned partial ancestral relational models against ground truth.

Both truth and output are compared at the class-attribute-pair level: an
edge is identified by the unordered pair of (item class, attribute) ends it
connects, regardless of which relational path realises it.  ADJACENCY mode
scores presence alone; ORIENTED mode additionally requires every committed
(non-circle) learned mark to match some true mark combination for that
attribute pair.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass, field
from itertools import product

from .discovery import RULE_NAMES, RunConfig, run_discovery
from .generate import generate_model
from .maagg import truth_edges
from .oracle import CiOracle
from .schema import Lrcm
from .state import Mark, Parm

EdgeKey = tuple  # sorted tuple of (item class, attribute) ends

ADJACENCY = "adjacency"
ORIENTED = "oriented"


def parm_edge_marks(parm: Parm) -> dict[EdgeKey, set[tuple[Mark, ...]]]:
    """Collapse a learned model onto attribute-pair keys with their marks."""
    out: dict[EdgeKey, set[tuple[Mark, ...]]] = {}
    for entry in parm.edges:
        pair = entry.pair
        key = tuple(sorted(pair.ends))
        marks = tuple(pair.mark_at(end) for end in key)
        if len(key) == 1:
            marks = marks * 2
        out.setdefault(key, set()).add(marks)
    return out


@dataclass
class Score:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0


def _mark_compatible(learned: tuple[Mark, ...],
                     truth_variants: set[tuple]) -> bool:
    for variant in truth_variants:
        if len(variant) != len(learned):
            continue
        if all(lm == Mark.CIRCLE or lm == tm
               for lm, tm in zip(learned, variant)):
            return True
    return False


def score(parm: Parm, truth: dict, mode: str = ADJACENCY) -> Score:
    return score_marks(parm_edge_marks(parm), truth, mode)


def score_marks(learned: dict[EdgeKey, set[tuple[Mark, ...]]],
                truth: dict, mode: str = ADJACENCY) -> Score:
    if mode not in (ADJACENCY, ORIENTED):
        raise ValueError(f"unknown scoring mode {mode!r}")
    result = Score()
    for key, mark_sets in learned.items():
        if key not in truth:
            result.fp += 1
            continue
        if mode == ADJACENCY:
            result.tp += 1
            continue
        if all(_mark_compatible(marks, truth[key]) for marks in mark_sets):
            result.tp += 1
        else:
            result.fp += 1
            result.fn += 1
    result.fn += sum(1 for key in truth if key not in learned)
    return result


@dataclass
class SweepRow:
    n_entities: int
    n_dependencies: int
    n_latents: int
    index: int
    seed: int
    algo: str
    precision: float
    recall: float
    ci_queries: int
    elapsed: float
    rule_counts: dict[str, int]


@dataclass
class SweepReport:
    rows: list[SweepRow] = field(default_factory=list)

    def cells(self) -> list[tuple[int, int, int]]:
        return sorted({(r.n_entities, r.n_dependencies, r.n_latents)
                       for r in self.rows})

    def aggregate(self) -> list[dict]:
        out = []
        for cell in self.cells():
            for algo in sorted({r.algo for r in self.rows}):
                rows = [r for r in self.rows if r.algo == algo and
                        (r.n_entities, r.n_dependencies, r.n_latents) == cell]
                if not rows:
                    continue
                precs = [r.precision for r in rows]
                recs = [r.recall for r in rows]
                out.append({
                    "n_entities": cell[0],
                    "n_dependencies": cell[1],
                    "n_latents": cell[2],
                    "algo": algo,
                    "models": len(rows),
                    "precision_mean": statistics.mean(precs),
                    "precision_std": statistics.pstdev(precs),
                    "recall_mean": statistics.mean(recs),
                    "recall_std": statistics.pstdev(recs),
                })
        return out

    def rule_distribution(self, algo: str = "relfci") -> dict[str, int]:
        totals = {name: 0 for name in RULE_NAMES}
        for row in self.rows:
            if row.algo != algo:
                continue
            for name, n in row.rule_counts.items():
                totals[name] = totals.get(name, 0) + n
        return totals

    def rule_fractions(self, algo: str = "relfci") -> dict[str, float]:
        dist = self.rule_distribution(algo)
        total = sum(dist.values())
        if not total:
            raise ValueError("no orientation rule fired in this sweep")
        return {name: n / total for name, n in dist.items()}

    def fci_rule_fraction(self) -> float:
        dist = self.rule_distribution("relfci")
        fci = sum(n for name, n in dist.items() if name.startswith("R"))
        total = sum(dist.values())
        return fci / total if total else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            header = ["n_entities", "n_dependencies", "n_latents", "index",
                      "seed", "algo", "precision", "recall", "ci_queries",
                      "elapsed"] + list(RULE_NAMES)
            writer.writerow(header)
            for r in self.rows:
                writer.writerow(
                    [r.n_entities, r.n_dependencies, r.n_latents, r.index,
                     r.seed, r.algo, f"{r.precision:.6f}", f"{r.recall:.6f}",
                     r.ci_queries, f"{r.elapsed:.4f}"]
                    + [r.rule_counts.get(name, 0) for name in RULE_NAMES])

    def to_json(self, path) -> None:
        payload = {
            "aggregate": self.aggregate(),
            "rule_distribution": {
                algo: self.rule_distribution(algo)
                for algo in sorted({r.algo for r in self.rows})},
            "fci_rule_fraction": self.fci_rule_fraction(),
            "rows": len(self.rows),
        }
        with open(path, "w") as handle:
            json.dump(payload, handle, indent=2)


def model_seed(master_seed: int, cell_index: int, index: int) -> int:
    return master_seed * 1_000_003 + cell_index * 1_009 + index


def _sweep_one(task) -> list[SweepRow]:
    (n_ent, n_dep, n_lat, index, seed, algos, mode, hop_threshold) = task
    model = generate_model(seed, n_ent, n_dep, n_lat,
                           hop_threshold=hop_threshold)
    truth = truth_edges(model, 2 * hop_threshold)
    oracle = CiOracle(model, 2 * hop_threshold)
    rows = []
    for algo in algos:
        started = time.perf_counter()
        queries_before = oracle.n_queries
        result = run_discovery(model, RunConfig(algo), oracle)
        sc = score(result.parm, truth, mode)
        rows.append(SweepRow(
            n_ent, n_dep, n_lat, index, seed, algo,
            sc.precision, sc.recall,
            oracle.n_queries - queries_before,
            time.perf_counter() - started,
            dict(result.rule_counts)))
    return rows


def sweep(models_per_cell: int = 5,
          master_seed: int = 0,
          entities: tuple[int, ...] = (2, 3, 4),
          dependencies: tuple[int, ...] = (6, 8, 10, 12),
          latents: tuple[int, ...] = (0, 1, 2),
          algos: tuple[str, ...] = ("relfci", "rcd"),
          mode: str = ADJACENCY,
          hop_threshold: int = 2,
          jobs: int = 1,
          progress=None) -> SweepReport:
    """Generate, rediscover, and score models over the benchmark grid."""
    report = SweepReport()
    grid = list(product(entities, dependencies, latents))
    tasks = [
        (n_ent, n_dep, n_lat, index,
         model_seed(master_seed, cell_index, index),
         tuple(algos), mode, hop_threshold)
        for cell_index, (n_ent, n_dep, n_lat) in enumerate(grid)
        for index in range(models_per_cell)
    ]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rows in pool.map(_sweep_one, tasks, chunksize=4):
                report.rows.extend(rows)
        return report
    for i, task in enumerate(tasks):
        report.rows.extend(_sweep_one(task))
        if progress is not None:
            progress(i // models_per_cell, len(grid),
                     i % models_per_cell, models_per_cell)
    return report
