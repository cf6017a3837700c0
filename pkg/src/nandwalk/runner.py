"""Experiment orchestration: instance sweeps, agreement checks, reports.

A run takes a config (tree spec, assignment spec, algorithm set, size
multipliers, seeds), executes every requested decision procedure on every
instance, compares against the classical evaluator, and emits a
deterministic JSON report (plus an optional CSV projection of the numeric
table). Per-depth decision thresholds are calibrated once from canonical
gapped instances and persisted in the report.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import coined as coined_mod
from . import finite_tail as tail_mod
from . import reflections as refl_mod
from . import scattering as scat_mod
from .formula import (
    NandTree,
    QueryLedger,
    all_assignments,
    assignment_with_value,
    as_bits,
    evaluate,
    full_binary_tree,
    parse_formula,
    randomized_query_cost,
    worst_case_assignment,
)
from .scattering import ceil_sqrt

REPORT_SCHEMA = "nandwalk-report/1"

QUANTUM_ALGORITHMS = ("scattering", "tail", "reflections", "coined-long", "coined-short")
ALGORITHMS = QUANTUM_ALGORITHMS + ("classical",)

EXHAUSTIVE_LEAF_CAP = 12  # 4096 assignments
DIMENSION_CAP = 4096

# measured calibration constants for the wavepacket decision (theta sweep and
# time sweep recorded by the module tests); the module-level defaults of
# run_scattering_walk are narrower, these are what sweeps use
SCATTERING_TIME_MULTIPLIER = 4.0
SCATTERING_THRESHOLD = 0.27


class ExperimentError(ValueError):
    """Invalid experiment configuration or refused instance size."""


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str = "all"
    tree: dict = field(default_factory=lambda: {"full_binary": 2})
    assignment: object = "exhaustive"
    l_multiplier: float = 4.0
    m_multiplier: float = 8.0
    time_multiplier: float = SCATTERING_TIME_MULTIPLIER
    thresholds: dict = field(default_factory=dict)
    qpe_bits: int = 10
    qpe_shots: int = 1000
    seed: int = 0
    zero_tol: float = 1e-10
    orth_tol: float = 1e-8
    out: str | None = None

    def algorithms(self) -> tuple[str, ...]:
        if self.algorithm == "all":
            return ALGORITHMS
        if self.algorithm == "classical":
            return ("classical",)
        if self.algorithm in QUANTUM_ALGORITHMS:
            return (self.algorithm, "classical")
        raise ExperimentError(f"unknown algorithm {self.algorithm!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        known = {f for f in ExperimentConfig.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ExperimentError(f"unknown config keys: {sorted(unknown)}")
        return ExperimentConfig(**d)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r_squared: float


def fit_power_law(points: Sequence[tuple[float, float]]) -> PowerLawFit:
    """Least-squares fit of log(value) against log(N)."""
    if len(points) < 3:
        raise ExperimentError(f"power-law fit needs >= 3 points, got {len(points)}")
    ns = np.array([p[0] for p in points], dtype=float)
    vals = np.array([p[1] for p in points], dtype=float)
    if np.any(ns <= 0) or np.any(vals <= 0):
        raise ExperimentError("power-law fit needs positive N and values")
    lx, ly = np.log(ns), np.log(vals)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, residuals, *_ = np.linalg.lstsq(A, ly, rcond=None)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        ss_res = float(residuals[0]) if len(residuals) else float(
            ((ly - A @ coef) ** 2).sum()
        )
        r2 = 1.0 - ss_res / ss_tot
    return PowerLawFit(float(coef[0]), float(coef[1]), r2)


# ---------------------------------------------------------------------------
# instance enumeration

def resolve_trees(spec: dict) -> list[tuple[int | None, NandTree]]:
    """Trees requested by the config, tagged with their depth when full binary."""
    if "formula" in spec:
        tree = parse_formula(spec["formula"])
        if not tree.is_nand_only():
            raise ExperimentError("experiments need a NAND-only formula")
        return [(None, tree)]
    if "full_binary" in spec:
        val = spec["full_binary"]
        if isinstance(val, int):
            depths = [val]
        else:
            lo, hi = int(val[0]), int(val[1])
            if lo > hi:
                raise ExperimentError(f"bad depth range {val}")
            depths = list(range(lo, hi + 1))
        return [(d, full_binary_tree(d)) for d in depths]
    raise ExperimentError(f"tree spec needs 'formula' or 'full_binary', got {spec}")


def resolve_assignments(spec, tree: NandTree, seed: int) -> list[np.ndarray]:
    n = tree.leaf_count
    if isinstance(spec, str):
        if spec == "exhaustive":
            if n > EXHAUSTIVE_LEAF_CAP:
                raise ExperimentError(
                    f"exhaustive mode is capped at N <= {EXHAUSTIVE_LEAF_CAP}, got N = {n}"
                )
            return [np.array(x, dtype=np.int64) for x in all_assignments(n)]
        if spec == "all-ones":
            return [np.ones(n, dtype=np.int64)]
        if spec == "all-zeros":
            return [np.zeros(n, dtype=np.int64)]
        if spec == "worst-case":
            return [worst_case_assignment(tree)[0]]
        if spec == "canonical-f1":
            return [assignment_with_value(tree, 1)]
        if set(spec) <= {"0", "1"} and spec:
            return [as_bits([int(c) for c in spec], n)]
        if spec.startswith("random:"):
            parts = spec.split(":")
            count = int(parts[1])
            rseed = int(parts[2]) if len(parts) > 2 else seed
            return _random_assignments(n, count, rseed)
        raise ExperimentError(f"unknown assignment spec {spec!r}")
    if isinstance(spec, dict):
        if "bits" in spec:
            return [as_bits(spec["bits"], n)]
        if "random" in spec:
            r = spec["random"]
            return _random_assignments(n, int(r["count"]), int(r.get("seed", seed)))
    raise ExperimentError(f"unknown assignment spec {spec!r}")


def _random_assignments(n: int, count: int, seed: int) -> list[np.ndarray]:
    if count < 1:
        raise ExperimentError("random assignment count must be >= 1")
    rng = np.random.default_rng(seed)
    return [rng.integers(0, 2, size=n, dtype=np.int64) for _ in range(count)]


# ---------------------------------------------------------------------------
# per-tree calibration

@dataclass(frozen=True)
class TreeCalibration:
    n_leaves: int
    L: int
    M: int
    evolution_time: float
    tail_precision: float
    reflections_phase_threshold: float
    coined_long_re_threshold: float
    coined_short_re_threshold: float
    scattering_threshold: float

    def to_dict(self) -> dict:
        return asdict(self)


def tree_geometry(cfg: ExperimentConfig, tree: NandTree) -> tuple[int, int, float]:
    """(tail length L, runway half-length M, evolution time) for one tree."""
    n = tree.leaf_count
    root = ceil_sqrt(n)
    L = max(1, int(math.ceil(cfg.l_multiplier * root)))
    M = int(math.ceil(cfg.m_multiplier * root))
    M += M % 2  # even runway length keeps the kernel pattern truncation clean
    return L, M, cfg.time_multiplier * math.sqrt(n)


def calibrate_tree(cfg: ExperimentConfig, tree: NandTree, needed: Iterable[str]) -> TreeCalibration:
    """Per-tree-shape decision constants, from canonical gapped instances."""
    needed = set(needed)
    n = tree.leaf_count
    L, M, t_evol = tree_geometry(cfg, tree)
    thr = dict(cfg.thresholds)

    tail_precision = float(thr.get("tail_precision", 0.0)) or 0.0
    if "tail" in needed and not tail_precision:
        gap = tail_mod.gap_report(
            tree, assignment_with_value(tree, 1), L, cfg.zero_tol, cfg.orth_tol
        ).min_relevant_gap
        if gap is None:
            raise ExperimentError("tail calibration instance shows no relevant gap")
        tail_precision = min(1.0 / (2.0 * math.sqrt(n)), gap / 2.0)

    refl_threshold = float(thr.get("reflections", 0.0)) or 0.0
    if "reflections" in needed and not refl_threshold:
        refl_threshold = refl_mod.calibrate_phase_threshold(tree, L)

    coined_long_thr = float(thr.get("coined_long", 0.0)) or 0.0
    if "coined-long" in needed and not coined_long_thr:
        coined_long_thr = coined_mod.calibrate_re_threshold(
            coined_mod.build_coined_walk(tree, [0] * n, L)
        )

    coined_short_thr = float(thr.get("coined_short", 0.0)) or 0.0
    if "coined-short" in needed and not coined_short_thr:
        coined_short_thr = coined_mod.calibrate_re_threshold(
            coined_mod.build_short_tail_walk(tree, [0] * n)
        )

    return TreeCalibration(
        n_leaves=n,
        L=L,
        M=M,
        evolution_time=t_evol,
        tail_precision=tail_precision,
        reflections_phase_threshold=refl_threshold,
        coined_long_re_threshold=coined_long_thr,
        coined_short_re_threshold=coined_short_thr,
        scattering_threshold=float(thr.get("scattering", SCATTERING_THRESHOLD)),
    )


def _check_dimensions(cfg: ExperimentConfig, tree: NandTree) -> None:
    n = tree.leaf_count
    L, M, _ = tree_geometry(cfg, tree)
    algs = cfg.algorithms()
    dims = {}
    n_tree = len(tree.nodes)
    if "scattering" in algs:
        dims["scattering"] = (2 * M + 1) + n_tree + n
    if "tail" in algs or "reflections" in algs:
        dims["tail"] = n_tree + 2 * L + 1 + n
    if "coined-long" in algs:
        dims["coined-long"] = 2 * ((n_tree - 1) + 2 * (L + 1))
    for name, dim in dims.items():
        if dim > DIMENSION_CAP:
            raise ExperimentError(
                f"{name} instance dimension {dim} exceeds cap {DIMENSION_CAP}"
            )


# ---------------------------------------------------------------------------
# per-instance execution

def _run_instance(
    cfg: ExperimentConfig,
    tree: NandTree,
    depth: int | None,
    x: np.ndarray,
    cal: TreeCalibration,
    refl_base,
) -> dict:
    start = time.perf_counter()
    classical = evaluate(tree, x)
    record: dict = {
        "depth": depth if depth is not None else tree.depth,
        "n_leaves": tree.leaf_count,
        "assignment": "".join(str(int(b)) for b in x),
        "classical_value": classical,
        "decisions": {},
        "diagnostics": {},
        "queries": {},
    }
    qpe_queries = cfg.qpe_shots * (2 ** cfg.qpe_bits - 1)
    algs = cfg.algorithms()

    if "classical" in algs:
        record["queries"]["classical"] = tree.leaf_count
        record["diagnostics"]["classical"] = {
            "expected_randomized_queries": randomized_query_cost(tree, x)
        }

    if "scattering" in algs:
        ledger = QueryLedger()
        split, dec = scat_mod.run_scattering_walk(
            tree,
            x,
            t=cal.evolution_time,
            M=cal.M,
            threshold=cal.scattering_threshold,
            ledger=ledger,
        )
        record["decisions"]["scattering"] = dec
        record["queries"]["scattering"] = ledger.count
        record["diagnostics"]["scattering"] = {
            "prob_left": split.prob_left,
            "prob_tree": split.prob_tree,
            "prob_right": split.prob_right,
            "threshold": cal.scattering_threshold,
            "evolution_time": cal.evolution_time,
        }

    if "tail" in algs:
        ledger = QueryLedger()
        dec, estimate = tail_mod.decide_tail(
            tree,
            x,
            L=cal.L,
            precision=cal.tail_precision,
            ancilla_bits=cfg.qpe_bits,
            shots=cfg.qpe_shots,
            seed=cfg.seed,
            ledger=ledger,
        )
        rep = tail_mod.gap_report(tree, x, cal.L, cfg.zero_tol, cfg.orth_tol)
        record["decisions"]["tail"] = dec
        record["queries"]["tail"] = ledger.count
        record["diagnostics"]["tail"] = {
            "modal_phase": estimate.modal_phase(),
            "precision": cal.tail_precision,
            "zero_weight": rep.zero_weight,
            "min_relevant_gap": rep.min_relevant_gap,
        }

    if "reflections" in algs:
        pair = refl_mod.build_reflections(tree, x, cal.L, base=refl_base)
        dec, rep = refl_mod.decide_reflections(
            pair,
            phase_threshold=cal.reflections_phase_threshold,
            orth_tol=cfg.orth_tol,
        )
        eye = np.eye(pair.graph.n_vertices)
        record["decisions"]["reflections"] = dec
        record["queries"]["reflections"] = qpe_queries
        record["diagnostics"]["reflections"] = {
            "zero_weight": rep.zero_weight,
            "min_relevant_phase": rep.min_relevant_gap,
            "phase_threshold": cal.reflections_phase_threshold,
            "u_tree_involution_dev": float(np.abs(pair.u_tree @ pair.u_tree - eye).max()),
            "u_unitarity_dev": float(np.abs(pair.u.conj().T @ pair.u - eye).max()),
        }

    if "coined-long" in algs:
        walk = coined_mod.build_coined_walk(tree, x, cal.L)
        dec, rep = coined_mod.decide_coined(
            walk, re_threshold=cal.coined_long_re_threshold, orth_tol=cfg.orth_tol
        )
        record["decisions"]["coined-long"] = dec
        record["queries"]["coined-long"] = qpe_queries
        record["diagnostics"]["coined-long"] = {
            "zero_weight": rep.zero_weight,
            "min_relevant_re": rep.min_relevant_gap,
            "re_threshold": cal.coined_long_re_threshold,
        }

    if "coined-short" in algs:
        walk = coined_mod.build_short_tail_walk(tree, x)
        dec, rep = coined_mod.decide_coined(
            walk, re_threshold=cal.coined_short_re_threshold, orth_tol=cfg.orth_tol
        )
        record["decisions"]["coined-short"] = dec
        record["queries"]["coined-short"] = qpe_queries
        record["diagnostics"]["coined-short"] = {
            "zero_weight": rep.zero_weight,
            "min_relevant_re": rep.min_relevant_gap,
            "re_threshold": cal.coined_short_re_threshold,
        }

    record["agreement"] = all(d == classical for d in record["decisions"].values())
    record["wall_time_s"] = time.perf_counter() - start
    return record


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute the configured sweep and return (and optionally write) the report."""
    t_start = time.perf_counter()
    trees = resolve_trees(cfg.tree)
    algs = cfg.algorithms()
    chash = config_hash(cfg)

    instances: list[dict] = []
    calibrations: dict[str, dict] = {}
    for depth, tree in trees:
        _check_dimensions(cfg, tree)
        cal = calibrate_tree(cfg, tree, algs)
        calibrations[str(depth if depth is not None else tree.depth)] = cal.to_dict()
        refl_base = (
            refl_mod.tree_reflection(tree, cal.L) if "reflections" in algs else None
        )
        for x in resolve_assignments(cfg.assignment, tree, cfg.seed):
            record = _run_instance(cfg, tree, depth, x, cal, refl_base)
            record["config_hash"] = chash
            instances.append(record)

    aggregate: dict = {
        "agreement_rate": (
            float(np.mean([r["agreement"] for r in instances])) if instances else 1.0
        ),
        "calibration": calibrations,
        "regressions": {},
    }
    _add_regressions(cfg, instances, aggregate)
    aggregate["total_wall_time_s"] = time.perf_counter() - t_start

    report = {
        "schema": REPORT_SCHEMA,
        "config": cfg.to_dict(),
        "config_hash": chash,
        "instances": instances,
        "aggregate": aggregate,
    }
    if cfg.out:
        write_report(report, cfg.out)
    return report


def _add_regressions(cfg: ExperimentConfig, instances: list[dict], aggregate: dict) -> None:
    """Power-law fits across a depth sweep (one instance per depth)."""
    by_depth: dict[int, dict] = {}
    for r in instances:
        by_depth.setdefault(r["depth"], r)
    if len(by_depth) < 3 or any(
        len([r for r in instances if r["depth"] == d]) != 1 for d in by_depth
    ):
        return
    rows = [by_depth[d] for d in sorted(by_depth)]

    def points(path: tuple[str, ...]) -> list[tuple[float, float]] | None:
        pts = []
        for r in rows:
            v: object = r
            for key in path:
                if not isinstance(v, dict) or key not in v:
                    return None
                v = v[key]
            if v is None or (isinstance(v, float) and v <= 0):
                return None
            pts.append((float(r["n_leaves"]), float(v)))
        return pts

    for name, path in (
        ("classical_cost", ("diagnostics", "classical", "expected_randomized_queries")),
        ("tail_gap", ("diagnostics", "tail", "min_relevant_gap")),
        ("coined_re_gap", ("diagnostics", "coined-long", "min_relevant_re")),
    ):
        pts = points(path)
        if pts is not None:
            aggregate["regressions"][name] = asdict(fit_power_law(pts))


# ---------------------------------------------------------------------------
# serialization

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def report_json(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report_json(report))


CSV_COLUMNS = (
    "depth",
    "n_leaves",
    "assignment",
    "classical_value",
    "algorithm",
    "decision",
    "agreement",
    "queries",
    "zero_weight",
    "min_gap",
    "prob_right",
    "modal_phase",
    "expected_randomized_queries",
)


def report_to_csv(report: dict) -> str:
    """Plot-ready per-(instance, algorithm) projection of the numeric table."""
    lines = [",".join(CSV_COLUMNS)]
    for r in report["instances"]:
        algs = sorted(set(r["decisions"]) | set(r["diagnostics"]))
        for alg in algs:
            diag = r["diagnostics"].get(alg, {})
            row = {
                "depth": r["depth"],
                "n_leaves": r["n_leaves"],
                "assignment": r["assignment"],
                "classical_value": r["classical_value"],
                "algorithm": alg,
                "decision": r["decisions"].get(alg, ""),
                "agreement": int(r["agreement"]),
                "queries": r["queries"].get(alg, ""),
                "zero_weight": diag.get("zero_weight", ""),
                "min_gap": diag.get("min_relevant_gap", diag.get("min_relevant_re", diag.get("min_relevant_phase", ""))),
                "prob_right": diag.get("prob_right", ""),
                "modal_phase": diag.get("modal_phase", ""),
                "expected_randomized_queries": diag.get("expected_randomized_queries", ""),
            }
            lines.append(",".join("" if row[c] is None else str(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"
