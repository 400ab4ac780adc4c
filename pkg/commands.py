"""
One cmd_* function per command. Each takes a resolved RunConfig, writes CSV files
under cfg.out and returns an exit code.
"""

from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional
import json
import logging
import time

import numpy as np
import pandas as pd
from sklearn.model_selection import ParameterGrid

from database.bundle import DatasetBundle, load_bundle
from database.setup_dataset import sbm_bundle, setup_dataset
from graph.core import normalize
from graph.sbm import SbmParams, random_edge_graph
from helper import EXIT_CODES, OverwriteRefused, UsageError, make_rng, write_csv
from model.depth import DepthMode, DepthTrace, run_depth_experiment
from model.propagate import LayerParams, airc_layer_forward
from rails.output import (
    CheckType,
    OutputRails,
    activation_energy_suite,
    composed_bound_suite,
    format_issues,
    out_of_space_counterexample,
    propagation_bound_suite,
    random_instance,
    superadditivity_suite,
    weight_bound_suite,
)
from residual.pagerank import pagerank
from residual.strengths import learnable_lambda, pagerank_lambda
from train.config import TRAIN_KEYS, TrainConfig
from train.trainer import run_seeds

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Flat run configuration: every key can come from the JSON file or a --kebab-case flag."""
    seed: int = 0
    out: str = "out"
    force: bool = False
    dataset: Optional[str] = None

    # synthetic graph
    sbm_n: int = 200
    sbm_p: float = 0.2
    sbm_q: float = 0.05
    mu1: float = -0.5
    mu2: float = 0.5
    std: float = 2.0
    dim: int = 2

    # training (mirrors TrainConfig)
    lr: float = 0.01
    weight_decay: float = 1e-4
    hidden_dim: int = 64
    num_layers: int = 2
    dropout: float = 0.4
    activation: str = "relu"
    slope: float = 0.2
    strategy: str = "learnable"
    top_fraction: float = 0.1
    lambda_max: float = 0.7
    lambda_min: float = 0.3
    beta: float = 0.5
    damping: float = 0.85
    normalization: str = "augmented"
    epochs: int = 1000
    patience: int = 100
    log_every: int = 10
    seeds: int = 10

    # oversmoothing
    depth: int = 16
    depth_activation: str = "leaky_relu"
    gain: float = 1.0
    snapshot: bool = False

    # depth sweep
    min_depth: int = 2
    max_depth: int = 8
    variants: str = "learnable,pagerank,gcn"

    # limit check
    instances: int = 50
    max_nodes: int = 64
    max_dim: int = 8
    tol: float = 1e-8
    inject_lambda: Optional[float] = None

    # bench
    bench_nodes: int = 2000
    bench_edges: str = "100000,200000,400000"
    bench_dims: str = "16,32"
    repeats: int = 5

    # theory
    theory_count: int = 500
    energy_count: int = 10_000

    # grid: {"key": [values, ...]} expanded with ParameterGrid
    grid: Dict[str, List[Any]] = field(default_factory=dict)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def train_config(self, **overrides) -> TrainConfig:
        values = {key: getattr(self, key) for key in TRAIN_KEYS}
        values.update(overrides)
        return TrainConfig(**values)

    def sbm_params(self) -> SbmParams:
        return SbmParams(n=self.sbm_n, p=self.sbm_p, q=self.sbm_q, mu1=self.mu1, mu2=self.mu2,
                         std=self.std, dim=self.dim, seed=self.seed)


RUN_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, value):
    slot = RUN_FIELDS[key]
    default = slot.default_factory() if slot.default is MISSING else slot.default
    if isinstance(default, dict) and value is not None and not isinstance(value, dict):
        raise UsageError(f"config key {key!r} expects a JSON object, got {value!r}")
    if value is None or isinstance(default, (dict, list)) or default is None:
        return value
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ValueError(value)
            return value
        if isinstance(default, int) and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return type(default)(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r} expects {type(default).__name__}, got {value!r}")


def resolve_config(file_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """ Defaults, then the flat JSON object in file_path, then explicit overrides (flags).
        Raises:
            UsageError: unknown key, bad type or unreadable file
    """
    values: Dict[str, Any] = {}
    if file_path is not None:
        try:
            loaded = json.loads(Path(file_path).read_text(encoding="utf-8"))
        except OSError as e:
            raise UsageError(f"Could not read config {file_path}: {e}")
        except json.JSONDecodeError as e:
            raise UsageError(f"{file_path}:{e.lineno}: invalid JSON ({e.msg})")
        if not isinstance(loaded, dict):
            raise UsageError(f"{file_path} must hold a flat JSON object")
        values.update(loaded)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    unknown = sorted(set(values) - set(RUN_FIELDS))
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = RunConfig(**{key: _coerce(key, value) for key, value in values.items()})
    cfg.train_config()
    return cfg


def _int_list(text: str, key: str) -> List[int]:
    try:
        items = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"{key} must be a comma-separated list of integers, got {text!r}")
    if not items:
        raise UsageError(f"{key} is empty")
    return items


def _prepare_out(cfg: RunConfig, names: List[str]) -> Path:
    out = cfg.out_dir
    existing = [name for name in names if (out / name).exists()]
    if existing and not cfg.force:
        raise OverwriteRefused(f"{out / existing[0]} exists (use --force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _bundle(cfg: RunConfig) -> DatasetBundle:
    if cfg.dataset:
        return load_bundle(cfg.dataset)
    return sbm_bundle(cfg.sbm_params())


def _print_table(rows: List[str], passed: int, total: int) -> None:
    print("\n".join(rows))
    print(f"\nPassed: {passed}/{total}")


# ============================================
# OVERSMOOTHING
# ============================================

def _write_snapshots(trace: DepthTrace, out: Path, variant: str) -> None:
    for layer, h in enumerate(trace.embeddings):
        write_csv(pd.DataFrame(h), out / "snapshots" / variant / f"layer_{layer:03d}.csv", header=False)


def cmd_oversmoothing(cfg: RunConfig) -> int:
    """
    Energy and rank per layer for the linear dynamics, GCN and both adaptive IRC
    strategies on one SBM sample, plus the energy-bound audit.
    """
    variants = ["linear", "gcn", "airc", "airc_learnable"]
    out = _prepare_out(cfg, [f"{v}.csv" for v in variants] + ["summary.csv"])
    bundle = sbm_bundle(cfg.sbm_params())
    adj = normalize(bundle.graph, cfg.normalization)
    h0 = bundle.features
    scores = pagerank(bundle.graph, damping=cfg.damping)
    strengths = {
        "airc": pagerank_lambda(scores, cfg.top_fraction, cfg.lambda_max, cfg.lambda_min),
        # learnable λ at a random initialization of w_att
        "airc_learnable": learnable_lambda(h0, make_rng(cfg.seed + 1).standard_normal(h0.shape[1])),
    }

    rails = OutputRails()
    rows, summary, failures = [], [], 0
    for variant in variants:
        mode = {"linear": DepthMode.LINEAR, "gcn": DepthMode.GCN}.get(variant, DepthMode.AIRC)
        lam = strengths.get(variant, strengths["airc"])
        trace = run_depth_experiment(adj, h0, cfg.depth, mode, lam=lam, activation=cfg.depth_activation,
                                     slope=cfg.slope, seed=cfg.seed, gain=cfg.gain, snapshot=cfg.snapshot)
        trace.energy_report.to_csv(out / f"{variant}.csv")
        if cfg.snapshot:
            _write_snapshots(trace, out, variant)

        report = trace.energy_report
        check = rails.check_energy_bound(trace) if mode is DepthMode.AIRC else None
        if check is not None and not check.passed:
            failures += 1
        summary.append({
            "variant": variant,
            "initial_energy": report.per_layer_energy[0],
            "final_energy": report.per_layer_energy[-1],
            "energy_ratio": report.energy_ratio,
            "final_rank": report.per_layer_rank[-1],
            "bound": report.bound.bound_value if report.bound else np.nan,
            "bound_applicable": int(trace.alignment_nonnegative) if report.bound else 0,
        })
        mark = "✅ PASS" if check is None or check.passed else "❌ FAIL"
        detail = "; ".join(check.issues) if check is not None and check.issues else ""
        rows.append(f"{mark} | {variant} | energy ratio {report.energy_ratio:.3e} {detail}".rstrip())

    write_csv(pd.DataFrame(summary), out / "summary.csv")
    _print_table(rows, len(variants) - failures, len(variants))
    return EXIT_CODES.VERIFICATION_FAILED.value if failures else EXIT_CODES.SUCCESS.value


# ============================================
# TRAINING
# ============================================

def _seed_list(cfg: RunConfig) -> List[int]:
    if cfg.seeds < 1:
        raise UsageError(f"seeds must be >= 1, got {cfg.seeds}")
    return [cfg.seed + k for k in range(cfg.seeds)]


def cmd_train(cfg: RunConfig) -> int:
    """Runs cfg.seeds seeds; per-seed metrics CSVs plus a seed/best_epoch/test_acc summary."""
    seeds = _seed_list(cfg)
    out = _prepare_out(cfg, ["summary.csv"] + [f"metrics_seed{s}.csv" for s in seeds])
    bundle = _bundle(cfg)
    runs, summary = run_seeds(cfg.train_config(), bundle, seeds)
    for metrics in runs:
        write_csv(metrics.to_frame(), out / f"metrics_seed{metrics.seed}.csv")
    write_csv(summary, out / "summary.csv")
    scores = np.array([m.final_test_acc for m in runs])
    print(f"{bundle.name} | {cfg.strategy} | test accuracy {scores.mean():.4f} ± {scores.std():.4f} "
          f"over {len(runs)} seeds | {runs[0].parameter_count} parameters")
    return EXIT_CODES.SUCCESS.value


def cmd_depth_sweep(cfg: RunConfig) -> int:
    """Test accuracy against depth for every variant; one row per (variant, depth)."""
    if not 1 <= cfg.min_depth <= cfg.max_depth:
        raise UsageError(f"need 1 <= min_depth <= max_depth, got {cfg.min_depth}, {cfg.max_depth}")
    variants = [v.strip() for v in cfg.variants.split(",") if v.strip()]
    if not variants:
        raise UsageError("variants is empty")
    out = _prepare_out(cfg, ["depth_sweep.csv"])
    bundle = _bundle(cfg)
    seeds = _seed_list(cfg)
    rows = []
    for variant in variants:
        for depth in range(cfg.min_depth, cfg.max_depth + 1):
            config = cfg.train_config(strategy=variant, num_layers=depth)
            runs, _ = run_seeds(config, bundle, seeds, progress=False)
            scores = np.array([m.final_test_acc for m in runs])
            rows.append({"variant": variant, "depth": depth,
                         "mean_test_acc": scores.mean(), "std_test_acc": scores.std()})
            logger.info(f"{variant} depth {depth}: {scores.mean():.4f} ± {scores.std():.4f}")
    write_csv(pd.DataFrame(rows), out / "depth_sweep.csv")
    return EXIT_CODES.SUCCESS.value


def cmd_grid(cfg: RunConfig) -> int:
    """Every combination of cfg.grid, each trained over cfg.seeds seeds."""
    if not cfg.grid:
        raise UsageError("grid is empty; give a JSON object of value lists")
    unknown = sorted(set(cfg.grid) - TRAIN_KEYS)
    if unknown:
        raise UsageError(f"grid keys must be training keys, got: {', '.join(unknown)}")
    out = _prepare_out(cfg, ["grid.csv"])
    bundle = _bundle(cfg)
    seeds = _seed_list(cfg)
    rows = []
    for combo in ParameterGrid(cfg.grid):
        runs, _ = run_seeds(cfg.train_config(**combo), bundle, seeds, progress=False)
        scores = np.array([m.final_test_acc for m in runs])
        rows.append({**combo, "mean_test_acc": scores.mean(), "std_test_acc": scores.std()})
    write_csv(pd.DataFrame(rows), out / "grid.csv")
    return EXIT_CODES.SUCCESS.value


# ============================================
# VERIFICATION
# ============================================

def cmd_limit_check(cfg: RunConfig) -> int:
    """
    Random instances of the simplified dynamics: unrolled limit against the closed form,
    rank preservation and the fixed-point residual.
    """
    if cfg.instances < 1:
        raise UsageError(f"instances must be >= 1, got {cfg.instances}")
    out = _prepare_out(cfg, ["limit_check.csv"])
    rng = make_rng(cfg.seed)
    rails = OutputRails(tol=cfg.tol)
    rows, failed = [], 0
    for k in range(cfg.instances):
        adj, lam, h0 = random_instance(rng, cfg.max_nodes, cfg.max_dim)
        if k == 0 and cfg.inject_lambda is not None:
            lam[0] = cfg.inject_lambda
        results = rails.check_limit(lam, adj, h0)
        ok = all(r.passed for r in results.values())
        failed += not ok
        if not ok:
            print(f"instance {k} (n={adj.n}, d={h0.shape[1]}):\n{format_issues(results)}")
        limit = results[CheckType.LIMIT_AGREEMENT]
        rows.append({
            "instance": k, "n": adj.n, "d": h0.shape[1],
            "relative_error": limit.metrics.get("relative_error", np.nan),
            "steps": limit.metrics.get("steps", -1),
            "rank": results[CheckType.RANK_PRESERVATION].metrics.get("rank", -1),
            "passed": int(ok),
        })
    write_csv(pd.DataFrame(rows), out / "limit_check.csv")
    print(f"limit check at tol {cfg.tol:g}: {cfg.instances - failed}/{cfg.instances} instances passed")
    return EXIT_CODES.VERIFICATION_FAILED.value if failed else EXIT_CODES.SUCCESS.value


def cmd_theory(cfg: RunConfig) -> int:
    """Randomized property suites for the norm and energy bounds."""
    out = _prepare_out(cfg, ["theory.csv"])
    results = {
        CheckType.ACTIVATION_ENERGY: activation_energy_suite(cfg.energy_count, cfg.seed),
        CheckType.WEIGHT_BOUND: weight_bound_suite(cfg.theory_count, cfg.seed),
        CheckType.PROPAGATION_BOUND: propagation_bound_suite(cfg.theory_count, cfg.seed),
        CheckType.COMPOSED_BOUND: composed_bound_suite(cfg.theory_count, cfg.seed),
        CheckType.SUPERADDITIVITY: superadditivity_suite(cfg.theory_count, cfg.seed),
        CheckType.OUT_OF_SPACE: out_of_space_counterexample(),
    }
    audit = composed_bound_suite(cfg.theory_count, cfg.seed, static=False)
    logger.info(f"composed bound with per-node Λ (audit only): {audit.metrics}")
    print(format_issues(results))
    rows = [{"check": kind.value, "passed": int(r.passed), **r.metrics} for kind, r in results.items()]
    write_csv(pd.DataFrame(rows), out / "theory.csv")
    failed = sum(not r.passed for r in results.values())
    return EXIT_CODES.VERIFICATION_FAILED.value if failed else EXIT_CODES.SUCCESS.value


# ============================================
# UTILITIES
# ============================================

def cmd_bench(cfg: RunConfig) -> int:
    """Median wall-clock of one IRC layer forward over a grid of edge counts and widths."""
    edges = _int_list(cfg.bench_edges, "bench_edges")
    dims = _int_list(cfg.bench_dims, "bench_dims")
    if cfg.repeats < 1:
        raise UsageError(f"repeats must be >= 1, got {cfg.repeats}")
    out = _prepare_out(cfg, ["bench.csv"])
    rng = make_rng(cfg.seed)
    n = cfg.bench_nodes
    rows = []
    for num_edges in edges:
        adj = normalize(random_edge_graph(n, num_edges, cfg.seed))
        lam = rng.uniform(0.1, 0.9, size=n)
        for d in dims:
            h = rng.standard_normal((n, d))
            params = LayerParams(w=rng.standard_normal((d, d)), theta=rng.standard_normal((d, d)))
            airc_layer_forward(lam, adj, h, h, params)
            timings = []
            for _ in range(cfg.repeats):
                start = time.perf_counter()
                airc_layer_forward(lam, adj, h, h, params)
                timings.append(time.perf_counter() - start)
            rows.append({"n": n, "edges": num_edges, "dim": d, "seconds": float(np.median(timings))})
            logger.info(f"n={n} |E|={num_edges} d={d}: {rows[-1]['seconds'] * 1e3:.3f} ms")
    write_csv(pd.DataFrame(rows), out / "bench.csv")
    return EXIT_CODES.SUCCESS.value


def cmd_pagerank_lambda(cfg: RunConfig) -> int:
    """Dumps the PageRank-based Λ as node,lambda."""
    out = _prepare_out(cfg, ["lambda.csv"])
    bundle = _bundle(cfg)
    scores = pagerank(bundle.graph, damping=cfg.damping)
    strengths = pagerank_lambda(scores, cfg.top_fraction, cfg.lambda_max, cfg.lambda_min)
    strengths.to_csv(out / "lambda.csv")
    high = int(np.sum(strengths.values == cfg.lambda_max))
    print(f"{bundle.name}: {high} nodes at {cfg.lambda_max}, {bundle.num_nodes - high} at {cfg.lambda_min}")
    return EXIT_CODES.SUCCESS.value


def cmd_generate(cfg: RunConfig) -> int:
    """Writes an SBM bundle (with stratified masks) to cfg.out."""
    setup_dataset(cfg.out, cfg.sbm_params(), force=cfg.force)
    return EXIT_CODES.SUCCESS.value


COMMANDS = {
    "oversmoothing": cmd_oversmoothing,
    "train": cmd_train,
    "depth-sweep": cmd_depth_sweep,
    "limit-check": cmd_limit_check,
    "bench": cmd_bench,
    "pagerank-lambda": cmd_pagerank_lambda,
    "generate": cmd_generate,
    "theory": cmd_theory,
    "grid": cmd_grid,
}
