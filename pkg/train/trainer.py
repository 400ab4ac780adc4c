"""
Full-batch node classification: early stopping on validation accuracy, best-epoch
restore, trace-alignment audit and multi-seed summaries.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import time

import numpy as np
import pandas as pd
from tqdm import tqdm

from database.bundle import DatasetBundle
from database.splits import SplitMasks, stratified_masks
from energy.dirichlet import dirichlet_energy, trace_alignment
from graph.core import NormalizedAdjacency, normalize
from helper import EmptyMask, make_rng
from model.model import AIRCModel, ForwardResult, ModelParams, forward_model
from residual.pagerank import pagerank
from residual.strengths import (
    ResidualStrengths,
    centrality_correlation,
    pagerank_lambda,
    static_lambda,
)
from train.config import ResidualStrategy, TrainConfig
from train.optim import AdamState, adam_step

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["epoch", "train_acc", "val_acc", "test_acc", "loss", "energy_last_layer"]
SUMMARY_COLUMNS = ["seed", "best_epoch", "test_acc"]


@dataclass
class Metrics:
    """Per-epoch accuracies (epoch 0 is the untrained model) plus the best-validation outcome."""
    epochs: List[int] = field(default_factory=list)
    train_acc: List[float] = field(default_factory=list)
    val_acc: List[float] = field(default_factory=list)
    test_acc: List[float] = field(default_factory=list)
    loss: List[float] = field(default_factory=list)
    energy_last_layer: List[float] = field(default_factory=list)
    epoch_seconds: List[float] = field(default_factory=list)
    alignment_log: List[Tuple[int, List[float]]] = field(default_factory=list)
    best_epoch: int = 0
    best_val_acc: float = 0.0
    final_test_acc: float = 0.0
    parameter_count: int = 0
    seed: int = 0
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    centrality_correlation: Optional[float] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "epoch": np.asarray(self.epochs, dtype=np.int64),
            "train_acc": self.train_acc,
            "val_acc": self.val_acc,
            "test_acc": self.test_acc,
            "loss": self.loss,
            "energy_last_layer": self.energy_last_layer,
        }, columns=METRIC_COLUMNS)

    @property
    def alignment_nonnegative(self) -> bool:
        return all(a >= 0.0 for _, values in self.alignment_log for a in values)


def accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Argmax accuracy on the masked rows; ties go to the lowest class index."""
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        raise EmptyMask("accuracy mask selects no nodes")
    return float(np.mean(np.argmax(logits[rows], axis=1) == labels[rows]))


def evaluate(model: AIRCModel, adj: NormalizedAdjacency, bundle: DatasetBundle, mask: np.ndarray,
             params: Optional[ModelParams] = None) -> float:
    result = forward_model(model, adj, bundle.features, training=False, params=params)
    return accuracy(result.logits, bundle.labels, mask)


def residual_strengths(config: TrainConfig, bundle: DatasetBundle) -> Optional[ResidualStrengths]:
    """Fixed Λ for the PageRank and static strategies; None otherwise."""
    strategy = config.residual_strategy
    if strategy is ResidualStrategy.PAGERANK:
        scores = pagerank(bundle.graph, damping=config.damping)
        return pagerank_lambda(scores, config.top_fraction, config.lambda_max, config.lambda_min)
    if strategy is ResidualStrategy.STATIC:
        return static_lambda(config.beta, bundle.num_nodes)
    return None


def layer_alignments(result: ForwardResult, adj: NormalizedAdjacency) -> List[float]:
    return [trace_alignment(adj, branch, residual) for branch, residual in result.branches]


def _ensure_masks(config: TrainConfig, bundle: DatasetBundle) -> SplitMasks:
    if bundle.masks is not None:
        return bundle.masks
    return stratified_masks(bundle.labels, config.seed)


def train(config: TrainConfig, bundle: DatasetBundle, masks: Optional[SplitMasks] = None,
          strengths: Optional[ResidualStrengths] = None) -> Metrics:
    """
    Trains for at most config.epochs epochs, stopping after `patience` epochs without a
    better validation accuracy, then restores the best-validation parameters.
    Args:
        masks: overrides the bundle's masks (or the generated split)
        strengths: precomputed fixed Λ, shared across seeds
    """
    masks = masks or _ensure_masks(config, bundle)
    adj = normalize(bundle.graph, config.normalization_mode)
    rng = make_rng(config.seed)
    if strengths is None:
        strengths = residual_strengths(config, bundle)
    model = AIRCModel(config, bundle.feature_dim, bundle.num_classes, rng, strengths)
    labels = bundle.labels
    audit = model.uses_residual

    metrics = Metrics(parameter_count=model.parameter_count(), seed=config.seed)

    def record(epoch: int, loss: Optional[float], seconds: float) -> float:
        result = forward_model(model, adj, bundle.features, training=False, audit=audit and epoch % config.log_every == 0)
        if loss is None:
            loss = float(result.tape.masked_nll(result.output, labels, masks.train).value)
        val = accuracy(result.logits, labels, masks.val)
        metrics.epochs.append(epoch)
        metrics.train_acc.append(accuracy(result.logits, labels, masks.train))
        metrics.val_acc.append(val)
        metrics.test_acc.append(accuracy(result.logits, labels, masks.test))
        metrics.loss.append(loss)
        metrics.energy_last_layer.append(dirichlet_energy(adj, result.embeddings[-1]))
        metrics.epoch_seconds.append(seconds)
        if result.branches:
            alignments = layer_alignments(result, adj)
            metrics.alignment_log.append((epoch, alignments))
            logger.info(f"epoch {epoch}: trace alignment per layer {np.round(alignments, 6).tolist()}")
        return val

    best_val = record(0, None, 0.0)
    best_params, best_epoch, wait = model.params, 0, 0
    state = AdamState()
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        result = forward_model(model, adj, bundle.features, training=True, rng=rng)
        loss = result.tape.masked_nll(result.output, labels, masks.train)
        grads = result.tape.backward(loss)
        model.params, state = adam_step(model.params, grads, state, config.lr,
                                        weight_decay=config.weight_decay)
        val = record(epoch, float(loss.value), time.perf_counter() - start)
        if val > best_val:
            best_val, best_params, best_epoch, wait = val, model.params, epoch, 0
        else:
            wait += 1
            if wait >= config.patience:
                logger.debug(f"early stop at epoch {epoch}, best epoch {best_epoch}")
                break

    model.params = best_params
    metrics.best_epoch = best_epoch
    metrics.best_val_acc = best_val
    metrics.final_test_acc = evaluate(model, adj, bundle, masks.test)

    final = model.current_strengths(bundle.features)
    if final is not None:
        metrics.lambda_min, metrics.lambda_max = final.lambda_min, final.lambda_max
        if model.strategy is ResidualStrategy.LEARNABLE:
            metrics.centrality_correlation = centrality_correlation(final, pagerank(bundle.graph, config.damping))
    logger.info(
        f"seed {config.seed}: best epoch {best_epoch}, val {best_val:.4f}, test {metrics.final_test_acc:.4f}, "
        f"{metrics.parameter_count} parameters"
    )
    return metrics


def summarize(runs: Sequence[Metrics]) -> pd.DataFrame:
    """One `seed,best_epoch,test_acc` row per run, then mean and std rows."""
    frame = pd.DataFrame({
        "seed": [str(m.seed) for m in runs],
        "best_epoch": [str(m.best_epoch) for m in runs],
        "test_acc": [m.final_test_acc for m in runs],
    }, columns=SUMMARY_COLUMNS)
    scores = np.asarray([m.final_test_acc for m in runs])
    tail = pd.DataFrame({
        "seed": ["mean", "std"],
        "best_epoch": ["", ""],
        "test_acc": [float(scores.mean()), float(scores.std())],
    }, columns=SUMMARY_COLUMNS)
    return pd.concat([frame, tail], ignore_index=True)


def run_seeds(config: TrainConfig, bundle: DatasetBundle, seeds: Sequence[int],
              progress: bool = True) -> Tuple[List[Metrics], pd.DataFrame]:
    """Same split and same fixed Λ for every seed; only the initialization and dropout change."""
    masks = _ensure_masks(config, bundle)
    strengths = residual_strengths(config, bundle)
    runs = [
        train(config.with_overrides(seed=seed), bundle, masks=masks, strengths=strengths)
        for seed in tqdm(seeds, desc=f"{bundle.name}/{config.strategy}", disable=not progress)
    ]
    return runs, summarize(runs)


def mean_std(runs: Sequence[Metrics]) -> Dict[str, float]:
    scores = np.asarray([m.final_test_acc for m in runs])
    return {"mean": float(scores.mean()), "std": float(scores.std())}
