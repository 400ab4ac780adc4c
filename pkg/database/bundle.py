"""
Dataset bundles: a directory of plain-text files.

    edges.tsv     i<TAB>j<TAB>weight, one line per undirected edge, 0-indexed
    features.csv  n rows of d comma-separated reals
    labels.tsv    one integer class per line
    masks.tsv     optional, train<TAB>val<TAB>test as 0/1
    meta.txt      optional, name= / classes= / features= lines
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional
import logging
import re

import numpy as np
import pandas as pd

from database.splits import SplitMasks
from graph.core import Graph, build_graph, homophily_ratio
from helper import (
    InconsistentLengths,
    IoError,
    LabelOutOfRange,
    MissingFile,
    OverwriteRefused,
    ParseError,
    write_csv,
)

logger = logging.getLogger(__name__)

EDGES_FILE = "edges.tsv"
FEATURES_FILE = "features.csv"
LABELS_FILE = "labels.tsv"
MASKS_FILE = "masks.tsv"
META_FILE = "meta.txt"

_LINE_IN_ERROR = re.compile(r"line (\d+)")


@dataclass(frozen=True)
class DatasetBundle:
    name: str
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    masks: Optional[SplitMasks] = None
    empty_edge_set: bool = False

    def __post_init__(self):
        n = self.graph.n
        if self.features.ndim != 2 or self.features.shape[0] != n or self.labels.shape != (n,):
            raise InconsistentLengths(
                f"graph has {n} nodes, features {self.features.shape}, labels {self.labels.shape}"
            )
        if self.masks is not None and self.masks.n != n:
            raise InconsistentLengths(f"masks cover {self.masks.n} nodes, graph has {n}")
        bad = (self.labels < 0) | (self.labels >= self.num_classes)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise LabelOutOfRange(f"node {k} has label {self.labels[k]}, expected [0, {self.num_classes})")

    @property
    def num_nodes(self) -> int:
        return self.graph.n

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])


def _read_table(path: Path, sep: str) -> Optional[pd.DataFrame]:
    """All cells as strings; None for an empty file."""
    if not path.is_file():
        raise MissingFile(f"{path} not found")
    try:
        return pd.read_csv(path, sep=sep, header=None, dtype=str, keep_default_na=False,
                           skip_blank_lines=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        return None
    except pd.errors.ParserError as e:
        found = _LINE_IN_ERROR.search(str(e))
        raise ParseError(path, int(found.group(1)) if found else 0, "inconsistent number of fields")
    except (OSError, UnicodeDecodeError) as e:
        raise IoError(f"Could not read {path}: {e}")


def _to_float(cells: np.ndarray) -> np.ndarray:
    """Exact decimal-to-double conversion; unparsable cells become NaN."""
    cells = np.char.strip(cells.astype(str))
    try:
        return cells.astype(np.float64)
    except ValueError:
        frame = pd.DataFrame(cells)
        return frame.apply(lambda col: pd.to_numeric(col, errors="coerce")).to_numpy(dtype=np.float64)


def _numeric(table: pd.DataFrame, path: Path, columns: int, integral: bool = False) -> np.ndarray:
    if table.shape[1] != columns:
        raise ParseError(path, 1, f"expected {columns} fields per line, found {table.shape[1]}")
    values = _to_float(table.to_numpy())
    bad = ~np.isfinite(values).all(axis=1)
    if integral:
        bad |= np.any(values != np.round(values), axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        kind = "an integer" if integral else "a finite number"
        raise ParseError(path, k + 1, f"every field must be {kind}: {'|'.join(table.iloc[k])!r}")
    return values


def _read_meta(path: Path) -> Dict[str, str]:
    if not path.is_file():
        return {}
    meta = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise IoError(f"Could not read {path}: {e}")
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(path, number, "expected key=value")
        meta[key.strip()] = value.strip()
    return meta


def load_bundle(path) -> DatasetBundle:
    """
    Parses and validates a bundle directory. An edge listed in both directions must
    carry the same weight; a file without edges loads with empty_edge_set set.
    """
    root = Path(path)
    if not root.is_dir():
        raise MissingFile(f"bundle directory {root} not found")

    feature_table = _read_table(root / FEATURES_FILE, ",")
    if feature_table is None:
        raise ParseError(root / FEATURES_FILE, 1, "no feature rows")
    features = _numeric(feature_table, root / FEATURES_FILE, feature_table.shape[1])
    n = features.shape[0]

    label_table = _read_table(root / LABELS_FILE, "\t")
    if label_table is None:
        raise InconsistentLengths(f"{root / LABELS_FILE} is empty but there are {n} feature rows")
    labels = _numeric(label_table, root / LABELS_FILE, 1, integral=True)[:, 0].astype(np.int64)
    if labels.shape[0] != n:
        raise InconsistentLengths(f"{labels.shape[0]} labels for {n} feature rows")

    meta = _read_meta(root / META_FILE)
    num_classes = int(meta.get("classes", int(labels.max()) + 1 if n else 0))
    bad = (labels < 0) | (labels >= num_classes)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise LabelOutOfRange(f"{root / LABELS_FILE}:{k + 1}: label {labels[k]} outside [0, {num_classes})")
    if "features" in meta and int(meta["features"]) != features.shape[1]:
        raise InconsistentLengths(f"meta declares {meta['features']} features, file has {features.shape[1]}")

    edge_table = _read_table(root / EDGES_FILE, "\t")
    edges = np.zeros((0, 3)) if edge_table is None else _numeric(edge_table, root / EDGES_FILE, 3)
    graph = build_graph(edges, n)
    empty = graph.num_edges == 0
    if empty:
        logger.warning(f"bundle {root} has no edges")

    masks = None
    if (root / MASKS_FILE).is_file():
        mask_table = _read_table(root / MASKS_FILE, "\t")
        if mask_table is None:
            raise InconsistentLengths(f"{root / MASKS_FILE} is empty")
        flags = _numeric(mask_table, root / MASKS_FILE, 3, integral=True)
        if flags.shape[0] != n:
            raise InconsistentLengths(f"{flags.shape[0]} mask rows for {n} nodes")
        if np.any((flags != 0) & (flags != 1)):
            k = int(np.argmax(np.any((flags != 0) & (flags != 1), axis=1)))
            raise ParseError(root / MASKS_FILE, k + 1, "mask entries must be 0 or 1")
        masks = SplitMasks(*(flags[:, c].astype(bool) for c in range(3)))

    bundle = DatasetBundle(
        name=meta.get("name", root.name), graph=graph, features=features, labels=labels,
        num_classes=num_classes, masks=masks, empty_edge_set=empty,
    )
    homophily = "n/a" if empty else f"{homophily_ratio(graph, labels):.3f}"
    logger.info(f"loaded {bundle.name}: n={n}, edges={graph.num_edges}, d={bundle.feature_dim}, "
                f"C={num_classes}, H={homophily}")
    return bundle


def save_bundle(bundle: DatasetBundle, path, force: bool = False) -> Path:
    """Writes every file of the bundle; refuses a non-empty target unless force is set."""
    root = Path(path)
    if root.exists() and (not root.is_dir() or any(root.iterdir())) and not force:
        raise OverwriteRefused(f"{root} exists and is not empty (use force to overwrite)")
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"Could not create {root}: {e}")

    i, j, w = bundle.graph.undirected_edges()
    write_csv(pd.DataFrame({"i": i, "j": j, "w": w}), root / EDGES_FILE, header=False, sep="\t")
    write_csv(pd.DataFrame(bundle.features), root / FEATURES_FILE, header=False)
    write_csv(pd.DataFrame({"label": bundle.labels}), root / LABELS_FILE, header=False)
    if bundle.masks is not None:
        flags = pd.DataFrame({
            name: getattr(bundle.masks, name).astype(np.int64) for name in ("train", "val", "test")
        })
        write_csv(flags, root / MASKS_FILE, header=False, sep="\t")
    elif (root / MASKS_FILE).exists():
        (root / MASKS_FILE).unlink()

    meta = f"name={bundle.name}\nclasses={bundle.num_classes}\nfeatures={bundle.feature_dim}\n"
    try:
        (root / META_FILE).write_text(meta, encoding="utf-8")
    except OSError as e:
        raise IoError(f"Could not write {root / META_FILE}: {e}")
    return root
