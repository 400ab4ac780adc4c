from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from energy.bounds import Theorem2Bound
from energy.dirichlet import dirichlet_energy
from graph.core import NormalizedAdjacency
from helper import DEFAULT_REL_TOL, write_csv
from linalg.dense import effective_rank, numerical_rank

ENERGY_COLUMNS = ["layer", "energy", "rank", "effective_rank"]


@dataclass
class EnergyReport:
    """Per-layer energy, numerical rank and effective rank of a stack of embeddings."""
    per_layer_energy: List[float] = field(default_factory=list)
    per_layer_rank: List[int] = field(default_factory=list)
    per_layer_effective_rank: List[float] = field(default_factory=list)
    bound: Optional[Theorem2Bound] = None

    def record(self, adj: NormalizedAdjacency, h: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> None:
        # tiny negative values are roundoff on a PSD form
        self.per_layer_energy.append(max(dirichlet_energy(adj, h), 0.0))
        self.per_layer_rank.append(numerical_rank(h, rel_tol))
        self.per_layer_effective_rank.append(effective_rank(h))

    def __len__(self) -> int:
        return len(self.per_layer_energy)

    @property
    def energy_ratio(self) -> float:
        """Final over initial energy (inf when the input had zero energy)."""
        first, last = self.per_layer_energy[0], self.per_layer_energy[-1]
        return last / first if first > 0 else float("inf")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "layer": np.arange(len(self), dtype=np.int64),
            "energy": self.per_layer_energy,
            "rank": self.per_layer_rank,
            "effective_rank": self.per_layer_effective_rank,
        }, columns=ENERGY_COLUMNS)

    def to_csv(self, path):
        return write_csv(self.to_frame(), path)
