from dataclasses import dataclass
import logging

import numpy as np
from sklearn.model_selection import train_test_split

from helper import InconsistentLengths, MaskOverlap, UsageError

logger = logging.getLogger(__name__)

SPLIT_FRACTIONS = (0.6, 0.2, 0.2)


@dataclass(frozen=True)
class SplitMasks:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        masks = [np.asarray(m, dtype=bool) for m in (self.train, self.val, self.test)]
        if len({m.shape for m in masks}) != 1 or masks[0].ndim != 1:
            raise InconsistentLengths("train/val/test masks must be 1-D with equal lengths")
        overlap = (masks[0] & masks[1]) | (masks[0] & masks[2]) | (masks[1] & masks[2])
        if np.any(overlap):
            raise MaskOverlap(f"node {int(np.argmax(overlap))} is in more than one split")
        for name, mask in zip(("train", "val", "test"), masks):
            mask.setflags(write=False)
            object.__setattr__(self, name, mask)

    @property
    def n(self) -> int:
        return int(self.train.shape[0])


def stratified_masks(labels, seed: int, fractions=SPLIT_FRACTIONS) -> SplitMasks:
    """
    60/20/20 train/val/test masks, stratified by label. Falls back to an unstratified
    split (with a warning) when some class is too small to appear in every split.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    train_frac, val_frac, test_frac = fractions
    if n < 3 or not np.isclose(train_frac + val_frac + test_frac, 1.0):
        raise UsageError(f"cannot split {n} nodes with fractions {fractions}")
    nodes = np.arange(n)
    state = int(seed) % 2 ** 32
    try:
        train, rest = train_test_split(nodes, train_size=train_frac, random_state=state, stratify=labels)
        val, test = train_test_split(rest, test_size=test_frac / (val_frac + test_frac),
                                     random_state=state, stratify=labels[rest])
    except ValueError as e:
        logger.warning(f"stratified split impossible ({e}); using an unstratified split")
        train, rest = train_test_split(nodes, train_size=train_frac, random_state=state)
        val, test = train_test_split(rest, test_size=test_frac / (val_frac + test_frac), random_state=state)

    masks = [np.zeros(n, dtype=bool) for _ in range(3)]
    for mask, chosen in zip(masks, (train, val, test)):
        mask[chosen] = True
    return SplitMasks(*masks)
