import logging

from database.bundle import DatasetBundle, save_bundle
from database.splits import stratified_masks
from graph.sbm import SbmParams, sbm_generate

logger = logging.getLogger(__name__)


def sbm_bundle(params: SbmParams, name: str = "sbm") -> DatasetBundle:
    """
    Two-class SBM dataset with stratified 60/20/20 masks drawn from the same seed.
    """
    graph, features, labels = sbm_generate(params)
    return DatasetBundle(
        name=name, graph=graph, features=features, labels=labels, num_classes=2,
        masks=stratified_masks(labels, params.seed), empty_edge_set=graph.num_edges == 0,
    )


def setup_dataset(path, params: SbmParams = SbmParams(), force: bool = False) -> DatasetBundle:
    """
    Generates an SBM bundle and writes it to `path`.
    """
    bundle = sbm_bundle(params)
    save_bundle(bundle, path, force=force)
    logger.info(f"Dataset setup complete. SBM bundle with {bundle.graph.num_edges} edges written to {path}.")
    return bundle
