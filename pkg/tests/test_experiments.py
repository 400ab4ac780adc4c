import pytest

from experiments.experiment_3_node_classification import DEPTH_TOLERANCE, NodeClassificationExperiment


class TestDepthCriterion:

    @pytest.mark.parametrize("drop, gcn_drop, expected", [
        (0.0, 0.2, True),
        (DEPTH_TOLERANCE, 0.2, True),
        (0.0, 0.01, False),
        (0.0, DEPTH_TOLERANCE, False),
        (0.06, 0.2, False),
    ])
    def test_depth_stable(self, drop, gcn_drop, expected):
        assert NodeClassificationExperiment.depth_stable(drop, gcn_drop) is expected
