import numpy as np
import pytest

from database.bundle import (
    EDGES_FILE,
    FEATURES_FILE,
    LABELS_FILE,
    MASKS_FILE,
    load_bundle,
    save_bundle,
)
from database.setup_dataset import sbm_bundle, setup_dataset
from graph.sbm import SbmParams
from helper import (
    InconsistentLengths,
    LabelOutOfRange,
    MissingFile,
    OverwriteRefused,
    ParseError,
)


def write_bundle(root, edges="0\t1\t1\n1\t2\t1\n", features="1,2\n3,4\n5,6\n", labels="0\n1\n0\n"):
    root.mkdir(parents=True, exist_ok=True)
    (root / EDGES_FILE).write_text(edges)
    (root / FEATURES_FILE).write_text(features)
    (root / LABELS_FILE).write_text(labels)
    return root


class TestLoadBundle:

    def test_minimal(self, tmp_path):
        bundle = load_bundle(write_bundle(tmp_path / "tiny"))
        assert bundle.name == "tiny"
        assert bundle.num_nodes == 3
        assert bundle.graph.num_edges == 2
        assert bundle.num_classes == 2
        assert bundle.masks is None
        np.testing.assert_array_equal(bundle.features, [[1, 2], [3, 4], [5, 6]])

    def test_logs_homophily(self, tmp_path, caplog):
        with caplog.at_level("INFO", logger="database.bundle"):
            load_bundle(write_bundle(tmp_path / "h", labels="0\n0\n1\n"))
        assert "n=3, edges=2, d=2, C=2, H=0.500" in caplog.text

    def test_both_directions_accepted(self, tmp_path):
        bundle = load_bundle(write_bundle(tmp_path / "b", edges="0\t1\t1\n1\t0\t1\n"))
        assert bundle.graph.num_edges == 1

    def test_empty_edge_set_flag(self, tmp_path):
        bundle = load_bundle(write_bundle(tmp_path / "e", edges=""))
        assert bundle.empty_edge_set
        assert bundle.graph.num_edges == 0

    def test_missing_file(self, tmp_path):
        root = write_bundle(tmp_path / "m")
        (root / LABELS_FILE).unlink()
        with pytest.raises(MissingFile):
            load_bundle(root)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(MissingFile):
            load_bundle(tmp_path / "nowhere")

    def test_bad_number_names_line(self, tmp_path):
        with pytest.raises(ParseError) as info:
            load_bundle(write_bundle(tmp_path / "p", features="1,2\n3,x\n5,6\n"))
        assert info.value.line == 2

    def test_label_count_mismatch(self, tmp_path):
        with pytest.raises(InconsistentLengths):
            load_bundle(write_bundle(tmp_path / "l", labels="0\n1\n"))

    def test_label_out_of_range(self, tmp_path):
        root = write_bundle(tmp_path / "c", labels="0\n1\n5\n")
        (root / "meta.txt").write_text("classes=2\n")
        with pytest.raises(LabelOutOfRange, match=":3:"):
            load_bundle(root)

    def test_masks(self, tmp_path):
        root = write_bundle(tmp_path / "k")
        (root / MASKS_FILE).write_text("1\t0\t0\n0\t1\t0\n0\t0\t1\n")
        masks = load_bundle(root).masks
        np.testing.assert_array_equal(masks.train, [True, False, False])
        np.testing.assert_array_equal(masks.test, [False, False, True])


class TestSaveBundle:

    def test_sbm_round_trip(self, tmp_path):
        original = sbm_bundle(SbmParams(n=40, seed=2))
        loaded = load_bundle(save_bundle(original, tmp_path / "sbm"))
        assert loaded.name == "sbm"
        assert loaded.features.tobytes() == original.features.tobytes()
        np.testing.assert_array_equal(loaded.labels, original.labels)
        np.testing.assert_array_equal(loaded.graph.indices, original.graph.indices)
        np.testing.assert_array_equal(loaded.graph.weights, original.graph.weights)
        np.testing.assert_array_equal(loaded.masks.val, original.masks.val)

    def test_file_layout(self, tmp_path):
        root = save_bundle(sbm_bundle(SbmParams(n=20)), tmp_path / "layout")
        assert sorted(p.name for p in root.iterdir()) == ["edges.tsv", "features.csv", "labels.tsv", "masks.tsv", "meta.txt"]
        first_edge = (root / "edges.tsv").read_text().splitlines()[0].split("\t")
        assert len(first_edge) == 3
        assert (root / "masks.tsv").read_text().splitlines()[0].count("\t") == 2

    def test_edges_written_once(self, tmp_path):
        root = save_bundle(sbm_bundle(SbmParams(n=20, seed=1)), tmp_path / "once")
        lines = (root / EDGES_FILE).read_text().splitlines()
        pairs = [tuple(map(int, line.split("\t")[:2])) for line in lines]
        assert all(i < j for i, j in pairs)

    def test_overwrite_refused(self, tmp_path):
        bundle = sbm_bundle(SbmParams(n=10))
        save_bundle(bundle, tmp_path / "x")
        with pytest.raises(OverwriteRefused):
            save_bundle(bundle, tmp_path / "x")
        save_bundle(bundle, tmp_path / "x", force=True)

    def test_setup_dataset(self, tmp_path):
        bundle = setup_dataset(tmp_path / "gen", SbmParams(n=20, seed=4))
        assert load_bundle(tmp_path / "gen").num_nodes == bundle.num_nodes == 20
