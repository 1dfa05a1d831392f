import json

import numpy as np
import pytest

from imvc import data as dataio
from imvc import pipeline
from imvc.dtree import build_tree
from imvc.pipeline import PipelineConfig


@pytest.fixture()
def written_dataset(tmp_path):
    views, truth = dataio.synth_multiview(n_per_cluster=5, k=2, n_views=2,
                                          dims=3, noise=0.2, seed=0)
    manifest = dataio.write_dataset(tmp_path / "ds", views, truth)
    return manifest, views, truth


class TestLoadDataset:
    def test_round_trip_preserves_values(self, written_dataset):
        manifest, views, truth = written_dataset
        loaded_views, loaded_truth, spec = dataio.load_dataset(manifest)
        assert len(loaded_views) == 2
        for a, b in zip(loaded_views, views):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(loaded_truth, truth)
        assert spec.n == 10

    def test_missing_file(self, tmp_path):
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({
            "name": "x", "n": 2,
            "views": [{"path": "absent.csv", "dim": 1}],
        }))
        with pytest.raises(dataio.DatasetError, match="absent.csv"):
            dataio.load_dataset(manifest)

    def test_row_count_mismatch_names_view(self, tmp_path):
        (tmp_path / "v0.csv").write_text("1,2\n3,4\n")
        (tmp_path / "v1.csv").write_text("1\n")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({
            "name": "x", "n": 2,
            "views": [{"path": "v0.csv", "dim": 2},
                      {"path": "v1.csv", "dim": 1}],
        }))
        with pytest.raises(dataio.DatasetError, match="view 1"):
            dataio.load_dataset(manifest)

    def test_ragged_rows(self, tmp_path):
        (tmp_path / "v0.csv").write_text("1,2\n3\n")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({
            "name": "x", "n": 2, "views": [{"path": "v0.csv", "dim": 2}],
        }))
        with pytest.raises(dataio.DatasetError, match="ragged"):
            dataio.load_dataset(manifest)

    def test_non_numeric_cell(self, tmp_path):
        (tmp_path / "v0.csv").write_text("1,2\n3,oops\n")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({
            "name": "x", "n": 2, "views": [{"path": "v0.csv", "dim": 2}],
        }))
        with pytest.raises(dataio.DatasetError, match="non-numeric"):
            dataio.load_dataset(manifest)


class TestStandardize:
    def test_two_point_column(self):
        out = dataio.standardize(np.array([[1.0], [3.0]]))
        np.testing.assert_allclose(out, [[-1.0], [1.0]])

    def test_constant_column_maps_to_zero(self):
        out = dataio.standardize(np.array([[5.0, 1.0], [5.0, 2.0]]))
        np.testing.assert_array_equal(out[:, 0], [0.0, 0.0])

    def test_idempotent(self):
        X = np.random.default_rng(0).standard_normal((20, 3)) * 4 + 2
        once = dataio.standardize(X)
        twice = dataio.standardize(once)
        np.testing.assert_allclose(twice, once, atol=1e-9)


class TestSynth:
    def test_noise_zero_collapses_clusters(self):
        views, truth = dataio.synth_multiview(4, 2, 2, 3, noise=0.0, seed=1)
        for view in views:
            for c in (0, 1):
                members = view[truth == c]
                assert np.all(members == members[0])

    def test_cluster_sizes(self):
        _, truth = dataio.synth_multiview(7, 3, 1, 2, noise=0.5, seed=2)
        np.testing.assert_array_equal(np.bincount(truth), [7, 7, 7])

    def test_raw_concatenation_is_separable(self):
        import imvc
        views, truth = dataio.synth_multiview(20, 3, 2, 4, noise=0.1, seed=3)
        result = imvc.kmeans(np.hstack(views), 3, seed=0)
        assert imvc.clustering_accuracy(result.labels, truth) == 1.0


class TestTreeExport:
    def make_tree(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((40, 6))
        y = rng.integers(0, 3, size=40)
        return build_tree(X, y, max_depth=4, min_num=2), X

    def test_single_leaf_dot(self):
        tree = build_tree(np.zeros((3, 2)), [1, 1, 1], max_depth=2, min_num=1)
        dot = dataio.export_tree(tree, [0], fmt="dot")
        assert dot.count("[label=") == 1
        assert "cluster 1" in dot

    def test_dot_structure(self):
        tree, _ = self.make_tree()
        dot = dataio.export_tree(tree, [0, 3], fmt="dot")
        assert dot.startswith("digraph tree {")
        assert dot.rstrip().endswith("}")
        internals = sum(1 for n in tree.nodes.values() if n.kind == "internal")
        assert dot.count("->") == 2 * internals

    def test_json_round_trip_preserves_predictions(self):
        tree, X = self.make_tree()
        doc = json.loads(dataio.export_tree(tree, [0, 3], fmt="json"))
        restored = dataio.doc_to_tree(doc)
        rng = np.random.default_rng(6)
        probes = rng.standard_normal((1000, 6))
        np.testing.assert_array_equal(restored.predict_batch(probes),
                                      tree.predict_batch(probes))

    def test_view_attribution_rendering(self):
        assert dataio.feature_attribution(80, [0, 76]) == (1, 4)
        assert dataio.feature_attribution(75, [0, 76]) == (0, 75)
        assert dataio.feature_attribution(76, [0, 76]) == (1, 0)


class TestModelSerialization:
    @pytest.fixture()
    def state(self):
        views, _ = dataio.synth_multiview(10, 2, 2, 3, noise=0.3, seed=4)
        config = PipelineConfig(k=2, e1=3, e2=3, min_num=3, seed=4,
                                outer_cycles=1, standardize=True)
        return pipeline.fit(views, config), views

    def test_round_trip_predict_agreement(self, tmp_path, state):
        model, views = state
        path = tmp_path / "model.bin"
        dataio.save_model(model, path)
        restored = dataio.load_model(path)
        np.testing.assert_array_equal(restored.predict(views),
                                      model.predict(views))
        np.testing.assert_array_equal(restored.labels.hard, model.labels.hard)
        assert restored.config == model.config

    def test_save_is_deterministic(self, tmp_path, state):
        model, _ = state
        dataio.save_model(model, tmp_path / "a.bin")
        dataio.save_model(model, tmp_path / "b.bin")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="not a model file"):
            dataio.load_model(path)
