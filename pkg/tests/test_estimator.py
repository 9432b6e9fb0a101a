import numpy as np
import pytest
from sklearn.base import clone

from activematch import ActiveMatchClassifier, make_synthetic_blobs


@pytest.fixture(scope="module")
def fitted():
    ds = make_synthetic_blobs(3, 40, 16, seed=4)
    clf = ActiveMatchClassifier(n0=6, label_budget=12, b_smp=5, total_steps=60,
                                warmup_epochs=1, arch="mlp", proj_dim=16,
                                random_state=0)
    return clf.fit(ds.images, ds.labels), ds


class TestEstimatorApi:
    def test_get_set_params_round_trip(self):
        clf = ActiveMatchClassifier(label_budget=20, tau=0.1)
        params = clf.get_params()
        assert params["label_budget"] == 20 and params["tau"] == 0.1
        cloned = clone(clf)
        assert cloned.get_params() == params

    def test_predict_shapes_and_classes(self, fitted):
        clf, ds = fitted
        preds = clf.predict(ds.images[:10])
        assert preds.shape == (10,)
        assert set(preds) <= set(clf.classes_)

    def test_predict_proba_simplex(self, fitted):
        clf, ds = fitted
        probs = clf.predict_proba(ds.images[:10])
        assert probs.shape == (10, 3)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-5)

    def test_transform_unit_norm_embeddings(self, fitted):
        clf, ds = fitted
        emb = clf.transform(ds.images[:10])
        assert emb.shape == (10, 16)
        assert np.allclose(np.linalg.norm(emb, axis=1), 1.0, atol=1e-5)

    def test_score_beats_chance(self, fitted):
        clf, ds = fitted
        assert clf.score(ds.images, ds.labels) > 1 / 3

    def test_non_contiguous_class_values_mapped(self):
        ds = make_synthetic_blobs(2, 15, 8, seed=1)
        y = np.where(ds.labels == 0, -5, 7)
        clf = ActiveMatchClassifier(n0=4, label_budget=6, b_smp=4, total_steps=20,
                                    warmup_epochs=0, arch="mlp", proj_dim=8)
        clf.fit(ds.images, y)
        assert set(clf.predict(ds.images[:5])) <= {-5, 7}

    def test_rejects_non_image_input(self):
        clf = ActiveMatchClassifier()
        with pytest.raises(ValueError):
            clf.fit(np.zeros((10, 5)), np.zeros(10))
