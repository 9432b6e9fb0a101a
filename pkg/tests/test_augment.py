import numpy as np
import pytest

from activematch import augment


@pytest.fixture
def img():
    rng = np.random.default_rng(0)
    return rng.random((16, 16, 3)).astype(np.float32)


def all_policies(side=16):
    return [
        augment.contrastive_policy(),
        augment.weak_policy(),
        augment.strong_policy(side),
    ]


class TestApply:
    def test_shape_preserved(self, img):
        rng = np.random.default_rng(1)
        for policy in all_policies():
            out = augment.apply(policy, img, rng)
            assert out.shape == img.shape

    def test_range_preserved_over_many_seeds(self, img):
        for policy in all_policies():
            for seed in range(200):
                out = augment.apply(policy, img, np.random.default_rng(seed))
                assert out.min() >= 0.0 and out.max() <= 1.0

    def test_deterministic_for_fixed_seed(self, img):
        for policy in all_policies():
            a = augment.apply(policy, img, np.random.default_rng(42))
            b = augment.apply(policy, img, np.random.default_rng(42))
            assert np.array_equal(a, b)

    def test_weak_no_flip_is_identity(self, img):
        policy = augment.weak_policy(flip_prob=0.0)
        out = augment.apply(policy, img, np.random.default_rng(0))
        assert np.array_equal(out, img)

    def test_weak_flip_is_horizontal_mirror(self, img):
        policy = augment.weak_policy(flip_prob=1.0)
        out = augment.apply(policy, img, np.random.default_rng(0))
        assert np.array_equal(out, img[:, ::-1])

    def test_strong_changes_image_and_leaves_cutout_window(self, img):
        # keep only RandAugment+Cutout randomness away from flip
        policy = augment.strong_policy(16, flip_prob=0.0)
        rng = np.random.default_rng(3)
        changed = 0
        for _ in range(20):
            out = augment.apply(policy, img, rng)
            if not np.array_equal(out, img):
                changed += 1
            assert _has_zero_window(out, policy.cutout_size)
        assert changed >= 19

    def test_oversized_cutout_rejected_at_construction(self):
        with pytest.raises(augment.AugmentConfigError):
            augment.strong_policy(16, cutout_size=17)

    def test_bad_probability_rejected(self):
        with pytest.raises(augment.AugmentConfigError):
            augment.AugmentPolicy(kind="weak", flip_prob=1.5)


def _has_zero_window(img, size):
    """Exhaustive scan: is there a center whose (border-clipped) cutout square
    is entirely zero?"""
    h, w = img.shape[:2]
    zero = np.all(img == 0.0, axis=2)
    for cy in range(h):
        for cx in range(w):
            y0, y1 = max(0, cy - size // 2), min(h, cy - size // 2 + size)
            x0, x1 = max(0, cx - size // 2), min(w, cx - size // 2 + size)
            if zero[y0:y1, x0:x1].all():
                return True
    return False


class TestPairs:
    def test_contrastive_pair_views_differ(self, img):
        rng = np.random.default_rng(5)
        v1, v2 = augment.contrastive_pair(img, rng)
        assert v1.shape == img.shape and v2.shape == img.shape
        assert not np.array_equal(v1, v2)

    def test_contrastive_pair_identity_policy(self, img):
        policy = augment.contrastive_policy(
            crop_padding=0, flip_prob=0.0, color_prob=0.0, gray_prob=0.0, blur_prob=0.0
        )
        v1, v2 = augment.contrastive_pair(img, np.random.default_rng(0), policy)
        assert np.array_equal(v1, img) and np.array_equal(v2, img)

    def test_contrastive_pair_range_sweep(self, img):
        for seed in range(1000):
            v1, v2 = augment.contrastive_pair(img, np.random.default_rng(seed))
            assert 0.0 <= v1.min() and v1.max() <= 1.0
            assert 0.0 <= v2.min() and v2.max() <= 1.0

    def test_weak_strong_pair_properties(self, img):
        rng = np.random.default_rng(6)
        weak, strong = augment.weak_strong_pair(img, rng)
        assert weak.shape == img.shape and strong.shape == img.shape
        # weak changes at most by a horizontal flip
        assert np.array_equal(weak, img) or np.array_equal(weak, img[:, ::-1])

    def test_weak_strong_pair_deterministic(self, img):
        a = augment.weak_strong_pair(img, np.random.default_rng(9))
        b = augment.weak_strong_pair(img, np.random.default_rng(9))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_pair_draws_consume_rng_state(self, img):
        rng = np.random.default_rng(11)
        first = augment.apply(augment.contrastive_policy(), img, rng)
        second = augment.apply(augment.contrastive_policy(), img, rng)
        assert not np.array_equal(first, second)


class TestRandAugmentOps:
    def test_fourteen_ops(self):
        assert len(augment._RANDAUGMENT_OPS) == 14
        assert len({name for name, _ in augment._RANDAUGMENT_OPS}) == 14

    def test_each_op_preserves_shape(self, img):
        rng = np.random.default_rng(0)
        for name, op in augment._RANDAUGMENT_OPS:
            out = op(img.copy(), 10 / 30.0, rng)
            assert out.shape == img.shape, name

    def test_identity_op(self, img):
        name, op = augment._RANDAUGMENT_OPS[0]
        assert name == "identity"
        assert np.array_equal(op(img, 1.0, np.random.default_rng(0)), img)
