import numpy as np
import pytest

from activematch import EncoderNet, SimulatedOracle, init_split, make_synthetic_blobs
from activematch.active import ActiveConfig, margin, select_queries, should_query
from activematch.data import SplitState
from activematch.model import forward
from activematch import augment


class TestMargin:
    def test_clear_winner(self):
        assert margin(np.array([0.9, 0.1])) == pytest.approx(0.8)

    def test_tie(self):
        assert margin(np.array([0.5, 0.5])) == pytest.approx(0.0)

    def test_three_classes(self):
        assert margin(np.array([0.4, 0.35, 0.25])) == pytest.approx(0.05)

    def test_needs_two_classes(self):
        with pytest.raises(ValueError):
            margin(np.array([1.0]))


class TestShouldQuery:
    CFG = ActiveConfig(n0=6, b_smp=8, label_budget=30)

    def test_no_queries_during_warmup(self):
        assert not should_query(8, epoch=3, cfg=self.CFG, labels_so_far=6, warmup_epochs=15)

    def test_queries_after_warmup_on_multiple(self):
        assert should_query(8, epoch=16, cfg=self.CFG, labels_so_far=6, warmup_epochs=15)
        assert should_query(16, epoch=16, cfg=self.CFG, labels_so_far=6, warmup_epochs=15)

    def test_not_on_non_multiples_or_zero(self):
        assert not should_query(0, epoch=16, cfg=self.CFG, labels_so_far=6, warmup_epochs=15)
        assert not should_query(9, epoch=16, cfg=self.CFG, labels_so_far=6, warmup_epochs=15)

    def test_budget_exhausted_stops_queries(self):
        assert not should_query(8, epoch=16, cfg=self.CFG, labels_so_far=30, warmup_epochs=15)

    def test_negative_counters_rejected(self):
        with pytest.raises(ValueError):
            should_query(-1, epoch=0, cfg=self.CFG, labels_so_far=0, warmup_epochs=0)


@pytest.fixture(scope="module")
def blobs_setup():
    ds = make_synthetic_blobs(3, 40, 16, seed=5)
    state = init_split(ds, 10, SimulatedOracle(ds.labels), seed=1)
    net = EncoderNet(ds.image_shape, 3, arch="mlp", proj_dim=16)
    return ds, state, net


def exhaustive_margin_argmin(net, ds, pool, rng, n=1):
    """Independent brute force: replay the scoring augmentation stream, then
    pick the n smallest margins with ties to the lowest pool index."""
    weak = augment.weak_policy()
    scored = []
    for idx in sorted(pool):
        img = augment.apply(weak, ds.images[idx], rng)
        _, probs = forward(net, img[None], mode="eval")
        p = np.sort(probs[0])
        scored.append((p[-1] - p[-2], idx))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [idx for _, idx in scored[:n]]


class TestSelectQueries:
    def test_matches_exhaustive_argmin(self, blobs_setup):
        ds, state, net = blobs_setup
        cfg = ActiveConfig(n0=10, b_smp=1, label_budget=40)
        seed_seq = np.random.SeedSequence(77)
        got = select_queries(net, ds, state, cfg, np.random.default_rng(seed_seq))
        expected = exhaustive_margin_argmin(net, ds, state.pool, np.random.default_rng(seed_seq))
        assert got == expected

    def test_never_returns_labeled_index(self, blobs_setup):
        ds, state, net = blobs_setup
        cfg = ActiveConfig(n0=10, b_smp=1, label_budget=40, queries_per_event=5)
        got = select_queries(net, ds, state, cfg, np.random.default_rng(3))
        assert len(got) == len(set(got)) == 5
        assert all(i in state.pool for i in got)

    def test_budget_clips_queries(self, blobs_setup):
        ds, state, net = blobs_setup
        cfg = ActiveConfig(n0=10, b_smp=1, label_budget=state.num_labeled + 2,
                           queries_per_event=10)
        got = select_queries(net, ds, state, cfg, np.random.default_rng(3))
        assert len(got) == 2

    def test_exhausted_budget_is_noop(self, blobs_setup):
        ds, state, net = blobs_setup
        cfg = ActiveConfig(n0=10, b_smp=1, label_budget=10)
        assert select_queries(net, ds, state, cfg, np.random.default_rng(3)) == []

    def test_empty_pool_is_noop(self, blobs_setup):
        ds, _, net = blobs_setup
        empty = SplitState(len(ds))
        for i in range(len(ds)):
            empty.add_label(i, int(ds.labels[i]))
        cfg = ActiveConfig(n0=1, b_smp=1, label_budget=len(ds) + 5)
        assert select_queries(net, ds, empty, cfg, np.random.default_rng(3)) == []

    def test_deterministic_for_fixed_seed(self, blobs_setup):
        ds, state, net = blobs_setup
        cfg = ActiveConfig(n0=10, b_smp=1, label_budget=40, queries_per_event=3)
        a = select_queries(net, ds, state, cfg, np.random.default_rng(11))
        b = select_queries(net, ds, state, cfg, np.random.default_rng(11))
        assert a == b

    def test_random_strategy_uniform_and_distinct(self, blobs_setup):
        ds, state, net = blobs_setup
        cfg = ActiveConfig(n0=10, b_smp=1, label_budget=40, strategy="random",
                           queries_per_event=4)
        got = select_queries(net, ds, state, cfg, np.random.default_rng(13))
        assert len(set(got)) == 4 and all(i in state.pool for i in got)

    def test_entropy_strategy_runs(self, blobs_setup):
        ds, state, net = blobs_setup
        cfg = ActiveConfig(n0=10, b_smp=1, label_budget=40, strategy="entropy")
        got = select_queries(net, ds, state, cfg, np.random.default_rng(17))
        assert len(got) == 1 and got[0] in state.pool


class TestTieBreaking:
    def test_lowest_pool_index_wins_ties(self):
        # degenerate net: all-zero classifier makes every margin identical
        ds = make_synthetic_blobs(3, 10, 8, seed=0)
        net = EncoderNet(ds.image_shape, 3, arch="mlp", proj_dim=8)
        with __import__("torch").no_grad():
            net.classifier.weight.zero_()
            net.classifier.bias.zero_()
        state = init_split(ds, 5, SimulatedOracle(ds.labels), seed=0)
        cfg = ActiveConfig(n0=5, b_smp=1, label_budget=30)
        got = select_queries(net, ds, state, cfg, np.random.default_rng(0))
        assert got == [min(state.pool)]
