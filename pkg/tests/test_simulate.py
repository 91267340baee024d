import numpy as np
import pytest

from framebias.audit import global_length_summary
from framebias.dataset import ActionClass, class_of, frame_length
from framebias.errors import DegenerateInputError
from framebias.filtering import FilterConfig, filter_margin
from framebias.metrics import gt_rank, topk_avg_length
from framebias.simulate import (
    SimConfig,
    _match_components,
    bias_sweep,
    class_for_index,
    simulate,
    single_class_ablation,
    synth_dataset,
    synth_similarity,
)

MECHANISM_CONFIG = SimConfig(
    num_classes=40,
    train_per_class=30,
    test_per_class=10,
    train_len_mean=400.0,
    test_len_mean=480.0,
    len_stddev=40.0,
    class_len_spread=600.0,
    bias_strength=0.6,
    noise_stddev=0.02,
    num_len_buckets=24,
)


class TestSynthDataset:
    def test_zero_variance(self):
        cfg = SimConfig(num_classes=3, train_per_class=5, test_per_class=2,
                        train_len_mean=100, test_len_mean=100, len_stddev=0, seed=7)
        ds = synth_dataset(cfg)
        assert {frame_length(c) for c in ds} == {100}

    def test_same_seed_identical(self):
        cfg = SimConfig(num_classes=4, train_per_class=6, test_per_class=3, seed=9)
        assert synth_dataset(cfg) == synth_dataset(cfg)

    def test_different_seed_differs(self):
        a = synth_dataset(SimConfig(num_classes=4, train_per_class=6, test_per_class=3, seed=1))
        b = synth_dataset(SimConfig(num_classes=4, train_per_class=6, test_per_class=3, seed=2))
        assert a != b

    def test_global_offset(self):
        cfg = SimConfig(num_classes=4, train_per_class=100, test_per_class=100,
                        train_len_mean=200, test_len_mean=280, len_stddev=10, seed=0)
        train_mean, test_mean, _, _ = global_length_summary(synth_dataset(cfg))
        assert abs((test_mean - train_mean) - 80) < 2

    def test_counts_and_splits(self):
        cfg = SimConfig(num_classes=5, train_per_class=7, test_per_class=3, seed=3)
        ds = synth_dataset(cfg)
        assert len(ds.split_clips("train")) == 35
        assert len(ds.split_clips("test")) == 15
        assert len(ds.classes()) == 5

    def test_lengths_at_least_one(self):
        cfg = SimConfig(num_classes=3, train_per_class=50, test_per_class=10,
                        train_len_mean=5, test_len_mean=5, len_stddev=30, seed=2)
        assert min(frame_length(c) for c in synth_dataset(cfg)) >= 1

    def test_class_spread_centered(self):
        cfg = SimConfig(num_classes=9, train_per_class=200, test_per_class=1,
                        train_len_mean=300, test_len_mean=300, len_stddev=0,
                        class_len_spread=200, seed=0)
        ds = synth_dataset(cfg)
        per_class = sorted(
            np.mean([frame_length(c) for c in ds.clips_of(ac, "train")]) for ac in ds.classes()
        )
        assert per_class[0] == 200
        assert per_class[-1] == 400
        assert np.mean(per_class) == 300

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SimConfig(num_classes=0)
        with pytest.raises(ValueError):
            SimConfig(bias_strength=1.5)
        with pytest.raises(ValueError):
            SimConfig(len_stddev=-1)
        with pytest.raises(ValueError):
            SimConfig(num_len_buckets=0)


class TestSynthSimilarity:
    def test_pure_class_signal(self):
        cfg = SimConfig(num_classes=4, train_per_class=3, test_per_class=3,
                        bias_strength=0.0, noise_stddev=0.0, seed=1)
        ds = synth_dataset(cfg)
        sim, _ = synth_similarity(ds, cfg, ds)
        classes = [class_of(ds.by_id[r]) for r in sim.rows]
        expected = np.array([[1.0 if a == b else 0.0 for b in classes] for a in classes])
        assert np.array_equal(sim.values, expected)
        # GT never ranked below the same-class block
        for i, rid in enumerate(sim.rows):
            assert gt_rank(sim, i, rid) <= 3

    def test_pure_length_signal_two_buckets(self):
        # class 0: train mean 100, class 1: train mean 200; test offset +100.
        # All test clips land in the upper bucket, so class-1 captions
        # (train mean 200 -> upper bucket) tie with every test clip while
        # class-0 captions (lower bucket) match nothing.
        cfg = SimConfig(num_classes=2, train_per_class=4, test_per_class=2,
                        train_len_mean=150, test_len_mean=250, len_stddev=0,
                        class_len_spread=100, bias_strength=1.0, noise_stddev=0.0,
                        num_len_buckets=2, seed=5)
        ds = synth_dataset(cfg)
        sim, _ = synth_similarity(ds, cfg, ds)
        by_class = [class_of(ds.by_id[r]) for r in sim.rows]
        c0 = class_for_index(cfg, 0)
        for i, ac in enumerate(by_class):
            if ac == c0:
                assert np.all(sim.values[i] == 0.0)
            else:
                assert np.all(sim.values[i] == 1.0)
                # wrong-class clip at the same score ties ahead of GT by index
                assert gt_rank(sim, i, sim.rows[i]) > 1

    def test_same_seed_identical_matrix(self):
        cfg = SimConfig(num_classes=3, train_per_class=4, test_per_class=2, seed=6)
        ds = synth_dataset(cfg)
        assert synth_similarity(ds, cfg, ds)[0] == synth_similarity(ds, cfg, ds)[0]

    def test_monotone_leakage_term(self):
        cfg = SimConfig(num_classes=4, train_per_class=5, test_per_class=3,
                        noise_stddev=0.0, seed=8, class_len_spread=100)
        ds = synth_dataset(cfg)
        *_, class_match, bucket_match, _ = _match_components(ds, cfg, ds)
        lambdas = [0.0, 0.3, 0.6, 1.0]
        contributions = [lam**2 * bucket_match for lam in lambdas]
        for weaker, stronger in zip(contributions, contributions[1:]):
            assert np.all(stronger >= weaker)

    def test_fallback_class_recorded(self):
        cfg = SimConfig(num_classes=3, train_per_class=4, test_per_class=2, seed=4)
        ds = synth_dataset(cfg)
        # drop one class's train clips from the reference entirely
        victim = ds.classes()[0]
        from framebias.dataset import Dataset

        ref = Dataset(
            clips=tuple(
                c for c in ds.clips if not (c.split == "train" and class_of(c) == victim)
            )
        )
        sim, prov = synth_similarity(ds, cfg, ref)
        assert str(victim) in prov["fallback_classes"]
        assert prov["generator"] == "numpy-default-rng-pcg64"

    def test_matrix_ids_cover_test_split(self):
        out = simulate(SimConfig(num_classes=3, train_per_class=4, test_per_class=2, seed=4))
        test_ids = tuple(c.clip_id for c in out.dataset.split_clips("test"))
        assert out.sim_t2v.rows == test_ids
        assert out.sim_t2v.cols == test_ids

    def test_no_test_clips_rejected(self):
        cfg = SimConfig(num_classes=2, train_per_class=3, test_per_class=1, seed=1)
        ds = synth_dataset(cfg)
        from framebias.dataset import Dataset

        train_only = Dataset(clips=ds.split_clips("train"))
        with pytest.raises(DegenerateInputError):
            synth_similarity(train_only, cfg, ds)


class TestMechanism:
    def test_topk_length_tracks_train_mean(self):
        # over >= 10 seeds, per-query top-20 mean length correlates with the
        # query class's (empirical) train mean length
        corrs = []
        for seed in range(10):
            cfg = SimConfig(num_classes=10, train_per_class=20, test_per_class=5,
                            train_len_mean=300, test_len_mean=380, len_stddev=30,
                            class_len_spread=400, bias_strength=0.6,
                            noise_stddev=0.02, num_len_buckets=24, seed=seed)
            ds = synth_dataset(cfg)
            sim, _ = synth_similarity(ds, cfg, ds)
            train_means = {
                ac: np.mean([frame_length(c) for c in ds.clips_of(ac, "train")])
                for ac in ds.classes()
            }
            xs, ys = [], []
            for i, rid in enumerate(sim.rows):
                xs.append(train_means[class_of(ds.by_id[rid])])
                ys.append(topk_avg_length(sim, ds, i, 20))
            corrs.append(np.corrcoef(xs, ys)[0, 1])
        assert np.mean(corrs) > 0

    def test_filter_improves_gt_rank_single_seed(self):
        cfg = MECHANISM_CONFIG
        ds = synth_dataset(cfg)
        sim0, _ = synth_similarity(ds, cfg, ds)
        filtered, _ = filter_margin(ds, FilterConfig(alpha=20, min_class_size=11))
        sim1, _ = synth_similarity(ds, cfg, filtered)
        rank0 = np.mean([gt_rank(sim0, i, sim0.rows[i]) for i in range(len(sim0.rows))])
        rank1 = np.mean([gt_rank(sim1, i, sim1.rows[i]) for i in range(len(sim1.rows))])
        assert rank1 < rank0


class TestSweep:
    def test_row_layout_and_determinism(self):
        cfg = SimConfig(num_classes=4, train_per_class=8, test_per_class=3,
                        class_len_spread=100, seed=0)
        rows = bias_sweep(cfg, alphas=[10.0, 30.0], seeds=[0, 1], min_class_size=2, topk=5)
        assert len(rows) == 2 * 3
        assert [r.alpha for r in rows[:3]] == [None, 10.0, 30.0]
        again = bias_sweep(cfg, alphas=[10.0, 30.0], seeds=[0, 1], min_class_size=2, topk=5)
        assert rows == again

    def test_lambda_zero_flat(self):
        cfg = SimConfig(num_classes=6, train_per_class=10, test_per_class=4,
                        bias_strength=0.0, class_len_spread=200, seed=0)
        rows = bias_sweep(cfg, alphas=[15.0], seeds=range(6), min_class_size=3)
        base = {r.seed: r for r in rows if r.alpha is None}
        filt = {r.seed: r for r in rows if r.alpha is not None}
        for seed, b in base.items():
            assert filt[seed].mean_gt_rank == b.mean_gt_rank
            assert filt[seed].recall_at_10 == b.recall_at_10

    def test_empty_args_rejected(self):
        with pytest.raises(ValueError):
            bias_sweep(SimConfig(), [], [1])
        with pytest.raises(ValueError):
            bias_sweep(SimConfig(), [1.0], [])

    def test_callback_sees_every_condition(self):
        cfg = SimConfig(num_classes=3, train_per_class=6, test_per_class=2, seed=0)
        calls = []
        bias_sweep(cfg, alphas=[5.0], seeds=[0, 1], min_class_size=2,
                   on_condition=lambda seed, alpha, ds, ref, sim: calls.append((seed, alpha)))
        assert calls == [(0, None), (0, 5.0), (1, None), (1, 5.0)]


class TestAblation:
    def test_modes_and_rows(self):
        cfg = SimConfig(num_classes=4, train_per_class=10, test_per_class=4,
                        class_len_spread=150, seed=0)
        ac = class_for_index(cfg, 2)
        rows = single_class_ablation(cfg, ac, 0.5, seeds=[0, 1])
        assert [r.mode for r in rows] == ["baseline", "remove_long", "remove_short"] * 2

    def test_unknown_class(self):
        cfg = SimConfig(num_classes=2, train_per_class=4, test_per_class=2, seed=0)
        with pytest.raises(DegenerateInputError):
            single_class_ablation(cfg, ActionClass(99, 99), 0.5, seeds=[0])
