"""Synthetic datasets and similarity matrices with a length-leakage knob.

The leakage mechanism: each test caption is embedded as
``concat[(1-lambda) * onehot(class), lambda * onehot(bucket(train mean length
of its class))]`` and each test clip as ``concat[(1-lambda) * onehot(class),
lambda * onehot(bucket(clip length))]`` plus Gaussian noise; similarity is
the dot product. With lambda > 0 a caption is pulled toward clips whose
length matches its class's average TRAIN length, so a train/test length
offset degrades ground-truth retrieval, and re-deriving train means from a
filtered train set mimics retraining after debiasing.

The noise stream is a fixed function of the seed and matrix shape, not of
the train reference, so regenerating similarities after filtering changes
only the length-bucket term. Everything is a pure function of (config, seed);
the generator is numpy's seeded default_rng (PCG64) for cross-platform
reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from framebias.dataset import ActionClass, ClipRecord, Dataset, class_of, frame_length
from framebias.errors import DegenerateInputError
from framebias.filtering import FilterConfig, filter_margin, filter_single_class
from framebias.matrices import SimilarityMatrix
from framebias.metrics import gt_rank, recall_at_k, topk_avg_length

GENERATOR_ID = "numpy-default-rng-pcg64"
_NOISE_STREAM = 0x6E6F6973  # keeps clip noise independent of the length draws


@dataclass(frozen=True)
class SimConfig:
    """Synthetic benchmark shape and leakage knobs.

    ``bias_strength`` is the leakage weight in [0, 1]. ``class_len_spread``
    spaces per-class base lengths evenly across a band of that width centered
    on ``train_len_mean`` (0 = every class shares the global mean); the
    train/test offset applies on top, per class.
    """

    num_classes: int = 40
    train_per_class: int = 30
    test_per_class: int = 10
    train_len_mean: float = 400.0
    test_len_mean: float = 480.0
    len_stddev: float = 40.0
    class_len_spread: float = 0.0
    bias_strength: float = 0.6
    noise_stddev: float = 0.02
    num_len_buckets: int = 24
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_classes < 1 or self.train_per_class < 1 or self.test_per_class < 1:
            raise ValueError("num_classes, train_per_class, test_per_class must all be >= 1")
        if not 0.0 <= self.bias_strength <= 1.0:
            raise ValueError(f"bias_strength must lie in [0, 1], got {self.bias_strength}")
        if self.len_stddev < 0 or self.noise_stddev < 0:
            raise ValueError("stddevs must be >= 0")
        if self.num_len_buckets < 1:
            raise ValueError(f"num_len_buckets must be >= 1, got {self.num_len_buckets}")
        if self.class_len_spread < 0:
            raise ValueError(f"class_len_spread must be >= 0, got {self.class_len_spread}")


@dataclass(frozen=True)
class SimOutput:
    dataset: Dataset
    sim_t2v: SimilarityMatrix
    provenance: dict


def class_for_index(config: SimConfig, index: int) -> ActionClass:
    """Action class assigned to the index-th synthetic class."""
    verbs = math.isqrt(config.num_classes - 1) + 1 if config.num_classes > 1 else 1
    return ActionClass(verb_class=index % verbs, noun_class=index // verbs)


def _class_means(config: SimConfig) -> list[float]:
    c = config.num_classes
    if c == 1 or config.class_len_spread == 0:
        return [config.train_len_mean] * c
    return [
        config.train_len_mean + config.class_len_spread * (i / (c - 1) - 0.5) for i in range(c)
    ]


def _draw_lengths(rng: np.random.Generator, mean: float, stddev: float, count: int) -> np.ndarray:
    raw = np.rint(rng.normal(mean, stddev, size=count))
    return np.maximum(raw, 1.0).astype(int)


def synth_dataset(config: SimConfig) -> Dataset:
    """Per class, draw rounded-normal train/test clip lengths (min 1 frame)."""
    rng = np.random.default_rng(config.seed)
    offset = config.test_len_mean - config.train_len_mean
    means = _class_means(config)
    clips: list[ClipRecord] = []
    for c in range(config.num_classes):
        ac = class_for_index(config, c)
        caption = f"do v{ac.verb_class:03d} n{ac.noun_class:03d}"
        for split, count, mean in (
            ("train", config.train_per_class, means[c]),
            ("test", config.test_per_class, means[c] + offset),
        ):
            tag = "tr" if split == "train" else "te"
            for i, length in enumerate(_draw_lengths(rng, mean, config.len_stddev, count)):
                clips.append(
                    ClipRecord(
                        clip_id=f"{tag}_{c:04d}_{i:04d}",
                        video_id=f"vid_{c:04d}",
                        split=split,
                        start_frame=0,
                        stop_frame=int(length) - 1,
                        caption=caption,
                        verb_class=ac.verb_class,
                        noun_class=ac.noun_class,
                    )
                )
    return Dataset(clips=tuple(clips))


def _bucketer(config: SimConfig, lengths) -> tuple:
    lo = float(min(lengths))
    hi = float(max(lengths))
    width = (hi - lo) / config.num_len_buckets
    last = config.num_len_buckets - 1

    def bucket(x: float) -> int:
        if width == 0.0:
            return 0
        return min(last, max(0, int((x - lo) // width)))

    return bucket, lo, hi


def _match_components(dataset: Dataset, config: SimConfig, train_reference: Dataset):
    """Class-match and bucket-match indicator matrices plus provenance."""
    test_clips = dataset.split_clips("test")
    if not test_clips:
        raise DegenerateInputError("dataset has no test clips to embed")
    ref_train = train_reference.split_clips("train")
    if not ref_train:
        raise DegenerateInputError("train reference has no train clips")

    ref_sums: dict[ActionClass, list[int]] = {}
    for clip in ref_train:
        cell = ref_sums.setdefault(class_of(clip), [0, 0])
        cell[0] += frame_length(clip)
        cell[1] += 1
    ref_means = {ac: s / n for ac, (s, n) in ref_sums.items()}
    global_mean = sum(frame_length(c) for c in ref_train) / len(ref_train)

    bucket, lo, hi = _bucketer(
        config, [frame_length(c) for c in ref_train] + [frame_length(c) for c in test_clips]
    )

    fallback: list[str] = []
    query_buckets = []
    classes = [class_of(c) for c in test_clips]
    for ac in classes:
        mean = ref_means.get(ac)
        if mean is None:
            mean = global_mean
            name = str(ac)
            if name not in fallback:
                fallback.append(name)
        query_buckets.append(bucket(mean))
    clip_buckets = [bucket(frame_length(c)) for c in test_clips]

    class_arr = np.array([(ac.verb_class, ac.noun_class) for ac in classes])
    class_match = np.all(class_arr[:, None, :] == class_arr[None, :, :], axis=2).astype(np.float64)
    qb = np.array(query_buckets)
    cb = np.array(clip_buckets)
    bucket_match = (qb[:, None] == cb[None, :]).astype(np.float64)
    provenance = {
        "generator": GENERATOR_ID,
        "bucket_low": lo,
        "bucket_high": hi,
        "fallback_classes": fallback,
        "config": asdict(config),
    }
    return test_clips, classes, query_buckets, class_match, bucket_match, provenance


def synth_similarity(
    dataset: Dataset, config: SimConfig, train_reference: Dataset
) -> tuple[SimilarityMatrix, dict]:
    """Test-caption x test-clip similarity under the leakage construction.

    ``train_reference`` supplies the per-class train mean lengths; a class
    missing there falls back to the global train mean (noted in provenance).
    """
    test_clips, classes, query_buckets, class_match, bucket_match, provenance = _match_components(
        dataset, config, train_reference
    )
    lam = config.bias_strength
    values = (1.0 - lam) ** 2 * class_match + lam**2 * bucket_match

    if config.noise_stddev > 0:
        # one noise coordinate per embedding dimension of each test clip
        class_list = sorted({*classes, *(class_of(c) for c in train_reference.clips)})
        class_idx = {ac: i for i, ac in enumerate(class_list)}
        dim = len(class_list) + config.num_len_buckets
        rng = np.random.default_rng([config.seed, _NOISE_STREAM])
        noise = rng.normal(0.0, config.noise_stddev, size=(len(test_clips), dim))
        qi = np.array([class_idx[ac] for ac in classes])
        qb = np.array(query_buckets) + len(class_list)
        values = values + (1.0 - lam) * noise[:, qi].T + lam * noise[:, qb].T

    ids = tuple(c.clip_id for c in test_clips)
    return SimilarityMatrix(rows=ids, cols=ids, values=values), provenance


def simulate(config: SimConfig) -> SimOutput:
    """Generate a dataset and its own-reference similarity matrix."""
    dataset = synth_dataset(config)
    sim, provenance = synth_similarity(dataset, config, dataset)
    return SimOutput(dataset=dataset, sim_t2v=sim, provenance=provenance)


@dataclass(frozen=True)
class SweepRow:
    """One (seed, condition) cell of a sweep; alpha None = unfiltered."""

    seed: int
    alpha: float | None
    removed_count: int
    classes_touched: int
    mean_gt_rank: float
    recall_at_10: float
    mean_topk_len: float


def _condition_metrics(sim: SimilarityMatrix, dataset: Dataset, topk: int, row_indices=None):
    indices = range(len(sim.rows)) if row_indices is None else row_indices
    ranks = [gt_rank(sim, i, sim.rows[i]) for i in indices]
    k = min(topk, len(sim.cols))
    lengths = [topk_avg_length(sim, dataset, i, k) for i in indices]
    return (
        sum(ranks) / len(ranks),
        recall_at_k(ranks, 10),
        sum(lengths) / len(lengths),
    )


def bias_sweep(
    config: SimConfig, alphas, seeds, min_class_size: int = 11, topk: int = 20, on_condition=None
) -> list[SweepRow]:
    """Mechanism sweep: unfiltered baseline vs margin filter at each alpha.

    Per seed: generate data, score with the unfiltered train reference, then
    for each alpha filter the train side, re-derive similarities against the
    filtered reference, and score again. ``on_condition(seed, alpha, dataset,
    reference, sim)`` is called per cell (alpha None = baseline), e.g. to
    write the generated annotation and matrix files.
    """
    alphas = list(alphas)
    seeds = list(seeds)
    if not alphas or not seeds:
        raise ValueError("alphas and seeds must be non-empty")
    rows = []
    for seed in seeds:
        cfg = replace(config, seed=seed)
        dataset = synth_dataset(cfg)
        sim0, _ = synth_similarity(dataset, cfg, dataset)
        if on_condition is not None:
            on_condition(seed, None, dataset, dataset, sim0)
        mean_rank, r10, mean_len = _condition_metrics(sim0, dataset, topk)
        rows.append(SweepRow(seed, None, 0, 0, mean_rank, r10, mean_len))
        for alpha in alphas:
            filtered, report = filter_margin(
                dataset, FilterConfig(alpha=alpha, min_class_size=min_class_size)
            )
            sim1, _ = synth_similarity(dataset, cfg, filtered)
            if on_condition is not None:
                on_condition(seed, alpha, dataset, filtered, sim1)
            mean_rank, r10, mean_len = _condition_metrics(sim1, dataset, topk)
            rows.append(
                SweepRow(
                    seed, alpha, report.removed_count, report.classes_touched,
                    mean_rank, r10, mean_len,
                )
            )
    return rows


@dataclass(frozen=True)
class AblationRow:
    """One (seed, mode) cell of a single-class ablation; metrics cover only
    the ablated class's queries."""

    seed: int
    mode: str
    mean_gt_rank: float
    mean_topk_len: float


def single_class_ablation(
    config: SimConfig, action_class: ActionClass, fraction: float, seeds, topk: int = 20
) -> list[AblationRow]:
    """Remove-long vs remove-short ablation of one class across seeds."""
    rows = []
    for seed in seeds:
        cfg = replace(config, seed=seed)
        dataset = synth_dataset(cfg)
        sim0, _ = synth_similarity(dataset, cfg, dataset)
        targets = [
            i for i, rid in enumerate(sim0.rows) if class_of(dataset.by_id[rid]) == action_class
        ]
        if not targets:
            raise DegenerateInputError(f"no test queries of class {action_class}")
        mean_rank, _, mean_len = _condition_metrics(sim0, dataset, topk, targets)
        rows.append(AblationRow(seed, "baseline", mean_rank, mean_len))
        for mode in ("remove_long", "remove_short"):
            filtered, _ = filter_single_class(dataset, action_class, mode, fraction)
            sim1, _ = synth_similarity(dataset, cfg, filtered)
            mean_rank, _, mean_len = _condition_metrics(sim1, dataset, topk, targets)
            rows.append(AblationRow(seed, mode, mean_rank, mean_len))
    return rows
