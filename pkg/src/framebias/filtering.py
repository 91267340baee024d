"""Debiasing filters: greedy per-class margin filter and naive single-class removal.

The margin filter walks classes in (verb, noun) order and, per class,
repeatedly deletes the one train clip whose removal brings the train mean
length closest to the class's test mean, until the gap is within the margin,
the class would shrink below the size floor, or no removal helps. Only train
clips are ever deleted.

All mean comparisons use exact integer arithmetic (lengths are integers and
targets are rationals), so tie-breaking and stopping are float-free and
deterministic.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import ClassVar

from framebias.audit import ClassStats
from framebias.dataset import ActionClass, ClipRecord, Dataset, frame_length
from framebias.errors import NotFoundError, ShapeMismatchError
from framebias.matrices import SimilarityMatrix

STOP_WITHIN_MARGIN = "within_margin"
STOP_SIZE_FLOOR = "size_floor"
STOP_NO_IMPROVEMENT = "no_improvement"
SKIPPED_NO_TEST = "skipped_no_test"
SKIPPED_NO_TRAIN = "skipped_no_train"
FRACTION_REMOVED = "fraction_removed"  # used by the single-class filter only

MODES = ("remove_long", "remove_short")


@dataclass(frozen=True)
class FilterConfig:
    """Margin filter knobs: margin alpha (frames) and train-size floor."""

    alpha: float
    min_class_size: int = 11
    deterministic_seedless: ClassVar[bool] = True  # the filter has no random state

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.min_class_size < 1:
            raise ValueError(f"min_class_size must be >= 1, got {self.min_class_size}")


@dataclass(frozen=True)
class ClassFilterOutcome:
    action_class: ActionClass
    before: ClassStats
    after: ClassStats
    stop_reason: str


@dataclass(frozen=True)
class FilterReport:
    """Which clips were removed and how each class ended up."""

    removed_clip_ids: tuple[str, ...]
    per_class: tuple[ClassFilterOutcome, ...]
    removed_count: int
    classes_touched: int
    removed_fraction: float


def _stats(action_class: ActionClass, train_n: int, train_sum: int, test_n: int, test_sum: int) -> ClassStats:
    train_mean = train_sum / train_n if train_n else None
    test_mean = test_sum / test_n if test_n else None
    disc = abs(train_mean - test_mean) if train_n and test_n else None
    return ClassStats(
        action_class=action_class,
        train_count=train_n,
        test_count=test_n,
        train_mean_len=train_mean,
        test_mean_len=test_mean,
        discrepancy=disc,
    )


def _greedy_class_removals(
    train: tuple[ClipRecord, ...], test_sum: int, test_n: int, config: FilterConfig
) -> tuple[list[str], str]:
    """Removal ids (in order) and the stop reason for one class."""
    entries = sorted((frame_length(c), c.clip_id) for c in train)
    lengths = [e[0] for e in entries]
    n = len(entries)
    total = sum(lengths)
    t_sum, t_n = test_sum, test_n
    removed: list[str] = []
    while True:
        # |train_mean - target| <= alpha; Fraction-vs-float compares exactly
        gap = abs(t_n * total - n * t_sum)
        if Fraction(gap, n * t_n) <= config.alpha:
            return removed, STOP_WITHIN_MARGIN
        if n - 1 < config.min_class_size:
            return removed, STOP_SIZE_FLOOR
        # Removing length l leaves gap |K - t_n*l| / ((n-1)*t_n) where
        # K = t_n*total - t_sum*(n-1); best l is the one nearest K/t_n.
        k_scaled = t_n * total - t_sum * (n - 1)
        pos = bisect.bisect_left(lengths, k_scaled / t_n)
        candidates = []
        if pos < n:
            candidates.append(pos)  # head of the group with length >= K/t_n
        if pos > 0:
            candidates.append(bisect.bisect_left(lengths, lengths[pos - 1]))
        best = None
        best_key = None
        for idx in candidates:
            length, clip_id = entries[idx]
            d = abs(k_scaled - t_n * length)
            # ties prefer the clip farther from the target, then smaller id
            key = (d, -abs(t_n * length - t_sum), clip_id)
            if best_key is None or key < best_key:
                best, best_key = idx, key
        length, clip_id = entries[best]
        if abs(k_scaled - t_n * length) * n >= gap * (n - 1):
            return removed, STOP_NO_IMPROVEMENT
        entries.pop(best)
        lengths.pop(best)
        total -= length
        n -= 1
        removed.append(clip_id)


def filter_margin(dataset: Dataset, config: FilterConfig) -> tuple[Dataset, FilterReport]:
    """Apply the greedy margin filter to every class; test clips pass through."""
    removed_ids: list[str] = []
    outcomes: list[ClassFilterOutcome] = []
    for ac in dataset.classes():
        train = dataset.clips_of(ac, "train")
        test = dataset.clips_of(ac, "test")
        train_sum = sum(frame_length(c) for c in train)
        test_sum = sum(frame_length(c) for c in test)
        before = _stats(ac, len(train), train_sum, len(test), test_sum)
        if not train:
            outcomes.append(ClassFilterOutcome(ac, before, before, SKIPPED_NO_TRAIN))
            continue
        if not test:
            outcomes.append(ClassFilterOutcome(ac, before, before, SKIPPED_NO_TEST))
            continue
        removed, reason = _greedy_class_removals(train, test_sum, len(test), config)
        removed_set = set(removed)
        kept_sum = train_sum - sum(frame_length(c) for c in train if c.clip_id in removed_set)
        after = _stats(ac, len(train) - len(removed), kept_sum, len(test), test_sum)
        outcomes.append(ClassFilterOutcome(ac, before, after, reason))
        removed_ids.extend(removed)
    return _finalize(dataset, removed_ids, outcomes)


def filter_single_class(
    dataset: Dataset, action_class: ActionClass, mode: str, fraction: float
) -> tuple[Dataset, FilterReport]:
    """Remove the longest or shortest ceil(fraction * n) train clips of one class."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if action_class not in dataset.index:
        raise NotFoundError(f"action class {action_class} not present in dataset")
    train = dataset.clips_of(action_class, "train")
    test = dataset.clips_of(action_class, "test")
    if len(train) < 2:
        raise ValueError(f"class {action_class} has {len(train)} train clips; need >= 2")
    # guard against float noise pushing an exact product just above an integer
    count = max(1, math.ceil(fraction * len(train) - 1e-9))
    if mode == "remove_long":
        order = sorted(train, key=lambda c: (-frame_length(c), c.clip_id))
    else:
        order = sorted(train, key=lambda c: (frame_length(c), c.clip_id))
    removed = [c.clip_id for c in order[:count]]
    train_sum = sum(frame_length(c) for c in train)
    test_sum = sum(frame_length(c) for c in test)
    before = _stats(action_class, len(train), train_sum, len(test), test_sum)
    kept_sum = train_sum - sum(frame_length(c) for c in order[:count])
    after = _stats(action_class, len(train) - count, kept_sum, len(test), test_sum)
    outcome = ClassFilterOutcome(action_class, before, after, FRACTION_REMOVED)
    return _finalize(dataset, removed, [outcome])


def _finalize(
    dataset: Dataset, removed_ids: list[str], outcomes: list[ClassFilterOutcome]
) -> tuple[Dataset, FilterReport]:
    removed_set = set(removed_ids)
    kept = tuple(c for c in dataset.clips if c.clip_id not in removed_set)
    touched = sum(1 for o in outcomes if o.after.train_count < o.before.train_count)
    report = FilterReport(
        removed_clip_ids=tuple(removed_ids),
        per_class=tuple(outcomes),
        removed_count=len(removed_ids),
        classes_touched=touched,
        removed_fraction=len(removed_ids) / len(dataset.clips) if dataset.clips else 0.0,
    )
    return Dataset(clips=kept), report


def sum_similarity_matrices(matrices, mean: bool = False) -> SimilarityMatrix:
    """Elementwise sum of score matrices sharing identical id mappings.

    ``mean=True`` divides by the number of matrices (normalized variant).
    """
    matrices = list(matrices)
    if not matrices:
        raise ValueError("at least one similarity matrix is required")
    first = matrices[0]
    total = first.values.copy()
    for m in matrices[1:]:
        if m.rows != first.rows or m.cols != first.cols:
            raise ShapeMismatchError("matrices must share identical row/column id mappings")
        total += m.values
    if mean:
        total /= len(matrices)
    return SimilarityMatrix(rows=first.rows, cols=first.cols, values=total)
