"""Per-class and global frame-length discrepancy statistics.

All functions are pure views over an immutable Dataset; output order is
fixed by sort rules (never by evaluation order).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from framebias.dataset import ActionClass, Dataset, frame_length
from framebias.errors import DegenerateInputError, NotFoundError


@dataclass(frozen=True)
class ClassStats:
    """Train/test counts, mean lengths, and their absolute gap for one class.

    Means are None for an empty split; discrepancy is None unless both
    splits are populated.
    """

    action_class: ActionClass
    train_count: int
    test_count: int
    train_mean_len: float | None
    test_mean_len: float | None
    discrepancy: float | None


@dataclass(frozen=True)
class LengthHistogram:
    """Per-bin train/test clip counts; bins cover [k*w, (k+1)*w) from 0."""

    bin_width: int
    bins: tuple[tuple[int, int, int], ...]  # (bin_start, train_count, test_count)


def _mean_lengths(clips) -> float | None:
    if not clips:
        return None
    return sum(frame_length(c) for c in clips) / len(clips)


def _stats_for(dataset: Dataset, action_class: ActionClass) -> ClassStats:
    train = dataset.clips_of(action_class, "train")
    test = dataset.clips_of(action_class, "test")
    train_mean = _mean_lengths(train)
    test_mean = _mean_lengths(test)
    disc = abs(train_mean - test_mean) if train_mean is not None and test_mean is not None else None
    return ClassStats(
        action_class=action_class,
        train_count=len(train),
        test_count=len(test),
        train_mean_len=train_mean,
        test_mean_len=test_mean,
        discrepancy=disc,
    )


def class_stats(dataset: Dataset) -> list[ClassStats]:
    """One entry per action class present, in (verb, noun) order."""
    return [_stats_for(dataset, ac) for ac in dataset.classes()]


def global_length_summary(dataset: Dataset) -> tuple[float, float, int, int]:
    """(train_mean, test_mean, train_count, test_count) over whole splits."""
    train = dataset.split_clips("train")
    test = dataset.split_clips("test")
    if not train or not test:
        raise DegenerateInputError("global length summary requires non-empty train and test splits")
    return (_mean_lengths(train), _mean_lengths(test), len(train), len(test))


def length_histogram(
    dataset: Dataset, action_class: ActionClass | None = None, bin_width: int = 30
) -> LengthHistogram:
    """Tally clip lengths into fixed-width bins, split side by side.

    ``action_class=None`` tallies every clip; otherwise only that class's
    clips (unknown class raises NotFoundError).
    """
    if bin_width <= 0:
        raise ValueError(f"bin_width must be > 0, got {bin_width}")
    if action_class is None:
        clips = dataset.clips
    else:
        if action_class not in dataset.index:
            raise NotFoundError(f"action class {action_class} not present in dataset")
        clips = dataset.clips_of(action_class, "train") + dataset.clips_of(action_class, "test")
    counts: dict[int, list[int]] = {}
    for clip in clips:
        b = (frame_length(clip) // bin_width) * bin_width
        cell = counts.setdefault(b, [0, 0])
        cell[0 if clip.split == "train" else 1] += 1
    if not counts:
        return LengthHistogram(bin_width=bin_width, bins=())
    top = max(counts)
    bins = tuple(
        (start, *counts.get(start, (0, 0))) for start in range(0, top + bin_width, bin_width)
    )
    return LengthHistogram(bin_width=bin_width, bins=bins)


def discrepancy_table(dataset: Dataset, min_count: int = 1) -> list[ClassStats]:
    """Classes ranked by discrepancy, largest first; ties in class order.

    Only classes with train_count >= min_count, test_count >= 1, and a
    defined discrepancy are listed.
    """
    rows = [
        s
        for s in class_stats(dataset)
        if s.discrepancy is not None and s.train_count >= min_count and s.test_count >= 1
    ]
    rows.sort(key=lambda s: -s.discrepancy)  # stable: ties keep class order
    return rows


def histogram_csv(hist: LengthHistogram) -> str:
    """3-column delimited plot data: bin_start,train_count,test_count."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_start", "train_count", "test_count"])
    for bin_start, train_count, test_count in hist.bins:
        writer.writerow([bin_start, train_count, test_count])
    return buf.getvalue()
