from pathlib import Path

import pytest

from framebias.dataset import ClipRecord, Dataset

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def make_dataset(train_lengths, test_lengths, verb=1, noun=1, prefix="") -> Dataset:
    """Single-class dataset with the given train/test frame lengths."""
    clips = []
    for i, length in enumerate(train_lengths):
        clips.append(
            ClipRecord(f"{prefix}tr{i:03d}", "vid", "train", 0, length - 1, "cap", verb, noun)
        )
    for i, length in enumerate(test_lengths):
        clips.append(
            ClipRecord(f"{prefix}te{i:03d}", "vid", "test", 0, length - 1, "cap", verb, noun)
        )
    return Dataset(clips=tuple(clips))


def make_multiclass(spec) -> Dataset:
    """Dataset from {(verb, noun): (train_lengths, test_lengths)}."""
    clips = []
    for (verb, noun), (train_lengths, test_lengths) in spec.items():
        for i, length in enumerate(train_lengths):
            clips.append(
                ClipRecord(
                    f"tr_{verb}_{noun}_{i:03d}", "vid", "train", 0, length - 1,
                    f"cap {verb} {noun}", verb, noun,
                )
            )
        for i, length in enumerate(test_lengths):
            clips.append(
                ClipRecord(
                    f"te_{verb}_{noun}_{i:03d}", "vid", "test", 0, length - 1,
                    f"cap {verb} {noun}", verb, noun,
                )
            )
    return Dataset(clips=tuple(clips))
