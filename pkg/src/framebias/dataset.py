"""Trimmed-clip annotation model: records, action classes, parsing, indexing.

A clip is a frame span of a longer video, annotated with one caption and a
(verb, noun) action-class pair. Datasets are immutable after construction
and keep ingestion order, so every downstream statistic is deterministic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from framebias.errors import AnnotationParseError, ValidationError

NATIVE_COLUMNS = (
    "clip_id",
    "video_id",
    "split",
    "start_frame",
    "stop_frame",
    "caption",
    "verb_class",
    "noun_class",
)

EK100_COLUMNS = (
    "narration_id",
    "video_id",
    "start_frame",
    "stop_frame",
    "narration",
    "verb_class",
    "noun_class",
)

SPLITS = ("train", "test")


@dataclass(frozen=True, order=True)
class ActionClass:
    """A (verb, noun) class pair; ordering is lexicographic on the pair."""

    verb_class: int
    noun_class: int

    def __str__(self) -> str:
        return f"{self.verb_class},{self.noun_class}"


@dataclass(frozen=True)
class ClipRecord:
    """One trimmed clip: frame span, caption, split, and action class."""

    clip_id: str
    video_id: str
    split: str
    start_frame: int
    stop_frame: int
    caption: str
    verb_class: int
    noun_class: int

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ValidationError(f"clip {self.clip_id!r}: split must be one of {SPLITS}, got {self.split!r}")
        if self.start_frame < 0:
            raise ValidationError(f"clip {self.clip_id!r}: start_frame must be >= 0, got {self.start_frame}")
        if self.stop_frame < self.start_frame:
            raise ValidationError(
                f"clip {self.clip_id!r}: stop_frame {self.stop_frame} < start_frame {self.start_frame}"
            )


def frame_length(clip: ClipRecord) -> int:
    """Number of frames in the clip's span, inclusive of both endpoints."""
    return clip.stop_frame - clip.start_frame + 1


def class_of(clip: ClipRecord) -> ActionClass:
    """The clip's (verb, noun) action class."""
    return ActionClass(clip.verb_class, clip.noun_class)


def build_class_index(clips: tuple[ClipRecord, ...]) -> dict[ActionClass, dict[str, tuple[str, ...]]]:
    """Map each action class to its clip ids, partitioned by split.

    Ids appear in ingestion order; rebuilding from the same clips is
    bit-identical to the index stored on the Dataset.
    """
    acc: dict[ActionClass, dict[str, list[str]]] = {}
    for clip in clips:
        entry = acc.setdefault(class_of(clip), {"train": [], "test": []})
        entry[clip.split].append(clip.clip_id)
    return {ac: {"train": tuple(e["train"]), "test": tuple(e["test"])} for ac, e in acc.items()}


@dataclass(frozen=True)
class Dataset:
    """Immutable, ordered collection of clips with a per-class split index."""

    clips: tuple[ClipRecord, ...]
    index: dict[ActionClass, dict[str, tuple[str, ...]]] = field(
        init=False, compare=False, repr=False
    )
    by_id: dict[str, ClipRecord] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        by_id: dict[str, ClipRecord] = {}
        for clip in self.clips:
            if clip.clip_id in by_id:
                raise ValidationError(f"duplicate clip_id {clip.clip_id!r}")
            by_id[clip.clip_id] = clip
        object.__setattr__(self, "by_id", by_id)
        object.__setattr__(self, "index", build_class_index(self.clips))

    def __len__(self) -> int:
        return len(self.clips)

    def __iter__(self):
        return iter(self.clips)

    def classes(self) -> list[ActionClass]:
        """All action classes present, in (verb, noun) lexicographic order."""
        return sorted(self.index)

    def split_clips(self, split: str) -> tuple[ClipRecord, ...]:
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        return tuple(c for c in self.clips if c.split == split)

    def clip_ids(self, action_class: ActionClass, split: str) -> tuple[str, ...]:
        """Ids of the class's clips in one split; empty if class unknown."""
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        entry = self.index.get(action_class)
        return entry[split] if entry is not None else ()

    def clips_of(self, action_class: ActionClass, split: str) -> tuple[ClipRecord, ...]:
        return tuple(self.by_id[i] for i in self.clip_ids(action_class, split))


def _int_field(value: str, name: str, line_num: int, label: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise AnnotationParseError(
            f"{label}line {line_num}: field {name!r} must be an integer, got {value!r}"
        ) from None


def _parse_native(text: str) -> list[ClipRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise AnnotationParseError("empty annotation file") from None
    if tuple(header) != NATIVE_COLUMNS:
        raise AnnotationParseError(
            f"line 1: expected header {','.join(NATIVE_COLUMNS)}, got {','.join(header)}"
        )
    clips = []
    for row in reader:
        if not row:
            continue
        num = reader.line_num
        if len(row) != len(NATIVE_COLUMNS):
            raise AnnotationParseError(
                f"line {num}: expected {len(NATIVE_COLUMNS)} fields, got {len(row)}"
            )
        clip_id, video_id, split, start, stop, caption, verb, noun = row
        if split not in SPLITS:
            raise AnnotationParseError(f"line {num}: split must be train or test, got {split!r}")
        clips.append(
            ClipRecord(
                clip_id=clip_id,
                video_id=video_id,
                split=split,
                start_frame=_int_field(start, "start_frame", num, ""),
                stop_frame=_int_field(stop, "stop_frame", num, ""),
                caption=caption,
                verb_class=_int_field(verb, "verb_class", num, ""),
                noun_class=_int_field(noun, "noun_class", num, ""),
            )
        )
    return clips


def _parse_ek100(text: str, split: str, label: str) -> list[ClipRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise AnnotationParseError(f"{label}: empty annotation file") from None
    positions = {}
    for name in EK100_COLUMNS:
        if name not in header:
            raise AnnotationParseError(f"{label}line 1: missing required column {name!r}")
        positions[name] = header.index(name)
    clips = []
    for row in reader:
        if not row:
            continue
        num = reader.line_num
        if len(row) != len(header):
            raise AnnotationParseError(
                f"{label}line {num}: expected {len(header)} fields, got {len(row)}"
            )
        get = lambda name: row[positions[name]]
        clips.append(
            ClipRecord(
                clip_id=get("narration_id"),
                video_id=get("video_id"),
                split=split,
                start_frame=_int_field(get("start_frame"), "start_frame", num, label),
                stop_frame=_int_field(get("stop_frame"), "stop_frame", num, label),
                caption=get("narration"),
                verb_class=_int_field(get("verb_class"), "verb_class", num, label),
                noun_class=_int_field(get("noun_class"), "noun_class", num, label),
            )
        )
    return clips


def parse_annotations(source, fmt: str = "native") -> Dataset:
    """Parse annotation file content into a Dataset.

    ``fmt="native"`` takes one file's text (split column per row).
    ``fmt="ek100_pair"`` takes a (train_text, test_text) pair of EK-100
    style files; split is assigned by which file a row came from, and
    columns beyond the required ones are ignored.
    """
    if fmt == "native":
        if not isinstance(source, str):
            raise ValueError("native format expects a single file's text content")
        clips = _parse_native(source)
    elif fmt == "ek100_pair":
        try:
            train_text, test_text = source
        except (TypeError, ValueError):
            raise ValueError("ek100_pair format expects (train_text, test_text)") from None
        clips = _parse_ek100(train_text, "train", "train file, ")
        clips += _parse_ek100(test_text, "test", "test file, ")
    else:
        raise ValueError(f"unknown annotation format {fmt!r}")
    return Dataset(clips=tuple(clips))


def load_annotations(paths, fmt: str = "native") -> Dataset:
    """Read one path (native) or a (train, test) path pair (ek100_pair)."""
    if fmt == "native":
        if isinstance(paths, (list, tuple)):
            if len(paths) != 1:
                raise ValueError("native format expects exactly one path")
            paths = paths[0]
        with open(paths, encoding="utf-8", newline="") as fh:
            return parse_annotations(fh.read(), fmt)
    if fmt == "ek100_pair":
        if not isinstance(paths, (list, tuple)) or len(paths) != 2:
            raise ValueError("ek100_pair format expects (train_path, test_path)")
        texts = []
        for p in paths:
            with open(p, encoding="utf-8", newline="") as fh:
                texts.append(fh.read())
        return parse_annotations(tuple(texts), fmt)
    raise ValueError(f"unknown annotation format {fmt!r}")


def to_native_csv(dataset: Dataset) -> str:
    """Serialize to the native format; re-parsing yields an equal Dataset."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(NATIVE_COLUMNS)
    for c in dataset.clips:
        writer.writerow(
            [c.clip_id, c.video_id, c.split, c.start_frame, c.stop_frame, c.caption, c.verb_class, c.noun_class]
        )
    return buf.getvalue()
