"""Relevancy-aware retrieval metrics over similarity matrices.

The ranking convention everywhere: gallery items sorted by descending score,
ties broken by ascending gallery index. Queries with no positive relevance
are excluded from averages and counted in the report. Aggregate means sum in
ascending query order, so results do not depend on evaluation schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from framebias.dataset import ActionClass, Dataset, class_of, frame_length
from framebias.errors import DegenerateInputError, NotFoundError, ShapeMismatchError
from framebias.matrices import RelevancyMatrix, SimilarityMatrix

DIRECTIONS = ("t2v", "v2t", "avg")


def ranking(scores) -> np.ndarray:
    """Gallery indices by descending score; equal scores keep index order."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.argsort(-scores, kind="stable")


def build_relevancy(
    query_classes, gallery_classes, row_ids=None, col_ids=None
) -> RelevancyMatrix:
    """Graded relevance from action classes: half per matching component.

    value = 0.5 * (verb match + noun match), so values lie in {0, 0.5, 1}
    and 1 means the full (verb, noun) pair agrees.
    """
    query_classes = list(query_classes)
    gallery_classes = list(gallery_classes)
    if not query_classes or not gallery_classes:
        raise ValueError("query and gallery class lists must be non-empty")
    qv = np.array([c.verb_class for c in query_classes])
    qn = np.array([c.noun_class for c in query_classes])
    gv = np.array([c.verb_class for c in gallery_classes])
    gn = np.array([c.noun_class for c in gallery_classes])
    values = 0.5 * (
        (qv[:, None] == gv[None, :]).astype(np.float64)
        + (qn[:, None] == gn[None, :]).astype(np.float64)
    )
    rows = tuple(row_ids) if row_ids is not None else tuple(f"q{i}" for i in range(len(query_classes)))
    cols = tuple(col_ids) if col_ids is not None else tuple(f"g{j}" for j in range(len(gallery_classes)))
    return RelevancyMatrix(rows=rows, cols=cols, values=values)


def class_relevance(a: ActionClass, b: ActionClass) -> float:
    return 0.5 * ((a.verb_class == b.verb_class) + (a.noun_class == b.noun_class))


def _rank_of(row: np.ndarray, gt_idx: int, tie: str = "index") -> int:
    gt_score = row[gt_idx]
    above = int(np.sum(row > gt_score))
    if tie == "optimistic":
        return 1 + above
    if tie == "pessimistic":
        return 1 + above + int(np.sum(row == gt_score)) - 1
    return 1 + above + int(np.sum(row[:gt_idx] == gt_score))


def gt_rank(sim: SimilarityMatrix, query_index: int, gt_gallery_id: str) -> int:
    """1-based rank of the ground-truth gallery item for one query."""
    if gt_gallery_id not in sim.col_index:
        raise NotFoundError(f"gallery id {gt_gallery_id!r} not present in matrix columns")
    return _rank_of(sim.values[query_index], sim.col_index[gt_gallery_id])


def recall_at_k(ranks, k: int) -> float:
    """Fraction of ranks at or above the cutoff."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranks = list(ranks)
    if not ranks:
        raise ValueError("ranks must be non-empty")
    return sum(1 for r in ranks if r <= k) / len(ranks)


def _discounts(n: int) -> np.ndarray:
    return 1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64))


def ndcg_query(sim_row, rel_row, depth: int | None = None) -> float:
    """Normalized discounted cumulative gain of one ranked gallery."""
    scores = np.asarray(sim_row, dtype=np.float64)
    rels = np.asarray(rel_row, dtype=np.float64)
    if scores.shape != rels.shape or scores.ndim != 1 or scores.size < 1:
        raise ShapeMismatchError("score and relevance rows must be equal-length 1-D vectors")
    if depth is not None and depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if not np.any(rels > 0):
        raise DegenerateInputError("query has no positively relevant gallery item")
    d = scores.size if depth is None else min(depth, scores.size)
    disc = _discounts(d)
    ranked = rels[ranking(scores)][:d]
    ideal = np.sort(rels)[::-1][:d]
    return float(np.sum(ranked * disc) / np.sum(ideal * disc))


def average_precision(sim_row, rel_row, threshold: float = 1.0) -> float:
    """AP with relevance binarized at the threshold."""
    scores = np.asarray(sim_row, dtype=np.float64)
    rels = np.asarray(rel_row, dtype=np.float64)
    if scores.shape != rels.shape or scores.ndim != 1 or scores.size < 1:
        raise ShapeMismatchError("score and relevance rows must be equal-length 1-D vectors")
    relevant = rels >= threshold
    total = int(relevant.sum())
    if total == 0:
        raise DegenerateInputError("query has no relevant gallery item at this threshold")
    hits = relevant[ranking(scores)]
    cum = np.cumsum(hits)
    positions = np.nonzero(hits)[0] + 1
    return float(np.sum(cum[hits] / positions) / total)


def _check_aligned(sim: SimilarityMatrix, rel: RelevancyMatrix) -> None:
    if sim.rows != rel.rows or sim.cols != rel.cols:
        raise ShapeMismatchError("similarity and relevancy matrices must share id mappings")


def _direction_mean(sim: SimilarityMatrix, rel: RelevancyMatrix, per_query) -> float:
    total = 0.0
    used = 0
    for i in range(len(sim.rows)):
        try:
            total += per_query(sim.values[i], rel.values[i])
        except DegenerateInputError:
            continue
        used += 1
    if used == 0:
        raise DegenerateInputError("every query is degenerate (no positive relevance)")
    return total / used


def ndcg_average(
    sim: SimilarityMatrix, rel: RelevancyMatrix, direction: str = "avg", depth: int | None = None
) -> float:
    """Mean nDCG over non-degenerate queries, per direction or averaged."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    _check_aligned(sim, rel)
    fn = lambda s, r: ndcg_query(s, r, depth)
    if direction == "t2v":
        return _direction_mean(sim, rel, fn)
    if direction == "v2t":
        return _direction_mean(sim.transposed(), rel.transposed(), fn)
    return 0.5 * (ndcg_average(sim, rel, "t2v", depth) + ndcg_average(sim, rel, "v2t", depth))


def map_average(
    sim: SimilarityMatrix, rel: RelevancyMatrix, threshold: float = 1.0, direction: str = "avg"
) -> float:
    """Mean AP over non-degenerate queries, per direction or averaged."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    _check_aligned(sim, rel)
    fn = lambda s, r: average_precision(s, r, threshold)
    if direction == "t2v":
        return _direction_mean(sim, rel, fn)
    if direction == "v2t":
        return _direction_mean(sim.transposed(), rel.transposed(), fn)
    return 0.5 * (
        map_average(sim, rel, threshold, "t2v") + map_average(sim, rel, threshold, "v2t")
    )


def topk_avg_length(sim: SimilarityMatrix, dataset: Dataset, query_index: int, k: int) -> float:
    """Mean frame length of the k best-ranked gallery clips for one query."""
    if not 1 <= k <= len(sim.cols):
        raise ValueError(f"k must be in [1, {len(sim.cols)}], got {k}")
    order = ranking(sim.values[query_index])[:k]
    lengths = []
    for j in order:
        clip = dataset.by_id.get(sim.cols[j])
        if clip is None:
            raise NotFoundError(f"gallery id {sim.cols[j]!r} does not resolve to a clip")
        lengths.append(frame_length(clip))
    return sum(lengths) / k


@dataclass(frozen=True)
class InspectEntry:
    gallery_id: str
    score: float
    caption: str
    frame_length: int
    relevance: float


def inspect_query(sim: SimilarityMatrix, dataset: Dataset, query_id: str, k: int) -> list[InspectEntry]:
    """Top-k retrieved gallery clips with metadata, for eyeballing a query."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if query_id not in sim.row_index:
        raise NotFoundError(f"query id {query_id!r} not present in matrix rows")
    query_clip = dataset.by_id.get(query_id)
    if query_clip is None:
        raise NotFoundError(f"query id {query_id!r} does not resolve to a clip")
    row = sim.values[sim.row_index[query_id]]
    out = []
    for j in ranking(row)[: min(k, len(sim.cols))]:
        clip = dataset.by_id.get(sim.cols[j])
        if clip is None:
            raise NotFoundError(f"gallery id {sim.cols[j]!r} does not resolve to a clip")
        out.append(
            InspectEntry(
                gallery_id=clip.clip_id,
                score=float(row[j]),
                caption=clip.caption,
                frame_length=frame_length(clip),
                relevance=class_relevance(class_of(query_clip), class_of(clip)),
            )
        )
    return out


@dataclass(frozen=True)
class DirectionMetrics:
    """Scores for one retrieval direction (queries on the rows)."""

    ndcg: float
    map: float
    recall: dict[int, float]
    gt_ranks: tuple[int, ...]
    mean_rank: float | None
    median_rank: float | None
    mean_rank_optimistic: float | None
    mean_rank_pessimistic: float | None
    num_queries: int
    num_degenerate_ndcg: int
    num_degenerate_ap: int
    num_missing_gt: int


@dataclass(frozen=True)
class MetricsReport:
    t2v: DirectionMetrics
    v2t: DirectionMetrics
    avg_ndcg: float
    avg_map: float


def _direction_block(
    sim: SimilarityMatrix,
    rel: RelevancyMatrix,
    threshold: float,
    depth: int | None,
    recall_ks,
) -> DirectionMetrics:
    ndcg_total = ap_total = 0.0
    ndcg_used = ap_used = 0
    ranks: list[int] = []
    ranks_opt: list[int] = []
    ranks_pes: list[int] = []
    missing = 0
    for i, row_id in enumerate(sim.rows):
        srow = sim.values[i]
        rrow = rel.values[i]
        try:
            ndcg_total += ndcg_query(srow, rrow, depth)
            ndcg_used += 1
        except DegenerateInputError:
            pass
        try:
            ap_total += average_precision(srow, rrow, threshold)
            ap_used += 1
        except DegenerateInputError:
            pass
        gt_idx = sim.col_index.get(row_id)
        if gt_idx is None:
            missing += 1
            continue
        ranks.append(_rank_of(srow, gt_idx))
        ranks_opt.append(_rank_of(srow, gt_idx, "optimistic"))
        ranks_pes.append(_rank_of(srow, gt_idx, "pessimistic"))
    if ndcg_used == 0 or ap_used == 0:
        raise DegenerateInputError("every query is degenerate (no positive relevance)")
    return DirectionMetrics(
        ndcg=ndcg_total / ndcg_used,
        map=ap_total / ap_used,
        recall={k: recall_at_k(ranks, k) for k in recall_ks} if ranks else {},
        gt_ranks=tuple(ranks),
        mean_rank=sum(ranks) / len(ranks) if ranks else None,
        median_rank=float(np.median(ranks)) if ranks else None,
        mean_rank_optimistic=sum(ranks_opt) / len(ranks_opt) if ranks_opt else None,
        mean_rank_pessimistic=sum(ranks_pes) / len(ranks_pes) if ranks_pes else None,
        num_queries=len(sim.rows),
        num_degenerate_ndcg=len(sim.rows) - ndcg_used,
        num_degenerate_ap=len(sim.rows) - ap_used,
        num_missing_gt=missing,
    )


def metrics_report(
    sim: SimilarityMatrix,
    dataset: Dataset,
    threshold: float = 1.0,
    depth: int | None = None,
    recall_ks=(1, 5, 10),
) -> MetricsReport:
    """Full two-direction evaluation of a similarity matrix against a dataset.

    Relevance comes from the clips' action classes; the ground-truth gallery
    item of a query is the entry with the same id on the other axis.
    """
    row_classes = []
    for rid in sim.rows:
        clip = dataset.by_id.get(rid)
        if clip is None:
            raise NotFoundError(f"matrix row id {rid!r} does not resolve to a clip")
        row_classes.append(class_of(clip))
    col_classes = []
    for cid in sim.cols:
        clip = dataset.by_id.get(cid)
        if clip is None:
            raise NotFoundError(f"matrix column id {cid!r} does not resolve to a clip")
        col_classes.append(class_of(clip))
    rel = build_relevancy(row_classes, col_classes, sim.rows, sim.cols)
    t2v = _direction_block(sim, rel, threshold, depth, recall_ks)
    v2t = _direction_block(sim.transposed(), rel.transposed(), threshold, depth, recall_ks)
    return MetricsReport(
        t2v=t2v,
        v2t=v2t,
        avg_ndcg=0.5 * (t2v.ndcg + v2t.ndcg),
        avg_map=0.5 * (t2v.map + v2t.map),
    )
