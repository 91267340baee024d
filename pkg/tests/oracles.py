"""Naive reference implementations for the ranking metrics.

Deliberately written with plain Python sorting and arithmetic, no numpy, so
they stay independent of the library code paths they are used to check.
Ties follow the same convention: descending score, ascending index.
"""

import math


def naive_ranking(scores):
    return [i for _, i in sorted(((-s, i) for i, s in enumerate(scores)))]


def naive_ndcg(scores, rels, depth=None):
    """nDCG for one query; None when no item has positive relevance."""
    if not any(r > 0 for r in rels):
        return None
    order = naive_ranking(scores)
    d = len(scores) if depth is None else min(depth, len(scores))
    dcg = 0.0
    for pos, idx in enumerate(order[:d], start=1):
        dcg += rels[idx] / math.log2(pos + 1)
    idcg = 0.0
    for pos, rel in enumerate(sorted(rels, reverse=True)[:d], start=1):
        idcg += rel / math.log2(pos + 1)
    return dcg / idcg


def naive_ap(scores, rels, threshold=1.0):
    """Average precision for one query; None when nothing is relevant."""
    relevant = [r >= threshold for r in rels]
    total = sum(relevant)
    if total == 0:
        return None
    hits = 0
    ap = 0.0
    for pos, idx in enumerate(naive_ranking(scores), start=1):
        if relevant[idx]:
            hits += 1
            ap += hits / pos
    return ap / total


def _rows(values):
    return [list(row) for row in values]


def _cols(values):
    return [list(col) for col in zip(*values)]


def naive_direction_mean(sim_rows, rel_rows, per_query):
    used = []
    for srow, rrow in zip(sim_rows, rel_rows):
        value = per_query(srow, rrow)
        if value is not None:
            used.append(value)
    if not used:
        return None
    return sum(used) / len(used)


def naive_ndcg_average(sim_values, rel_values, direction="avg", depth=None):
    fn = lambda s, r: naive_ndcg(s, r, depth)
    if direction == "t2v":
        return naive_direction_mean(_rows(sim_values), _rows(rel_values), fn)
    if direction == "v2t":
        return naive_direction_mean(_cols(sim_values), _cols(rel_values), fn)
    t2v = naive_ndcg_average(sim_values, rel_values, "t2v", depth)
    v2t = naive_ndcg_average(sim_values, rel_values, "v2t", depth)
    if t2v is None or v2t is None:
        return None
    return 0.5 * (t2v + v2t)


def naive_map_average(sim_values, rel_values, threshold=1.0, direction="avg"):
    fn = lambda s, r: naive_ap(s, r, threshold)
    if direction == "t2v":
        return naive_direction_mean(_rows(sim_values), _rows(rel_values), fn)
    if direction == "v2t":
        return naive_direction_mean(_cols(sim_values), _cols(rel_values), fn)
    t2v = naive_map_average(sim_values, rel_values, threshold, "t2v")
    v2t = naive_map_average(sim_values, rel_values, threshold, "v2t")
    if t2v is None or v2t is None:
        return None
    return 0.5 * (t2v + v2t)
