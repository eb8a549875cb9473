"""Brute-force references shared by several test modules."""

import itertools

import numpy as np

from collusionlab.core import make_score_vector


def almost_equal_profile_count(rule, n):
    """Ordered n-tuples of orders whose tally has every gap at most one."""
    alpha = np.asarray(make_score_vector(rule))
    orders = np.array(list(itertools.permutations(range(rule.m))))
    per_order = np.zeros((len(orders), rule.m), dtype=np.int64)
    np.put_along_axis(per_order, orders, np.broadcast_to(alpha, orders.shape), axis=1)
    totals = np.zeros((1, rule.m), dtype=np.int64)
    for _ in range(n):
        totals = (totals[:, None, :] + per_order[None, :, :]).reshape(-1, rule.m)
    return int(np.count_nonzero(totals.max(axis=1) - totals.min(axis=1) <= 1))
