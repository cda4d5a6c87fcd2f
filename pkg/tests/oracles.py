"""Slow reference implementations used as test oracles."""

import numpy as np


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def brute_force_full_matching(cost, max_controls_per_case=None, max_cases_per_control=None):
    """Minimum total cost over every full matching.

    ``cost`` is an integer cases x controls matrix.  A set costs the sum
    over its case-control pairs that a star connects: sets are restricted
    to one case with several controls or one control with several cases,
    which is where every optimum lives.  Returns ``(best_cost, partition)``
    with the partition as a list of ``(cases, controls)`` tuples.
    """
    nc, nk = cost.shape
    items = [("c", i) for i in range(nc)] + [("k", j) for j in range(nk)]
    best, best_part = None, None
    for part in set_partitions(items):
        total = 0
        sets = []
        ok = True
        for blk in part:
            cs = [i for r, i in blk if r == "c"]
            ks = [j for r, j in blk if r == "k"]
            if not cs or not ks or (len(cs) > 1 and len(ks) > 1):
                ok = False
                break
            if len(cs) == 1 and max_controls_per_case is not None and len(ks) > max_controls_per_case:
                ok = False
                break
            if len(ks) == 1 and max_cases_per_control is not None and len(cs) > max_cases_per_control:
                ok = False
                break
            total += int(sum(cost[i, j] for i in cs for j in ks))
            sets.append((sorted(cs), sorted(ks)))
        if ok and (best is None or total < best):
            best, best_part = total, sets
    return best, best_part


def scaled_cost_matrix(case_xy, ctrl_xy, scale=10**6):
    d = np.sqrt(((np.asarray(case_xy)[:, None, :] - np.asarray(ctrl_xy)[None, :, :]) ** 2).sum(-1))
    return np.rint(d * scale).astype(np.int64)
