"""Slow, independent reference implementations used only by tests."""

from fractions import Fraction
from itertools import product


def pairwise_auc(scores, labels):
    """Mann-Whitney: (concordant + 0.5 * tied) / (n_pos * n_neg), by enumeration."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = Fraction(0)
    for sp, sn in product(pos, neg):
        if sp > sn:
            total += 1
        elif sp == sn:
            total += Fraction(1, 2)
    return total / (len(pos) * len(neg))


def _node_impurity(labels):
    n = len(labels)
    q = Fraction(sum(labels), n)
    return 1 - q * q - (1 - q) * (1 - q)


def brute_cart(rows, labels, max_depth=None, depth=0):
    """Greedy CART by exhaustive enumeration with exact rational impurities.

    Returns nested tuples: ("leaf", Fraction) or ("split", feature, threshold, left, right).
    Features are scanned in index order and thresholds in increasing order;
    only a strictly better impurity replaces the incumbent.
    """
    n = len(labels)
    pos = sum(labels)
    if pos == 0 or pos == n or n < 2 or (max_depth is not None and depth >= max_depth):
        return ("leaf", Fraction(pos, n))
    best = None
    for f in range(len(rows[0])):
        values = sorted({r[f] for r in rows})
        for a, b in zip(values, values[1:]):
            t = (a + b) / 2
            left = [i for i in range(n) if rows[i][f] <= t]
            right = [i for i in range(n) if rows[i][f] > t]
            imp = (
                len(left) * _node_impurity([labels[i] for i in left])
                + len(right) * _node_impurity([labels[i] for i in right])
            ) / n
            if best is None or imp < best[0]:
                best = (imp, f, t, left, right)
    if best is None:
        return ("leaf", Fraction(pos, n))
    _, f, t, left, right = best
    return (
        "split",
        f,
        t,
        brute_cart([rows[i] for i in left], [labels[i] for i in left], max_depth, depth + 1),
        brute_cart([rows[i] for i in right], [labels[i] for i in right], max_depth, depth + 1),
    )


def brute_predict(tree, row):
    while tree[0] == "split":
        _, f, t, left, right = tree
        tree = left if row[f] <= t else right
    return tree[1]
