"""Independent reference computations used by the tests.

Nothing here imports the code under test.
"""

import itertools
import math


def brute_force_best(weights, capacity):
    """Exhaustive subset maximisation: max total <= capacity over all subsets."""
    best = 0.0
    for r in range(len(weights) + 1):
        for combo in itertools.combinations(range(len(weights)), r):
            total = math.fsum(weights[i] for i in combo)
            if total <= capacity and total > best:
                best = total
    return best


def triangle_q(v_line, current, pf):
    s = 3 ** 0.5 * v_line * current
    return s * math.sin(math.acos(pf))


def mask_total(weights, mask):
    return math.fsum(w for w, b in zip(weights, mask) if b)
