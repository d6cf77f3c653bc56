"""Independent reference computations used to derive frozen test values.

Nothing here imports the package's information or elimination code; the
point is to check it against plain loops and closed forms.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def h2(a: float) -> float:
    if a in (0.0, 1.0):
        return 0.0
    return -a * math.log2(a) - (1 - a) * math.log2(1 - a)


def loop_entropy(table, axes) -> float:
    """H of the marginal on ``axes``, by explicit summation over cells."""
    table = np.asarray(table, dtype=float)
    marg: dict[tuple, float] = {}
    for idx in itertools.product(*[range(s) for s in table.shape]):
        key = tuple(idx[a] for a in axes)
        marg[key] = marg.get(key, 0.0) + float(table[idx])
    return -sum(p * math.log2(p) for p in marg.values() if p > 0)


def loop_mi(table, a, b, given=()) -> float:
    a, b, given = tuple(a), tuple(b), tuple(given)
    return (loop_entropy(table, a + given) + loop_entropy(table, b + given)
            - loop_entropy(table, a + b + given) - (loop_entropy(table, given) if given else 0.0))


def bernoulli_p_vector(p1: float, D1: float, D2: float) -> tuple[float, float, float, float]:
    return p1, 1 - D1 - p1, 1 - D2 - p1, p1 + D1 + D2 - 1


def bernoulli_sweep(D1: float, D2: float, samples: int = 200001) -> dict:
    """Dense p1 sweep of the symmetric family; minima of the relevant functionals."""
    lo, hi = 1 - D1 - D2, min(1 - D1, 1 - D2, 2 - D1 - D2)
    p1 = np.linspace(lo, hi, samples)
    p2, p3, p4 = 1 - D1 - p1, 1 - D2 - p1, np.clip(p1 + D1 + D2 - 1, 0, None)

    def hv(*cols):
        tot = np.zeros_like(p1)
        for c in cols:
            c = np.clip(c, 1e-300, None)
            tot -= c * np.log2(c)
        return tot

    a, b = (p1 + p4) / 2, (p2 + p3) / 2
    total = hv(a, b, b, a) - hv(p1, p2, p3, p4)
    i_x2 = 1 - hv(p1 + p3, p2 + p4)
    h_x1_x2 = hv(p1 + p4, p2 + p3)
    return {
        "min_total": float(total.min()),
        "min_i_x2": float(i_x2.min()),
        "min_sc_r0": float(np.clip(total - h_x1_x2, 0, None).min()),
    }


def binomial_pmf(n: int, k: int, p: float) -> float:
    if p in (0.0, 1.0):
        return float(k == round(n * p))
    logc = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return math.exp(logc + k * math.log(p) + (n - k) * math.log1p(-p))


def binary_typical_probability(n: int, p: float, eps: float, slack: float = 0.0) -> float:
    """P(an i.i.d. Bern(p) block of length n is typical), summing over the count of ones."""
    total = 0.0
    for k in range(n + 1):
        ok = True
        for count, q in ((k, p), (n - k, 1 - p)):
            allow = eps * n * q + (slack if q > 0 else 0.0)
            if abs(count - n * q) > allow + 1e-12:
                ok = False
        if ok:
            total += binomial_pmf(n, k, p)
    return total


# ---------------------------------------------------------------------------
# projection oracle


def projection_membership(a: np.ndarray, b: np.ndarray, keep: list[int], elim: list[int],
                          points: np.ndarray, box: float = 1e3, tol: float = 1e-9) -> np.ndarray:
    """For each row of ``points`` (values of the kept variables), decide whether
    some values of the eliminated variables satisfy ``a v <= b``.

    The slice polyhedron in the eliminated coordinates is intersected with a
    large box and tested for a feasible vertex, vectorized over points.
    """
    ak, ae = a[:, keep], a[:, elim]
    rhs = b[None, :] - points @ ak.T  # (P, m)
    k = len(elim)
    if k == 0:
        return np.all(rhs >= -tol, axis=1)
    eye = np.eye(k)
    rows = np.vstack([ae, eye, -eye])
    rhs_all = np.hstack([rhs, np.full((len(points), 2 * k), box)])
    found = np.zeros(len(points), dtype=bool)
    for subset in itertools.combinations(range(len(rows)), k):
        m = rows[list(subset)]
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        y = np.linalg.solve(m, rhs_all[:, list(subset)].T).T  # (P, k)
        ok = np.all(y @ rows.T <= rhs_all + tol, axis=1)
        found |= ok
    return found


def grid(dims: int, hi: float, step: float = 1 / 32) -> np.ndarray:
    axis = np.arange(0.0, hi + 1e-12, step)
    return np.array(list(itertools.product(axis, repeat=dims))) if dims else np.zeros((1, 0))
