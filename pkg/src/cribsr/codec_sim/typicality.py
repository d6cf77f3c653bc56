"""Robust typicality with exact integer counts."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import UsageError
from ..prob_core import JointPmf


def joint_counts(seqs: Sequence[np.ndarray], shape: tuple[int, ...]) -> np.ndarray:
    """Counts of symbol tuples. Each sequence broadcasts to (K, n); returns (K, prod(shape))."""
    arrs = np.broadcast_arrays(*[np.atleast_2d(np.asarray(s, dtype=np.int64)) for s in seqs])
    k, n = arrs[0].shape
    flat = np.ravel_multi_index(tuple(arrs), shape)
    cells = int(np.prod(shape))
    offset = (np.arange(k, dtype=np.int64) * cells)[:, None]
    return np.bincount((flat + offset).ravel(), minlength=k * cells).reshape(k, cells)


def deviation_scores(seqs: Sequence[np.ndarray], table: np.ndarray, eps: float, slack: float = 0.0,
                     given: int = 0) -> np.ndarray:
    """Largest excess of ``|count - expected|`` over the allowance ``eps * expected + slack``.

    With ``given = 0`` the expected count of a tuple is ``n p``. With
    ``given = g`` the first g sequences are held fixed and the expectation is
    ``N(prefix) p(rest | prefix)``, i.e. conditional typicality given their
    empirical type. A candidate is typical when its score is <= 0. Cells
    with zero expectation get no slack.
    """
    counts = joint_counts(seqs, table.shape)
    k = counts.shape[0]
    if given == 0:
        n = np.broadcast_shapes(*[np.atleast_2d(np.asarray(s)).shape for s in seqs])[-1]
        expected = np.broadcast_to(n * table.ravel(), counts.shape)
    else:
        g = int(np.prod(table.shape[:given]))
        t = table.reshape(g, -1)
        tot = t.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(tot > 0, t / tot, 0.0)
        c = counts.reshape(k, g, -1)
        expected = (c.sum(axis=2, keepdims=True) * cond[None]).reshape(k, -1)
    allow = eps * expected + np.where(expected > 0, slack, 0.0)
    excess = np.abs(counts - expected) - allow
    return excess.max(axis=1)


def is_typical(seqs: Sequence[np.ndarray], joint: JointPmf, eps: float, slack: float = 0.0, given: int = 0) -> bool:
    """True when every tuple frequency is within ``eps * p`` of its probability.

    ``seqs`` follow the variable order of ``joint``. ``slack`` widens every
    positive-probability cell by that many counts and ``given`` conditions on
    the empirical type of the leading sequences; the defaults give the
    textbook definition.
    """
    if len(seqs) != len(joint.names):
        raise UsageError(f"{len(seqs)} sequences for {len(joint.names)} variables")
    lengths = {len(np.asarray(s)) for s in seqs}
    if len(lengths) != 1:
        raise UsageError(f"sequences have different lengths {sorted(lengths)}")
    for s, size in zip(seqs, joint.shape):
        a = np.asarray(s)
        if a.size and (a.min() < 0 or a.max() >= size):
            raise UsageError("sequence symbol outside its alphabet")
    return bool(deviation_scores(seqs, joint.probs, eps, slack, given)[0] <= 1e-9)


def typical_average_bound(joint: JointPmf, d: np.ndarray, eps: float, slack: float, n: int) -> float:
    """Bound on the empirical average of d over a typical pair with the given slack."""
    p = joint.probs
    expected = float((p * d).sum())
    extra = slack * float(d[p > 0].sum()) / n if n else 0.0
    return (1 + eps) * expected + extra
