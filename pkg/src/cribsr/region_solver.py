"""Rate regions for successive refinement with cribbing decoders.

A region for a fixed joint distribution is a pair of lower bounds on
``R0 + R1`` and on ``R0``. Frontiers take the union over all joints that
meet the distortion budgets and report ``R1_min`` as a function of ``R0``.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import DomainError, StructuralError, UsageError
from .prob_core import (
    CribFunction,
    DistortionSpec,
    JointPmf,
    adjoin_function,
    binary_entropy,
    conditional_entropy,
    entropy,
    extend_with_function,
    is_function_of,
    marginalize,
    mutual_information,
)

X, X1, X2, Z1, U = "X", "X1", "X2", "Z1", "U"


class CribbingMode(enum.Enum):
    NONCAUSAL = "noncausal"
    STRICTLY_CAUSAL = "strictly-causal"
    CAUSAL = "causal"

    @classmethod
    def parse(cls, text: str) -> "CribbingMode":
        key = text.strip().lower().replace("_", "-")
        aliases = {"nc": "noncausal", "non-causal": "noncausal", "sc": "strictly-causal", "c": "causal"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise UsageError(f"unknown cribbing mode {text!r}") from None


@dataclass(frozen=True)
class CribbingVariant:
    """Perfect cribbing when ``g`` is None, else cribbing through ``g``."""

    g: CribFunction | None = None

    @property
    def perfect(self) -> bool:
        return self.g is None

    @property
    def name(self) -> str:
        return "perfect" if self.g is None else "detfn"

    @property
    def crib_var(self) -> str:
        return X1 if self.g is None else Z1


PERFECT = CribbingVariant()


def deterministic(g: CribFunction) -> CribbingVariant:
    return CribbingVariant(g)


def _plus(a: float) -> float:
    return max(a, 0.0)


@dataclass(frozen=True)
class RegionSpec:
    """Lower bounds ``R0 + R1 >= sum_rate_lb`` and ``R0 >= r0_lb``.

    ``conf_lb`` (conferencing only) bounds ``R0 + R12`` from below.
    """

    sum_rate_lb: float
    r0_lb: float
    conf_lb: float | None = None
    label: str = ""

    def __post_init__(self):
        for name in ("sum_rate_lb", "r0_lb", "conf_lb"):
            v = getattr(self, name)
            if v is not None and (not math.isfinite(v) or v < 0):
                raise DomainError(f"{name} must be finite and >= 0, got {v}")

    def contains(self, r0: float, r1: float, r12: float = math.inf, tol: float = 1e-12) -> bool:
        if r0 < -tol or r1 < -tol:
            return False
        ok = r0 + r1 >= self.sum_rate_lb - tol and r0 >= self.r0_lb - tol
        if self.conf_lb is not None and not math.isinf(r12):
            ok = ok and r0 + r12 >= self.conf_lb - tol
        return ok

    def r1_min(self, r0: float) -> float:
        """Smallest private rate at common rate ``r0`` (inf when ``r0`` is too small)."""
        if r0 < self.r0_lb:
            return math.inf
        return _plus(self.sum_rate_lb - r0)

    def corner_points(self) -> list[tuple[float, float]]:
        r0 = min(self.r0_lb, self.sum_rate_lb)
        return [(r0, self.sum_rate_lb - r0), (self.sum_rate_lb, 0.0)]

    def as_dict(self) -> dict:
        d = {"label": self.label, "sum_rate_lb": self.sum_rate_lb, "r0_lb": self.r0_lb}
        if self.conf_lb is not None:
            d["conf_lb"] = self.conf_lb
        return d


# ---------------------------------------------------------------------------
# single-distribution regions


def _require(p: JointPmf, *names: str) -> None:
    missing = [n for n in names if n not in p]
    if missing:
        raise UsageError(f"joint lacks variables {missing}; has {p.names}")


def _with_crib(p: JointPmf, variant: CribbingVariant) -> JointPmf:
    if variant.perfect:
        return p
    g = variant.g
    if Z1 in p:
        expected = extend_with_function(marginalize(p, [n for n in p.names if n != Z1]), X1, g, Z1)
        if p.size(Z1) != expected.size(Z1) or not p.allclose(expected, atol=1e-9):
            raise StructuralError("Z1 present but not equal to g(X1)")
        return p
    return extend_with_function(p, X1, g, Z1)


def sr_region(p: JointPmf, mode: CribbingMode, variant: CribbingVariant = PERFECT) -> RegionSpec:
    """Region for one joint under the given cribbing mode and variant."""
    _require(p, X, X1, X2)
    q = _with_crib(p, variant)
    c = variant.crib_var
    if not variant.perfect and variant.g.is_identity:
        # Z1 only relabels X1; evaluate on X1 so both variants agree to the bit
        q = p if Z1 not in p else marginalize(p, [n for n in p.names if n != Z1])
        c = X1
    if mode is CribbingMode.CAUSAL:
        _require(q, U)
        if not is_function_of(q, X2, (U, c)):
            raise StructuralError(f"causal region needs X2 to be a function of (U, {c})")
        w = U
    else:
        w = X2
    total = mutual_information(q, X, (X1, w))
    info_cw = mutual_information(q, X, (c, w)) if c != X1 else total
    if mode is CribbingMode.NONCAUSAL:
        r0 = info_cw - entropy(q, c)
    else:
        r0 = info_cw - conditional_entropy(q, c, w)
    return RegionSpec(total, _plus(r0), label=f"{mode.value}/{variant.name}")


def equitz_cover_region(p: JointPmf) -> RegionSpec:
    """Successive refinement without cribbing."""
    _require(p, X, X1, X2)
    return RegionSpec(mutual_information(p, X, (X1, X2)), mutual_information(p, X, X2), label="no-cribbing")


def conferencing_region(p: JointPmf) -> RegionSpec:
    """Decoders linked by a rate-limited conference channel from decoder 1 to 2."""
    _require(p, X, X1, X2)
    return RegionSpec(
        mutual_information(p, X, (X1, X2)), 0.0, conf_lb=mutual_information(p, X, X2), label="conferencing"
    )


def region(p: JointPmf, mode: CribbingMode | None, variant: CribbingVariant = PERFECT) -> RegionSpec:
    """``sr_region`` with ``mode=None`` standing for no cribbing."""
    if mode is None:
        return equitz_cover_region(p)
    return sr_region(p, mode, variant)


# ---------------------------------------------------------------------------
# frontier search


@dataclass(frozen=True)
class Frontier:
    mode: CribbingMode | None
    variant: CribbingVariant
    D1: float
    D2: float
    points: tuple[tuple[float, float], ...]
    provenance: dict = field(default_factory=dict, compare=False)
    joints: tuple[JointPmf | None, ...] = field(default=(), compare=False, repr=False)
    coords: str = "sr"

    def __post_init__(self):
        r0s = [pt[0] for pt in self.points]
        if any(b <= a for a, b in zip(r0s, r0s[1:])):
            raise UsageError("frontier points must be strictly increasing in R0")
        if self.coords == "sr":
            r1s = [pt[1] for pt in self.points]
            if any(b > a + 1e-12 for a, b in zip(r1s, r1s[1:])):
                raise UsageError("R1_min must be nonincreasing in R0")

    @property
    def mode_label(self) -> str:
        return "no-cribbing" if self.mode is None else self.mode.value

    @property
    def empty(self) -> bool:
        return not self.points

    def r1_at(self, r0: float) -> float:
        """Step interpolation: the best certified point with R0' <= r0."""
        best = math.inf
        for a, b in self.points:
            if a <= r0 + 1e-12:
                best = min(best, b)
        return best


def cascade_transform(f: Frontier) -> Frontier:
    """Map (R0, R1) points to cascade coordinates (R12, R1_cascade) = (R0, R0 + R1)."""
    pts = tuple((r0, r0 + r1) for r0, r1 in f.points)
    prov = dict(f.provenance, transform="cascade")
    return Frontier(f.mode, f.variant, f.D1, f.D2, pts, prov, f.joints, coords="cascade")


def inverse_cascade_transform(f: Frontier) -> Frontier:
    pts = tuple((r12, r1c - r12) for r12, r1c in f.points)
    prov = {k: v for k, v in f.provenance.items() if k != "transform"}
    return Frontier(f.mode, f.variant, f.D1, f.D2, pts, prov, f.joints, coords="sr")


@dataclass(frozen=True)
class FeasibleParameterization:
    """Searchable family of joints ``P(X) P(X1, W | X)``.

    ``W`` is X2 for non-causal, strictly causal and no-cribbing searches, and
    the auxiliary U for causal searches, in which case X2 = f(U, crib).
    """

    x1_size: int = 2
    x2_size: int = 2
    grid_step: float = 1 / 64
    u_cap: int = 6
    u_size: int | None = None
    f_table: tuple[tuple[int, ...], ...] | None = None
    max_lattice: int = 400_000
    refine: bool = True

    def __post_init__(self):
        if not 0 < self.grid_step <= 0.25:
            raise UsageError(f"grid step must lie in (0, 0.25], got {self.grid_step}")
        if self.x1_size < 1 or self.x2_size < 1:
            raise UsageError("alphabets must be nonempty")

    def resolved_u_size(self, x_size: int) -> int:
        bound = x_size * self.x1_size + 4
        size = self.u_size if self.u_size is not None else min(bound, self.u_cap, 6)
        if size > bound:
            raise UsageError(f"|U| = {size} exceeds the cardinality bound {bound}")
        return size


def canonical_f(u_size: int, crib_size: int, x2_size: int) -> np.ndarray:
    """X2 = f(u, c): u cycles through every map from crib symbols to X2 symbols."""
    maps = list(itertools.product(range(x2_size), repeat=crib_size))
    return np.array([maps[u % len(maps)] for u in range(u_size)], dtype=int)


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(total + parts - 2 - prev)
        rows.append(row)
    return np.array(rows, dtype=np.int64)


def _n_compositions(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


class _Family:
    """Vectorised evaluation of (sum-rate bound, R0 bound, distortions) over a batch of joints."""

    def __init__(self, px: np.ndarray, spec: DistortionSpec, mode: CribbingMode | None,
                 variant: CribbingVariant, param: FeasibleParameterization):
        self.px = np.asarray(px, dtype=float)
        self.mode = mode
        self.variant = variant
        self.spec = spec
        nx = len(self.px)
        n1 = param.x1_size
        g = variant.g if variant.g is not None else CribFunction.identity(n1)
        if g.domain_size != n1:
            raise UsageError(f"crib function has domain {g.domain_size}, X1 has {n1} symbols")
        self.crib = np.zeros((n1, g.range_size))
        self.crib[np.arange(n1), g.table] = 1.0
        if mode is CribbingMode.CAUSAL:
            nw = param.resolved_u_size(nx)
            crib_size = n1 if variant.perfect else g.range_size
            f = np.array(param.f_table) if param.f_table is not None else canonical_f(nw, crib_size, param.x2_size)
            if f.shape != (nw, crib_size):
                raise UsageError(f"f table must have shape {(nw, crib_size)}, got {f.shape}")
            self.f = f
            # X2 as a function of (u, x1) via the crib
            crib_of_x1 = np.arange(n1) if variant.perfect else np.asarray(g.table)
            self.x2_of = f[:, crib_of_x1].T  # shape (n1, nw)
        else:
            nw = param.x2_size
            self.f = None
            self.x2_of = np.broadcast_to(np.arange(nw), (n1, nw))
        self.shape = (nx, n1, nw)
        if spec.d1.shape != (nx, n1) or spec.d2.shape != (nx, param.x2_size):
            raise UsageError(
                f"distortion tables {spec.d1.shape}, {spec.d2.shape} do not match alphabets {(nx, n1, param.x2_size)}"
            )
        self.x2_size = param.x2_size
        # per-cell distortion weights on the (x, x1, w) table
        self.w1 = np.broadcast_to(spec.d1[:, :, None], self.shape).copy()
        self.w2 = spec.d2[:, self.x2_of]  # (nx, n1, nw)
        self.hx = -np.sum(self.px[self.px > 0] * np.log2(self.px[self.px > 0]))

    @staticmethod
    def _h(m: np.ndarray) -> np.ndarray:
        flat = m.reshape(m.shape[0], -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(flat > 0, -flat * np.log2(flat), 0.0)
        return terms.sum(axis=1)

    def evaluate(self, t: np.ndarray):
        """t: (N, nx, n1, nw) joint tables. Returns (s, a, d1, d2) arrays."""
        h = self._h
        h_x1w = h(t.sum(axis=1))
        h_xx1w = h(t)
        s = self.hx + h_x1w - h_xx1w
        h_w = h(t.sum(axis=(1, 2)))
        if self.mode is None:
            a = self.hx + h_w - h(t.sum(axis=2))
        else:
            tc = np.einsum("nxaw,ac->nxcw", t, self.crib)
            h_xcw = h(tc)
            if self.mode is CribbingMode.NONCAUSAL:
                a = self.hx + h(tc.sum(axis=1)) - h_xcw - h(tc.sum(axis=(1, 3)))
            else:
                a = self.hx + h_w - h_xcw
        a = np.maximum(a, 0.0)
        d1 = np.einsum("nxaw,xaw->n", t, self.w1)
        d2 = np.einsum("nxaw,xaw->n", t, self.w2)
        return s, a, d1, d2

    def to_joint(self, t: np.ndarray) -> JointPmf:
        if self.mode is CribbingMode.CAUSAL:
            p = JointPmf((X, X1, U), t)
            p = adjoin_function(p, (X1, U), self.x2_of, X2, size=self.x2_size)
        else:
            p = JointPmf((X, X1, X2), t)
        if not self.variant.perfect:
            p = extend_with_function(p, X1, self.variant.g, Z1)
        return p


class FrontierSearch:
    """Grid enumeration plus local polish over a :class:`FeasibleParameterization`."""

    def __init__(self, source: JointPmf, spec: DistortionSpec, mode: CribbingMode | None,
                 variant: CribbingVariant = PERFECT, param: FeasibleParameterization | None = None):
        if source.names != (X,):
            raise UsageError(f"source must be a pmf over X alone, got {source.names}")
        self.param = param or FeasibleParameterization()
        self.fam = _Family(source.probs, spec, mode, variant, self.param)
        self.spec = spec
        self.mode = mode
        self.variant = variant
        self._lattice()

    # -- lattice -----------------------------------------------------------
    def _lattice(self):
        nx, n1, nw = self.fam.shape
        cells = n1 * nw
        steps = max(1, int(round(1 / self.param.grid_step)))
        while steps > 1 and _n_compositions(steps, cells) ** 1 > self.param.max_lattice:
            steps //= 2
        comps = _compositions(steps, cells) / steps  # conditional tables per x-slice
        w1 = self.fam.w1.reshape(nx, cells)
        w2 = self.fam.w2.reshape(nx, cells)
        # combine slices with running distortion pruning
        self.thinned = False
        idx = np.zeros((1, 0), dtype=np.int64)
        dist1 = np.zeros(1)
        dist2 = np.zeros(1)
        tol = 1e-12
        for x in range(nx):
            c1 = self.fam.px[x] * comps @ w1[x]
            c2 = self.fam.px[x] * comps @ w2[x]
            keep = (c1 <= self.spec.D1 + tol) & (c2 <= self.spec.D2 + tol)
            kept = np.flatnonzero(keep)
            cap = max(1, 16 * self.param.max_lattice // max(len(kept), 1))
            if len(idx) > cap:
                # loose budgets prune nothing; thin the partial tuples before pairing
                sel = np.linspace(0, len(idx) - 1, cap).astype(np.int64)
                idx, dist1, dist2 = idx[sel], dist1[sel], dist2[sel]
                self.thinned = True
            n1d = dist1[:, None] + c1[kept][None, :]
            n2d = dist2[:, None] + c2[kept][None, :]
            ok = (n1d <= self.spec.D1 + tol) & (n2d <= self.spec.D2 + tol)
            i, j = np.nonzero(ok)
            if len(i) > self.param.max_lattice:
                # deterministic thinning keeps the search tractable
                sel = np.linspace(0, len(i) - 1, self.param.max_lattice).astype(np.int64)
                i, j = i[sel], j[sel]
                self.thinned = True
            idx = np.concatenate([idx[i], kept[j][:, None]], axis=1)
            dist1, dist2 = n1d[i, j], n2d[i, j]
        self.lattice_steps = steps
        if len(idx) == 0:
            self.tables = np.zeros((0,) + self.fam.shape)
            self.s = self.a = np.zeros(0)
            return
        tables = comps[idx]  # (N, nx, cells)
        tables = tables * self.fam.px[None, :, None]
        self.tables = tables.reshape((-1,) + self.fam.shape)
        self.s, self.a, _, _ = self.fam.evaluate(self.tables)

    # -- local polish -------------------------------------------------------
    def _unpack(self, v: np.ndarray) -> np.ndarray:
        nx = self.fam.shape[0]
        c = np.clip(v, 0.0, None).reshape(nx, -1)
        c = c / np.maximum(c.sum(axis=1, keepdims=True), 1e-300)
        return (self.fam.px[:, None] * c).reshape(self.fam.shape)

    def _pack(self, t: np.ndarray) -> np.ndarray:
        nx = self.fam.shape[0]
        flat = t.reshape(nx, -1)
        out = np.empty_like(flat)
        for x in range(nx):
            tot = flat[x].sum()
            out[x] = flat[x] / tot if tot > 0 else 1.0 / flat.shape[1]
        return out.ravel()

    def _eval1(self, v):
        s, a, d1, d2 = self.fam.evaluate(self._unpack(v)[None])
        return s[0], a[0], d1[0], d2[0]

    def feasible(self, t: np.ndarray, r0: float | None, tol: float = 1e-10) -> bool:
        s, a, d1, d2 = self.fam.evaluate(t[None])
        ok = d1[0] <= self.spec.D1 + tol and d2[0] <= self.spec.D2 + tol
        if r0 is not None:
            ok = ok and a[0] <= r0 + tol
        return bool(ok)

    def _slsqp(self, t0: np.ndarray, objective: str, r0: float | None) -> np.ndarray | None:
        nx = self.fam.shape[0]
        cells = int(np.prod(self.fam.shape[1:]))
        v0 = self._pack(t0)
        pick = 0 if objective == "s" else 1
        cons = [
            {"type": "ineq", "fun": lambda v: self.spec.D1 - self._eval1(v)[2]},
            {"type": "ineq", "fun": lambda v: self.spec.D2 - self._eval1(v)[3]},
            {"type": "eq", "fun": lambda v: v.reshape(nx, cells).sum(axis=1) - 1.0},
        ]
        if r0 is not None:
            cons.append({"type": "ineq", "fun": lambda v: r0 - self._eval1(v)[1]})
        try:
            res = minimize(lambda v: self._eval1(v)[pick], v0, method="SLSQP",
                           bounds=[(0.0, 1.0)] * v0.size, constraints=cons,
                           options={"ftol": 1e-12, "maxiter": 400})
        except (ValueError, FloatingPointError):
            return None
        t = self._unpack(res.x)
        return t if self.feasible(t, r0) else None

    def _coordinate_descent(self, t: np.ndarray, objective: str, r0: float | None,
                            step: float = 1 / 64, min_step: float = 1e-6) -> np.ndarray:
        """Pairwise mass transfers inside each x-slice with step halving."""
        nx = self.fam.shape[0]
        cells = int(np.prod(self.fam.shape[1:]))
        pairs = [(i, j) for i in range(cells) for j in range(cells) if i != j]
        pick = 0 if objective == "s" else 1
        best = t.copy()
        best_val = self.fam.evaluate(best[None])[pick][0]
        while step >= min_step:
            flat = best.reshape(nx, cells)
            cand = []
            for x in range(nx):
                delta = step * self.fam.px[x]
                for i, j in pairs:
                    if flat[x, i] >= delta:
                        c = flat.copy()
                        c[x, i] -= delta
                        c[x, j] += delta
                        cand.append(c)
            if not cand:
                step /= 2
                continue
            batch = np.array(cand).reshape((-1,) + self.fam.shape)
            s, a, d1, d2 = self.fam.evaluate(batch)
            vals = s if pick == 0 else a
            ok = (d1 <= self.spec.D1 + 1e-12) & (d2 <= self.spec.D2 + 1e-12)
            if r0 is not None:
                ok &= a <= r0 + 1e-12
            vals = np.where(ok, vals, np.inf)
            k = int(np.argmin(vals))
            if vals[k] < best_val - 1e-13:
                best, best_val = batch[k], vals[k]
            else:
                step /= 2
        return best

    def _polish(self, t0: np.ndarray, objective: str, r0: float | None) -> np.ndarray:
        if not self.param.refine:
            return t0
        pick = 0 if objective == "s" else 1
        best = t0
        best_val = self.fam.evaluate(t0[None])[pick][0]
        t = self._slsqp(t0, objective, r0)
        if t is not None:
            val = self.fam.evaluate(t[None])[pick][0]
            if val < best_val:
                best, best_val = t, val
        return self._coordinate_descent(best, objective, r0, step=self.param.grid_step / 4)

    # -- queries ------------------------------------------------------------
    @property
    def infeasible(self) -> bool:
        return len(self.tables) == 0

    def min_r0_bound(self) -> tuple[float, np.ndarray | None]:
        """Smallest achievable R0 lower bound, with its witness table."""
        if self.infeasible:
            return math.inf, None
        k = int(np.lexsort((self.s, self.a))[0])
        t = self._polish(self.tables[k], "a", None)
        a = self.fam.evaluate(t[None])[1][0]
        return float(a), t

    def min_sum_rate(self, r0: float | None = None, starts: Sequence[np.ndarray] = ()) -> tuple[float, np.ndarray | None]:
        """min of the sum-rate bound over joints whose R0 bound is <= r0."""
        if self.infeasible:
            return math.inf, None
        cands = list(starts)
        mask = np.ones(len(self.s), bool) if r0 is None else self.a <= r0 + 1e-12
        if mask.any():
            vals = np.where(mask, self.s, np.inf)
            k = int(np.lexsort((self.a, vals))[0])
            cands.insert(0, self.tables[k])
        best_val, best_t = math.inf, None
        for t0 in cands:
            if not self.feasible(t0, r0):
                continue
            t = self._polish(t0, "s", r0)
            val = float(self.fam.evaluate(t[None])[0][0])
            if val < best_val - 1e-13:
                best_val, best_t = val, t
        return best_val, best_t

    def run(self, r0_grid: Sequence[float] | None = None, n_grid: int = 129, workers: int = 1) -> Frontier:
        prov = {
            "grid_step": 1 / self.lattice_steps,
            "requested_grid_step": self.param.grid_step,
            "lattice_points": int(len(self.tables)),
            "lattice_thinned": self.thinned,
            "refine": "slsqp+coordinate-descent" if self.param.refine else "none",
        }
        if self.fam.f is not None:
            prov["u_size"] = int(self.fam.shape[2])
            prov["f_table"] = self.fam.f.tolist()
        if self.infeasible:
            return Frontier(self.mode, self.variant, self.spec.D1, self.spec.D2, (), prov)
        s_min, t_smin = self.min_sum_rate(None)
        a_min, t_amin = self.min_r0_bound()
        if r0_grid is None:
            r0_grid = np.linspace(0.0, s_min, n_grid)
        grid = sorted({float(r) for r in r0_grid if r > a_min + 1e-12})
        r0s = ([a_min] if a_min <= (max(grid) if grid else s_min) else []) + grid
        starts = [t for t in (t_amin, t_smin) if t is not None]

        def one(r0):
            return self.min_sum_rate(r0, starts=starts)

        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                results = list(ex.map(one, r0s))
        else:
            results = [one(r) for r in r0s]
        points, joints = [], []
        run_s, run_t = math.inf, None
        for r0, (s, t) in zip(r0s, results):
            if s < run_s:
                run_s, run_t = s, t
            if not math.isfinite(run_s):
                continue
            points.append((r0, max(run_s - r0, 0.0)))
            joints.append(self.fam.to_joint(run_t))
        prov["passes"] = len(r0s)
        return Frontier(self.mode, self.variant, self.spec.D1, self.spec.D2, tuple(points), prov, tuple(joints))


def frontier(source: JointPmf, spec: DistortionSpec, mode: CribbingMode | None,
             variant: CribbingVariant = PERFECT, param: FeasibleParameterization | None = None,
             r0_grid: Sequence[float] | None = None, workers: int = 1) -> Frontier:
    """Trace ``R1_min(R0)`` over all joints meeting the distortion budgets.

    An empty frontier means no joint in the family meets the budgets.
    """
    return FrontierSearch(source, spec, mode, variant, param).run(r0_grid, workers=workers)


def r0_zero_min_rate(source: JointPmf, spec: DistortionSpec, mode: CribbingMode, g: CribFunction,
                     param: FeasibleParameterization | None = None) -> float:
    """Minimum private rate when the common rate is zero (inf if unattainable)."""
    search = FrontierSearch(source, spec, mode, deterministic(g), param)
    a_min, t_amin = search.min_r0_bound()
    if a_min > 1e-12:
        return math.inf
    value, _ = search.min_sum_rate(0.0, starts=[t_amin] if t_amin is not None else [])
    return value


# ---------------------------------------------------------------------------
# binary symmetric example


def bernoulli_joint(p1: float, D1: float, D2: float) -> JointPmf:
    """Symmetric joint of X ~ Bern(1/2) with Hamming distortions met with equality."""
    p2, p3, p4 = 1 - D1 - p1, 1 - D2 - p1, p1 + D1 + D2 - 1
    cond = np.array([[p1, p2], [p3, p4]])
    if cond.min() < -1e-12:
        raise DomainError(f"p1 = {p1} outside the feasible interval")
    cond = np.clip(cond, 0.0, None)
    t = np.zeros((2, 2, 2))
    t[0] = 0.5 * cond
    t[1] = 0.5 * cond[::-1, ::-1]
    return JointPmf((X, X1, X2), t)


def bernoulli_interval(D1: float, D2: float) -> tuple[float, float]:
    return 1 - D1 - D2, min(1 - D1, 1 - D2, 2 - D1 - D2)


@dataclass(frozen=True)
class BernoulliExample:
    D1: float
    D2: float
    frontiers: dict[str, Frontier]
    corners: dict[str, tuple[float, float]]
    closed_form: dict[str, tuple[float, float]]


def _h2vec(*probs: float) -> float:
    return float(sum(-q * math.log2(q) for q in probs if q > 0))


def bernoulli_quantities(p1: float, D1: float, D2: float) -> dict[str, float]:
    """Closed-form information quantities along the one-parameter family."""
    p2, p3, p4 = 1 - D1 - p1, 1 - D2 - p1, max(p1 + D1 + D2 - 1, 0.0)
    a, b = (p1 + p4) / 2, (p2 + p3) / 2
    total = _h2vec(a, b, b, a) - _h2vec(p1, p2, p3, p4)
    return {
        "I_X_X1X2": total,
        "H_X1": 1.0,
        "H_X1_given_X2": _h2vec(p1 + p4, p2 + p3),
        "I_X_X2": 1 - _h2vec(p1 + p3, p2 + p4),
    }


def _bernoulli_bounds(p1: float, D1: float, D2: float, mode: CribbingMode | None) -> tuple[float, float]:
    q = bernoulli_quantities(p1, D1, D2)
    s = q["I_X_X1X2"]
    if mode is CribbingMode.NONCAUSAL:
        a = s - q["H_X1"]
    elif mode is CribbingMode.STRICTLY_CAUSAL:
        a = s - q["H_X1_given_X2"]
    elif mode is None:
        a = q["I_X_X2"]
    else:
        raise UsageError("the binary example covers non-causal, strictly causal and no cribbing")
    return s, _plus(a)


def _bernoulli_frontier(D1, D2, mode, n_grid: int, r0_grid=None, samples: int = 4001) -> Frontier:
    lo, hi = bernoulli_interval(D1, D2)
    ps = np.linspace(lo, hi, samples)
    vals = np.array([_bernoulli_bounds(p, D1, D2, mode) for p in ps])
    s_arr, a_arr = vals[:, 0], vals[:, 1]

    def s_of(p):
        return _bernoulli_bounds(p, D1, D2, mode)[0]

    def a_of(p):
        return _bernoulli_bounds(p, D1, D2, mode)[1]

    def local_min(fun, k):
        left, right = ps[max(k - 1, 0)], ps[min(k + 1, samples - 1)]
        if right <= left:
            return ps[k]
        res = minimize_scalar(fun, bounds=(left, right), method="bounded", options={"xatol": 1e-13})
        return res.x if fun(res.x) <= fun(ps[k]) else ps[k]

    p_amin = local_min(a_of, int(np.argmin(a_arr)))
    a_min = a_of(p_amin)
    p_smin = local_min(s_of, int(np.argmin(s_arr)))
    s_min = s_of(p_smin)

    def best_s(r0: float) -> tuple[float, float]:
        # feasible set {p : a(p) <= r0} as a union of grid intervals, boundaries refined by root finding
        feas = a_arr <= r0
        cand = [p_amin] if a_min <= r0 else []
        if a_of(p_smin) <= r0:
            cand.append(p_smin)
        for k in np.flatnonzero(feas[:-1] != feas[1:]):
            try:
                cand.append(brentq(lambda p: a_of(p) - r0, ps[k], ps[k + 1], xtol=1e-14))
            except ValueError:
                pass
        idx = np.flatnonzero(feas)
        if idx.size:
            cand.append(ps[idx[np.argmin(s_arr[idx])]])
        cand = [p for p in cand if a_of(p) <= r0 + 1e-12]
        if not cand:
            return math.inf, math.nan
        p = min(cand, key=s_of)
        return s_of(p), p

    if r0_grid is None:
        r0_grid = np.linspace(0.0, s_min, n_grid)
    grid = sorted({float(r) for r in r0_grid if r > a_min + 1e-12})
    r0s = [a_min] + grid
    points, joints = [], []
    run = math.inf
    run_p = math.nan
    for r0 in r0s:
        s, p = best_s(r0)
        if s < run:
            run, run_p = s, p
        if math.isfinite(run):
            points.append((r0, max(run - r0, 0.0)))
            joints.append(bernoulli_joint(run_p, D1, D2))
    prov = {"family": "symmetric one-parameter", "p1_interval": [lo, hi], "samples": samples}
    return Frontier(mode, PERFECT, D1, D2, tuple(points), prov, tuple(joints))


def bernoulli_example(D1: float, D2: float, n_grid: int = 129, r0_grid=None) -> BernoulliExample:
    """Three frontiers (non-causal, strictly causal, none) for X ~ Bern(1/2) under Hamming loss."""
    if not (0 < D1 < 0.5 and 0 < D2 < 0.5):
        raise DomainError(f"need 0 < D1, D2 < 0.5, got {(D1, D2)}")
    if D1 > D2:
        raise UsageError("the binary example assumes D1 <= D2")
    fronts = {
        "noncausal": _bernoulli_frontier(D1, D2, CribbingMode.NONCAUSAL, n_grid, r0_grid),
        "strictly-causal": _bernoulli_frontier(D1, D2, CribbingMode.STRICTLY_CAUSAL, n_grid, r0_grid),
        "no-cribbing": _bernoulli_frontier(D1, D2, None, n_grid, r0_grid),
    }
    nc = fronts["noncausal"]
    corners = {
        "A": (0.0, nc.r1_at(0.0)),
        "B": (fronts["strictly-causal"].points[0][0], math.inf),
        "C": (fronts["no-cribbing"].points[0][0], math.inf),
        "D": (nc.points[-1][0] if nc.points[-1][1] == 0 else math.nan, 0.0),
    }
    h1, h2 = binary_entropy(D1), binary_entropy(D2)
    closed = {
        "A": (0.0, 1 - h1),
        "B": (_plus(1 - h1 - h2), math.inf),
        "C": (1 - h2, math.inf),
        "D": (1 - h1, 0.0),
    }
    return BernoulliExample(D1, D2, fronts, corners, closed)


def bernoulli_search_inputs(D1: float, D2: float) -> tuple[JointPmf, DistortionSpec]:
    """Source and Hamming distortion spec matching :func:`bernoulli_example`."""
    return JointPmf((X,), [0.5, 0.5]), DistortionSpec.hamming(2, D1, D2)
