"""Dual multiple-access regions, Fourier-Motzkin elimination and corner-point duality.

The channel side mirrors the source side under the renaming
Y <-> X, X1 <-> X1, X2 <-> X2, Z1 <-> Z1, U <-> U.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, DualityMismatch, StructuralError, UsageError
from .prob_core import (
    CribFunction,
    JointPmf,
    conditional_entropy,
    entropy,
    extend_with_function,
    is_function_of,
    marginalize,
    max_abs_difference,
    mutual_information,
)
from .region_solver import PERFECT, CribbingMode, CribbingVariant, RegionSpec, conferencing_region, region

Y, X, X1, X2, Z1, U = "Y", "X", "X1", "X2", "Z1", "U"
SR_TO_MAC = {X: Y}
MAC_TO_SR = {Y: X}


def _plus(a: float) -> float:
    return max(a, 0.0)


# ---------------------------------------------------------------------------
# instances and regions


@dataclass(frozen=True, eq=False)
class MacInstance:
    """Channel P(y | x1, x2) used with a fixed input distribution.

    ``channel[x1, x2, y]``; ``inputs[x1, x2]``. For causal cribbing,
    ``p_u`` holds P(u, x1) and ``f[u, z1]`` gives x2.
    """

    channel: np.ndarray
    inputs: np.ndarray
    g: CribFunction
    p_u: np.ndarray | None = None
    f: np.ndarray | None = None

    def __post_init__(self):
        ch = np.array(self.channel, dtype=float)
        if ch.ndim != 3:
            raise UsageError(f"channel must be indexed [x1, x2, y], got shape {ch.shape}")
        if ch.min() < 0 or not np.allclose(ch.sum(axis=2), 1.0, atol=1e-9, rtol=0):
            raise DomainError("channel rows must be pmfs")
        if self.g.domain_size != ch.shape[0]:
            raise UsageError(f"crib function domain {self.g.domain_size} != |X1| = {ch.shape[0]}")
        if self.p_u is not None:
            pu = JointPmf((U, X1), self.p_u).probs
            f = np.asarray(self.f, dtype=int)
            if f.shape != (pu.shape[0], self.g.range_size):
                raise UsageError(f"f must have shape {(pu.shape[0], self.g.range_size)}, got {f.shape}")
            if f.min() < 0 or f.max() >= ch.shape[1]:
                raise UsageError("f maps outside the X2 alphabet")
            t = np.zeros((pu.shape[0], ch.shape[0], ch.shape[1]))
            for u in range(pu.shape[0]):
                for a in range(ch.shape[0]):
                    t[u, a, f[u, self.g.table[a]]] += pu[u, a]
            inputs = t.sum(axis=0)
            if self.inputs is not None and not np.allclose(inputs, self.inputs, atol=1e-9):
                raise StructuralError("inputs disagree with the causal structure P(u, x1), f")
            object.__setattr__(self, "p_u", pu)
            object.__setattr__(self, "f", f)
        else:
            inputs = self.inputs
        inputs = JointPmf((X1, X2), inputs).probs
        if inputs.shape != ch.shape[:2]:
            raise UsageError(f"input table {inputs.shape} does not match channel {ch.shape[:2]}")
        ch.setflags(write=False)
        object.__setattr__(self, "channel", ch)
        object.__setattr__(self, "inputs", inputs)

    @classmethod
    def causal(cls, channel, p_ux1, f, g: CribFunction) -> "MacInstance":
        return cls(channel, None, g, p_ux1, f)

    @property
    def has_u(self) -> bool:
        return self.p_u is not None

    def joint(self) -> JointPmf:
        """P(y, x1, x2) with Z1 and, when present, U adjoined."""
        if self.has_u:
            nu = self.p_u.shape[0]
            t = np.zeros((self.channel.shape[2],) + self.channel.shape[:2] + (nu,))
            for u in range(nu):
                for a in range(self.channel.shape[0]):
                    b = self.f[u, self.g.table[a]]
                    t[:, a, b, u] += self.p_u[u, a] * self.channel[a, b]
            p = JointPmf((Y, X1, X2, U), t)
        else:
            t = np.einsum("ab,aby->yab", self.inputs, self.channel)
            p = JointPmf((Y, X1, X2), t)
        return extend_with_function(p, X1, self.g, Z1)


@dataclass(frozen=True)
class CapacityRegion:
    """Upper bounds ``R1 <= r1_ub`` and ``R0 + R1 <= sum_ub``."""

    r1_ub: float
    sum_ub: float
    label: str = ""

    def contains(self, r0: float, r1: float, tol: float = 1e-12) -> bool:
        return r0 >= -tol and r1 >= -tol and r1 <= self.r1_ub + tol and r0 + r1 <= self.sum_ub + tol

    def as_dict(self) -> dict:
        return {"label": self.label, "r1_ub": self.r1_ub, "sum_ub": self.sum_ub}


def _causal_identity(p: JointPmf, tol: float = 1e-9) -> float:
    a = mutual_information(p, Y, (X1, U))
    b = mutual_information(p, Y, (X1, X2))
    if abs(a - b) > tol:
        raise StructuralError(f"I(Y;X1,U) = {a:.12g} differs from I(Y;X1,X2) = {b:.12g}")
    return a


def mac_region(m: MacInstance, mode: CribbingMode) -> CapacityRegion:
    p = m.joint()
    total = mutual_information(p, Y, (X1, X2))
    if mode is CribbingMode.NONCAUSAL:
        r1 = mutual_information(p, Y, X1, given=(X2, Z1)) + entropy(p, Z1)
    elif mode is CribbingMode.STRICTLY_CAUSAL:
        r1 = mutual_information(p, Y, X1, given=(X2, Z1)) + conditional_entropy(p, Z1, X2)
    else:
        if not m.has_u:
            raise StructuralError("causal region needs the U structure")
        if not is_function_of(p, X2, (U, Z1)):
            raise StructuralError("X2 is not a function of (U, Z1)")
        total = _causal_identity(p)
        r1 = mutual_information(p, Y, X1, given=(U, Z1)) + conditional_entropy(p, Z1, U)
    return CapacityRegion(r1, total, label=mode.value)


def mac_conferencing_region(m: MacInstance, r12: float) -> CapacityRegion:
    if not r12 >= 0:
        raise DomainError(f"conference rate must be >= 0, got {r12}")
    p = m.joint()
    total = mutual_information(p, Y, (X1, X2))
    return CapacityRegion(mutual_information(p, Y, X1, given=X2) + r12, total, label="conferencing")


# ---------------------------------------------------------------------------
# Fourier-Motzkin


@dataclass(frozen=True)
class Inequality:
    """``sum(coeffs[v] * v) <= rhs``."""

    coeffs: tuple[tuple[str, float], ...]
    rhs: float
    label: str = ""

    @classmethod
    def of(cls, coeffs: Mapping[str, float], rhs: float, label: str = "") -> "Inequality":
        items = tuple(sorted((v, float(c)) for v, c in coeffs.items() if c != 0))
        return cls(items, float(rhs), label)

    def coeff(self, v: str) -> float:
        return dict(self.coeffs).get(v, 0.0)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def scaled(self, k: float) -> "Inequality":
        return Inequality(tuple((v, c * k) for v, c in self.coeffs), self.rhs * k, self.label)

    def __str__(self):
        if not self.coeffs:
            lhs = "0"
        else:
            parts = []
            for v, c in self.coeffs:
                mag = "" if abs(abs(c) - 1) < 1e-15 else f"{_num(abs(c))}*"
                parts.append(("- " if c < 0 else "+ ") + mag + v)
            lhs = " ".join(parts).lstrip("+ ")
            if lhs.startswith("- "):
                lhs = "-" + lhs[2:]
        return f"{lhs} <= {_num(self.rhs)}"


def _num(x: float) -> str:
    frac = Fraction(x).limit_denominator(64)
    if abs(float(frac) - x) < 1e-12:
        return str(frac)
    return f"{x:.6g}"


@dataclass(frozen=True)
class IneqSystem:
    variables: tuple[str, ...]
    inequalities: tuple[Inequality, ...]
    redundant: tuple[Inequality, ...] = ()
    transcript: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        declared = set(self.variables)
        for q in self.inequalities:
            extra = set(q.variables) - declared
            if extra:
                raise UsageError(f"inequality {q} uses undeclared variables {sorted(extra)}")

    def feasible(self, point: Mapping[str, float], tol: float = 1e-9) -> bool:
        return all(sum(c * point[v] for v, c in q.coeffs) <= q.rhs + tol for q in self.inequalities)

    def matrix(self, order: Sequence[str] | None = None) -> tuple[np.ndarray, np.ndarray]:
        order = tuple(order or self.variables)
        a = np.array([[q.coeff(v) for v in order] for q in self.inequalities]).reshape(len(self.inequalities), len(order))
        b = np.array([q.rhs for q in self.inequalities])
        return a, b

    def find(self, coeffs: Mapping[str, float], tol: float = 1e-12) -> Inequality | None:
        """An inequality with exactly these coefficients, if present."""
        target = Inequality.of(coeffs, 0.0).coeffs
        for q in self.inequalities:
            if len(q.coeffs) == len(target) and all(
                v == w and abs(c - d) <= tol for (v, c), (w, d) in zip(q.coeffs, target)
            ):
                return q
        return None


def _combine(p: Inequality, n: Inequality, v: str) -> Inequality:
    cp, cn = p.coeff(v), -n.coeff(v)
    acc: dict[str, float] = {}
    for w, c in p.coeffs:
        acc[w] = acc.get(w, 0.0) + c / cp
    for w, c in n.coeffs:
        acc[w] = acc.get(w, 0.0) + c / cn
    acc.pop(v, None)
    acc = {w: c for w, c in acc.items() if abs(c) > 1e-12}
    return Inequality.of(acc, p.rhs / cp + n.rhs / cn, f"({p.label})+({n.label})")


def _normalise(q: Inequality) -> tuple:
    if not q.coeffs:
        return ((), 1.0)
    scale = max(abs(c) for _, c in q.coeffs)
    return tuple((v, round(c / scale, 12)) for v, c in q.coeffs), scale


def _dedupe(rows: list[Inequality]) -> tuple[list[Inequality], list[Inequality]]:
    """Keep the tightest of parallel rows, first appearance winning ties.

    Returns the kept rows in order and the dominated ones.
    """
    best: dict[tuple, Inequality] = {}
    order: list[tuple] = []
    dropped: list[Inequality] = []
    for q in rows:
        key, scale = _normalise(q)
        if key not in best:
            best[key] = q
            order.append(key)
            continue
        _, s_old = _normalise(best[key])
        if q.rhs / scale < best[key].rhs / s_old:
            dropped.append(best[key])
            best[key] = q
        else:
            dropped.append(q)
    return [best[k] for k in order], dropped


def _max_over(a: np.ndarray, rows: np.ndarray, rhs: np.ndarray, bound: float, tol: float = 1e-9) -> float:
    """max a.v over {rows v <= rhs, 0 <= v <= bound} by vertex enumeration (-inf if empty)."""
    k = len(a)
    eye = np.eye(k)
    cons_a = np.vstack([rows.reshape(-1, k), eye, -eye]) if k else rows
    cons_b = np.concatenate([rhs, np.full(k, bound), np.zeros(k)])
    best = -math.inf
    for subset in itertools.combinations(range(len(cons_b)), k):
        m = cons_a[list(subset)]
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        v = np.linalg.solve(m, cons_b[list(subset)])
        if np.all(cons_a @ v <= cons_b + tol):
            best = max(best, float(a @ v))
    return best


def fm_eliminate(sys: IneqSystem, eliminate: Iterable[str], bound: float | None = None,
                 tol: float = 1e-9) -> IneqSystem:
    """Project the feasible set onto the variables not in ``eliminate``.

    Rows implied by the others over ``[0, bound]^k`` are moved to
    ``redundant``; ``bound`` defaults to the sum of absolute right-hand sides.
    """
    eliminate = list(eliminate)
    unknown = [v for v in eliminate if v not in sys.variables]
    if unknown:
        raise UsageError(f"cannot eliminate undeclared variables {unknown}")
    if not eliminate:
        return sys
    log = list(sys.transcript)
    rows = list(sys.inequalities)
    parallel: list[Inequality] = []
    for v in eliminate:
        pos = [q for q in rows if q.coeff(v) > 0]
        neg = [q for q in rows if q.coeff(v) < 0]
        rest = [q for q in rows if q.coeff(v) == 0]
        made = [_combine(p, n, v) for p in pos for n in neg]
        log.append(f"eliminate {v}: {len(pos)} upper x {len(neg)} lower -> {len(made)} combined, {len(rest)} carried")
        for q in made:
            log.append(f"  {q}    [{q.label}]")
        rows = []
        for q in rest + made:
            if not q.coeffs:
                if q.rhs >= -tol:
                    continue
                log.append(f"  infeasible row kept: {q}")
            rows.append(q)
        rows, dominated = _dedupe(rows)
        for q in dominated:
            log.append(f"  dominated by a parallel row: {q}")
            if q.variables and not set(q.variables) & set(eliminate):
                parallel.append(q)
    keep = tuple(w for w in sys.variables if w not in eliminate)
    if bound is None:
        bound = float(sum(abs(q.rhs) for q in sys.inequalities))
    # check derived rows before carried ones so original bounds survive ties
    carried = [q for q in rows if q in sys.inequalities]
    derived = [q for q in rows if q not in sys.inequalities]
    active = derived + carried
    redundant: list[Inequality] = list(parallel)
    for q in list(active):
        if not q.coeffs:
            continue
        others = [r for r in active if r is not q]
        a = np.array([q.coeff(w) for w in keep])
        rows_m = np.array([[r.coeff(w) for w in keep] for r in others]).reshape(len(others), len(keep))
        rhs = np.array([r.rhs for r in others])
        best = _max_over(a, rows_m, rhs, bound)
        if best <= q.rhs + tol:
            active.remove(q)
            redundant.append(q)
            log.append(f"redundant over [0, {_num(bound)}]^{len(keep)}: {q} (max {best:.6g})")
    final = tuple(q for q in rows if q in active)
    for q in final:
        log.append(f"keep {q}")
    return IneqSystem(keep, final, tuple(sys.redundant) + tuple(redundant), tuple(log))


def split_private_system(m: MacInstance) -> IneqSystem:
    """Achievability constraints with the private rate split as R1 = R1a + R1b."""
    p = m.joint()
    h = entropy(p, Z1)
    total = mutual_information(p, Y, (X1, X2))
    given_z = mutual_information(p, Y, (X1, X2), given=Z1)
    cond = mutual_information(p, Y, X1, given=(Z1, X2))
    return IneqSystem(
        ("R0", "R1", "R1a", "R1b"),
        (
            Inequality.of({"R1a": 1}, h, "crib"),
            Inequality.of({"R0": 1, "R1a": 1, "R1b": 1}, total, "sum"),
            Inequality.of({"R0": 1, "R1b": 1}, given_z, "given-z"),
            Inequality.of({"R1b": 1}, cond, "private"),
            Inequality.of({"R1": 1, "R1a": -1, "R1b": -1}, 0.0, "split<="),
            Inequality.of({"R1": -1, "R1a": 1, "R1b": 1}, 0.0, "split>="),
        ),
    )


# ---------------------------------------------------------------------------
# corners and duality


@dataclass(frozen=True)
class CornerPoint:
    r0: float
    r1: float
    label: str

    def __post_init__(self):
        if self.r0 < -1e-12 or self.r1 < -1e-12:
            raise DomainError(f"corner coordinates must be >= 0, got {(self.r0, self.r1)}")

    def as_tuple(self) -> tuple[float, float]:
        return (self.r0, self.r1)


def _second_r0(p: JointPmf, mode: CribbingMode, out: str, w: str) -> float:
    """{I(out; W, Z1) - H(Z1 | ...)}+ with W = X2 or U."""
    info = mutual_information(p, out, (w, Z1))
    if mode is CribbingMode.NONCAUSAL:
        return _plus(info - entropy(p, Z1))
    return _plus(info - conditional_entropy(p, Z1, w))


def mac_corner_points(r: CapacityRegion, mode: CribbingMode, m: MacInstance) -> list[CornerPoint]:
    p = m.joint()
    w = U if mode is CribbingMode.CAUSAL else X2
    r0 = min(_second_r0(p, mode, Y, w), r.sum_ub)
    return [
        CornerPoint(r.sum_ub, 0.0, f"{mode.value}: (I(Y;X1,X2), 0)"),
        CornerPoint(r0, r.sum_ub - r0, f"{mode.value}: second corner"),
    ]


def mac_conferencing_corners(m: MacInstance, r12: float) -> list[CornerPoint]:
    reg = mac_conferencing_region(m, r12)
    p = m.joint()
    r1 = min(reg.sum_ub, reg.r1_ub)
    return [
        CornerPoint(reg.sum_ub, 0.0, "conferencing: (I(Y;X1,X2), 0)"),
        CornerPoint(_plus(mutual_information(p, Y, X2) - r12), r1, "conferencing: second corner"),
    ]


def sr_corner_points(p: JointPmf, mode: CribbingMode, g: CribFunction) -> list[CornerPoint]:
    """Source-side corners on a joint that already carries Z1 = g(X1)."""
    variant = PERFECT if g.is_identity else CribbingVariant(g)
    reg: RegionSpec = region(p, mode, variant)
    w = U if mode is CribbingMode.CAUSAL else X2
    q = p if Z1 in p else extend_with_function(p, X1, g, Z1)
    r0 = min(_second_r0(q, mode, X, w), reg.sum_rate_lb)
    if abs(r0 - min(reg.r0_lb, reg.sum_rate_lb)) > 1e-9:
        raise StructuralError("corner formula disagrees with the region lower bound")
    return [
        CornerPoint(reg.sum_rate_lb, 0.0, f"{mode.value}: (I(X;X1,X2), 0)"),
        CornerPoint(r0, reg.sum_rate_lb - r0, f"{mode.value}: second corner"),
    ]


def sr_conferencing_corners(p: JointPmf, r12: float) -> list[CornerPoint]:
    reg = conferencing_region(p)
    r0 = _plus(reg.conf_lb - r12)
    r0 = min(r0, reg.sum_rate_lb)
    return [
        CornerPoint(reg.sum_rate_lb, 0.0, "conferencing: (I(X;X1,X2), 0)"),
        CornerPoint(r0, reg.sum_rate_lb - r0, "conferencing: second corner"),
    ]


@dataclass(frozen=True)
class DualityReport:
    mode: str
    sr_corners: tuple[CornerPoint, ...]
    mac_corners: tuple[CornerPoint, ...]
    discrepancy: float
    tol: float
    notes: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tol

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "passed": self.passed,
            "max_discrepancy": self.discrepancy,
            "tolerance": self.tol,
            "corners": [
                {"label": s.label, "sr": [s.r0, s.r1], "mac": [c.r0, c.r1]}
                for s, c in zip(self.sr_corners, self.mac_corners)
            ],
            "notes": list(self.notes),
        }


TABLE_NOTE = (
    "strictly causal corners follow the region bound with H(Z1|X2); "
    "the tabulated row writes I(Y;X1,U), which for this mode is read as I(Y;X1,X2)"
)
CONF_NOTE = "conferencing corner tuple is tabulated with its coordinates in (R1, R0) order; reported here as (R0, R1)"


def _check_match(sr_joint: JointPmf, mac: MacInstance, tol: float) -> None:
    mac_joint = mac.joint()
    names = [n for n in sr_joint.names if n != Z1]
    sr = marginalize(sr_joint, names).renamed(SR_TO_MAC)
    if set(sr.names) - set(mac_joint.names):
        raise DualityMismatch(f"source joint variables {sr.names} not present on the channel side", math.inf)
    mac_m = marginalize(mac_joint, sr.names)
    try:
        gap = max_abs_difference(sr, mac_m)
    except UsageError as exc:
        raise DualityMismatch(str(exc), math.inf) from None
    if gap > tol:
        raise DualityMismatch(f"renamed joints differ by {gap:.3g} in max norm", gap)


def _gap(a: Sequence[CornerPoint], b: Sequence[CornerPoint]) -> float:
    return max(max(abs(s.r0 - c.r0), abs(s.r1 - c.r1)) for s, c in zip(a, b))


def duality_check(sr_joint: JointPmf, mac: MacInstance | None, mode: CribbingMode, tol: float = 1e-9,
                  g: CribFunction | None = None) -> DualityReport:
    """Compare source-side and channel-side corner formulas on a matched pair."""
    if mac is None:
        mac = mac_from_sr_joint(sr_joint, g or CribFunction.identity(sr_joint.size(X1)), mode)
    _check_match(sr_joint, mac, tol=max(tol, 1e-9))
    sr = sr_corner_points(sr_joint, mode, mac.g)
    mc = mac_corner_points(mac_region(mac, mode), mode, mac)
    notes = (TABLE_NOTE,) if mode is CribbingMode.STRICTLY_CAUSAL else ()
    return DualityReport(mode.value, tuple(sr), tuple(mc), _gap(sr, mc), tol, notes)


def conferencing_duality_check(sr_joint: JointPmf, mac: MacInstance | None, r12: float,
                               tol: float = 1e-9) -> DualityReport:
    if mac is None:
        mac = mac_from_sr_joint(sr_joint, CribFunction.identity(sr_joint.size(X1)), None)
    _check_match(sr_joint, mac, tol=max(tol, 1e-9))
    sr = sr_conferencing_corners(sr_joint, r12)
    mc = mac_conferencing_corners(mac, r12)
    return DualityReport("conferencing", tuple(sr), tuple(mc), _gap(sr, mc), tol, (CONF_NOTE,))


def mac_from_sr_joint(p: JointPmf, g: CribFunction, mode: CribbingMode | None) -> MacInstance:
    """Channel instance induced by a source joint: P(y|x1,x2) := P(x|x1,x2)."""
    t = p.table((X1, X2, X))
    inputs = t.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ch = np.where(inputs[..., None] > 0, t / inputs[..., None], 1.0 / t.shape[2])
    if mode is CribbingMode.CAUSAL:
        if U not in p:
            raise StructuralError("causal duality needs U in the source joint")
        q = p if Z1 in p else extend_with_function(p, X1, g, Z1)
        if not is_function_of(q, X2, (U, Z1)):
            raise StructuralError("X2 is not a function of (U, Z1)")
        tz = q.table((U, Z1, X2))
        f = np.argmax(tz, axis=2)
        return MacInstance.causal(ch, p.table((U, X1)), f, g)
    return MacInstance(ch, inputs, g)


def sr_joint_from_mac(m: MacInstance) -> JointPmf:
    """The matched source joint over (X, X1, X2[, U]) for a channel instance."""
    p = m.joint()
    keep = [n for n in p.names if n != Z1]
    return marginalize(p, keep).renamed(MAC_TO_SR)


# ---------------------------------------------------------------------------
# standard channels


def adder_channel() -> np.ndarray:
    """Y = X1 + X2 over binary inputs, ternary output."""
    ch = np.zeros((2, 2, 3))
    for a in range(2):
        for b in range(2):
            ch[a, b, a + b] = 1.0
    return ch


def identity_channel(n1: int = 2, n2: int = 2) -> np.ndarray:
    """Y = (X1, X2) encoded as y = x1 * n2 + x2."""
    ch = np.zeros((n1, n2, n1 * n2))
    for a in range(n1):
        for b in range(n2):
            ch[a, b, a * n2 + b] = 1.0
    return ch


def random_instance(rng: np.random.Generator, causal: bool = False, n1: int = 2, n2: int = 2, ny: int = 3,
                    nu: int = 3, g: CribFunction | None = None) -> MacInstance:
    ch = rng.dirichlet(np.ones(ny), size=(n1, n2))
    g = g or CribFunction.identity(n1)
    if causal:
        pu = rng.dirichlet(np.ones(nu * n1)).reshape(nu, n1)
        f = rng.integers(0, n2, size=(nu, g.range_size))
        return MacInstance.causal(ch, pu, f, g)
    return MacInstance(ch, rng.dirichlet(np.ones(n1 * n2)).reshape(n1, n2), g)
