"""Exact finite-alphabet probability machinery.

Joint distributions are dense numpy tables with one named axis per random
variable. All information quantities are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StructuralError, UsageError

NORM_TOL = 1e-9
RENORM_TOL = 1e-6


@dataclass(frozen=True)
class Alphabet:
    name: str
    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise UsageError(f"alphabet {self.name!r} needs a positive integer size, got {self.size}")


def _as_names(names: str | Iterable[str]) -> tuple[str, ...]:
    if isinstance(names, str):
        return (names,)
    return tuple(names)


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Probability table over named finite-alphabet variables.

    ``probs`` has one axis per entry of ``names``; symbol ``k`` of a variable
    is index ``k`` along its axis.
    """

    names: tuple[str, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        names = tuple(self.names)
        probs = np.array(self.probs, dtype=float)
        if len(set(names)) != len(names):
            raise UsageError(f"duplicate variable names in {names}")
        if probs.ndim != len(names):
            raise UsageError(f"table has {probs.ndim} axes for {len(names)} variables")
        if not np.all(np.isfinite(probs)):
            raise DomainError("probability table contains non-finite entries")
        if probs.size and probs.min() < -NORM_TOL:
            raise DomainError(f"negative probability {probs.min():.3g}")
        probs = np.clip(probs, 0.0, None)
        total = probs.sum()
        if abs(total - 1.0) > RENORM_TOL:
            raise DomainError(f"probabilities sum to {total:.9g}, not 1")
        if abs(total - 1.0) > NORM_TOL:
            probs = probs / total
        probs.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "probs", probs)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def variables(self) -> tuple[Alphabet, ...]:
        return tuple(Alphabet(n, s) for n, s in zip(self.names, self.probs.shape))

    def size(self, name: str) -> int:
        return self.probs.shape[self.axis(name)]

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UsageError(f"unknown variable {name!r}; have {self.names}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def table(self, order: Sequence[str]) -> np.ndarray:
        """Marginal table with axes arranged in ``order``."""
        return marginalize(self, order).probs

    def renamed(self, mapping: dict[str, str]) -> "JointPmf":
        return JointPmf(tuple(mapping.get(n, n) for n in self.names), self.probs)

    def allclose(self, other: "JointPmf", atol: float = 1e-9) -> bool:
        return max_abs_difference(self, other) <= atol

    def __repr__(self):
        dims = ", ".join(f"{n}:{s}" for n, s in zip(self.names, self.shape))
        return f"JointPmf({dims})"


def max_abs_difference(p: JointPmf, q: JointPmf) -> float:
    """Max-norm distance between two joints over the same variable set."""
    if set(p.names) != set(q.names):
        raise UsageError(f"variable sets differ: {p.names} vs {q.names}")
    a = p.probs
    b = q.table(p.names)
    if a.shape != b.shape:
        raise UsageError(f"alphabet sizes differ: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))


@dataclass(frozen=True)
class DistortionSpec:
    """Per-decoder distortion tables ``d_i[x, xhat_i]`` with budgets."""

    d1: np.ndarray
    d2: np.ndarray
    D1: float
    D2: float

    def __post_init__(self):
        for label in ("d1", "d2"):
            table = np.array(getattr(self, label), dtype=float)
            if table.ndim != 2:
                raise UsageError(f"{label} must be a 2-D table")
            if not np.all(np.isfinite(table)) or table.min() < 0:
                raise DomainError(f"{label} must be finite and nonnegative")
            table.setflags(write=False)
            object.__setattr__(self, label, table)
        if self.D1 < 0 or self.D2 < 0:
            raise DomainError("distortion budgets must be nonnegative")

    @classmethod
    def hamming(cls, size: int, D1: float, D2: float, sizes: tuple[int, int] | None = None):
        s1, s2 = sizes or (size, size)
        return cls(_hamming(size, s1), _hamming(size, s2), D1, D2)

    @property
    def d_max(self) -> float:
        return float(max(self.d1.max(), self.d2.max()))

    def table(self, decoder: int) -> np.ndarray:
        if decoder == 1:
            return self.d1
        if decoder == 2:
            return self.d2
        raise UsageError(f"decoder must be 1 or 2, got {decoder}")

    def budget(self, decoder: int) -> float:
        return self.D1 if decoder == 1 else self.D2


def _hamming(n_x: int, n_hat: int) -> np.ndarray:
    return (np.arange(n_x)[:, None] != np.arange(n_hat)[None, :]).astype(float)


@dataclass(frozen=True)
class CribFunction:
    """Deterministic map from reconstruction-1 symbols to crib symbols.

    The range is compacted on construction: output labels are renumbered
    ``0..k-1`` in order of first appearance.
    """

    table: tuple[int, ...]

    def __post_init__(self):
        raw = tuple(int(v) for v in self.table)
        if not raw:
            raise UsageError("crib function must be defined on at least one symbol")
        relabel: dict[int, int] = {}
        for v in raw:
            relabel.setdefault(v, len(relabel))
        object.__setattr__(self, "table", tuple(relabel[v] for v in raw))

    @classmethod
    def identity(cls, size: int) -> "CribFunction":
        return cls(tuple(range(size)))

    @classmethod
    def constant(cls, size: int) -> "CribFunction":
        return cls((0,) * size)

    @property
    def domain_size(self) -> int:
        return len(self.table)

    @property
    def range_size(self) -> int:
        return max(self.table) + 1

    @property
    def is_identity(self) -> bool:
        return self.table == tuple(range(len(self.table)))

    def __call__(self, symbols):
        return np.asarray(self.table)[np.asarray(symbols)]


# ---------------------------------------------------------------------------
# information measures


def binary_entropy(a: float) -> float:
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"binary_entropy needs a probability, got {a}")
    if a == 0.0 or a == 1.0:
        return 0.0
    return float(-a * np.log2(a) - (1 - a) * np.log2(1 - a))


def entropy_of(probs) -> float:
    """Entropy in bits of a probability vector or table (0 log 0 = 0)."""
    p = np.asarray(probs, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def marginalize(p: JointPmf, keep: str | Iterable[str]) -> JointPmf:
    keep = _as_names(keep)
    if not keep:
        raise UsageError("marginalize needs at least one variable to keep")
    if len(set(keep)) != len(keep):
        raise UsageError(f"duplicate names in {keep}")
    axes = [p.axis(n) for n in keep]
    drop = tuple(i for i in range(len(p.names)) if i not in axes)
    table = p.probs.sum(axis=drop) if drop else p.probs
    kept_order = [i for i in range(len(p.names)) if i in axes]
    perm = [kept_order.index(a) for a in axes]
    return JointPmf(keep, np.transpose(table, perm))


def entropy(p: JointPmf, names: str | Iterable[str]) -> float:
    names = _as_names(names)
    if not names:
        raise UsageError("entropy needs a nonempty variable list")
    for n in names:
        p.axis(n)
    if len(set(names)) != len(names):
        raise UsageError(f"duplicate names in {names}")
    return entropy_of(marginalize(p, names).probs)


def _entropy_or_zero(p: JointPmf, names: tuple[str, ...]) -> float:
    return entropy(p, names) if names else 0.0


def conditional_entropy(p: JointPmf, target: str | Iterable[str], given: str | Iterable[str] = ()) -> float:
    target, given = _as_names(target), _as_names(given)
    if set(target) & set(given):
        raise UsageError(f"target {target} and conditioning set {given} overlap")
    return entropy(p, target + given) - _entropy_or_zero(p, given)


def mutual_information(
    p: JointPmf,
    a: str | Iterable[str],
    b: str | Iterable[str],
    given: str | Iterable[str] = (),
) -> float:
    """I(a; b | given) in bits, clamped at zero."""
    a, b, given = _as_names(a), _as_names(b), _as_names(given)
    if not a or not b:
        raise UsageError("mutual_information needs nonempty argument lists")
    sa, sb, sg = set(a), set(b), set(given)
    if sa & sb or sa & sg or sb & sg:
        raise UsageError(f"argument lists must be pairwise disjoint: {a}, {b}, {given}")
    value = conditional_entropy(p, a, given) - conditional_entropy(p, a, b + given)
    if value < -1e-9:
        raise StructuralError(f"negative mutual information {value:.3g}; table is inconsistent")
    return max(value, 0.0)


def extend_with_function(p: JointPmf, source_var: str, g: CribFunction, new_var: str) -> JointPmf:
    """Adjoin ``new_var = g(source_var)`` to the joint."""
    if new_var in p.names:
        raise UsageError(f"variable {new_var!r} already present")
    ax = p.axis(source_var)
    if g.domain_size != p.shape[ax]:
        raise UsageError(
            f"crib function defined on {g.domain_size} symbols but {source_var!r} has {p.shape[ax]}"
        )
    onehot = np.zeros((g.domain_size, g.range_size))
    onehot[np.arange(g.domain_size), g.table] = 1.0
    moved = np.moveaxis(p.probs, ax, -1)
    extended = moved[..., :, None] * onehot
    extended = np.moveaxis(extended, -2, ax)
    return JointPmf(p.names + (new_var,), extended)


def adjoin_function(p: JointPmf, inputs: Sequence[str], table: np.ndarray, new_var: str, size: int | None = None) -> JointPmf:
    """Adjoin ``new_var = table[inputs...]`` for a multi-input deterministic map."""
    if new_var in p.names:
        raise UsageError(f"variable {new_var!r} already present")
    table = np.asarray(table, dtype=int)
    in_shape = tuple(p.size(n) for n in inputs)
    if table.shape != in_shape:
        raise UsageError(f"function table shape {table.shape} does not match inputs {in_shape}")
    size = int(size if size is not None else table.max() + 1)
    out = np.zeros(p.shape + (size,))
    axes = [p.axis(n) for n in inputs]
    for idx in np.ndindex(p.shape):
        out[idx + (table[tuple(idx[a] for a in axes)],)] = p.probs[idx]
    return JointPmf(p.names + (new_var,), out)


def is_function_of(p: JointPmf, target: str, inputs: Sequence[str], tol: float = 1e-9) -> bool:
    """True when ``target`` is (almost surely) determined by ``inputs``."""
    return conditional_entropy(p, target, tuple(inputs)) <= tol


def expected_distortion(p: JointPmf, spec: DistortionSpec, decoder: int, source: str = "X", recon: str | None = None) -> float:
    recon = recon or f"X{decoder}"
    table = spec.table(decoder)
    pair = marginalize(p, (source, recon)).probs
    if pair.shape != table.shape:
        raise UsageError(f"distortion table {table.shape} does not match alphabets {pair.shape}")
    return float((pair * table).sum())


# ---------------------------------------------------------------------------
# constructors


def pmf(names: Sequence[str], probs) -> JointPmf:
    return JointPmf(tuple(names), np.asarray(probs, dtype=float))


def product(*parts: JointPmf) -> JointPmf:
    names: tuple[str, ...] = ()
    table = np.ones(())
    for part in parts:
        names += part.names
        table = np.multiply.outer(table, part.probs)
    return JointPmf(names, table)


def from_conditional(prior: JointPmf, channel: np.ndarray, new_names: Sequence[str]) -> JointPmf:
    """Joint of ``prior`` and ``new_names`` drawn from ``channel[prior..., new...]``."""
    channel = np.asarray(channel, dtype=float)
    k = len(prior.names)
    if channel.shape[:k] != prior.shape:
        raise UsageError(f"channel leading shape {channel.shape[:k]} != prior shape {prior.shape}")
    rows = channel.reshape(prior.probs.size, -1).sum(axis=1)
    if np.any(np.abs(rows - 1.0) > RENORM_TOL):
        raise DomainError("conditional table rows must sum to 1")
    table = prior.probs.reshape(prior.shape + (1,) * (channel.ndim - k)) * channel
    return JointPmf(prior.names + tuple(new_names), table)


def random_joint(rng: np.random.Generator, names: Sequence[str], shape: Sequence[int], concentration: float = 1.0) -> JointPmf:
    """Dirichlet-distributed joint table; ``concentration`` < 1 gives sparser tables."""
    size = int(np.prod(shape))
    probs = rng.dirichlet(np.full(size, concentration)).reshape(tuple(shape))
    return JointPmf(tuple(names), probs)
