"""Configuration, layer sizing and lazily generated random codebooks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import ConfigError, SizingError
from ..prob_core import (
    DistortionSpec,
    JointPmf,
    conditional_entropy,
    extend_with_function,
    is_function_of,
    marginalize,
    mutual_information,
)
from ..region_solver import PERFECT, CribbingMode, CribbingVariant, sr_region

MAX_N = 16
MAX_LAYER = 2 ** 20
X, X1, X2, Z1, U = "X", "X1", "X2", "Z1", "U"

# key tags for the counter-based generators
_OUTER, _CRIB, _BIN, _REFINE, _SOURCE = 1, 2, 3, 4, 5


class Policy:
    BIN_LOOKUP = "bin-lookup"
    JOINT_TYPICALITY = "joint-typicality"
    ALL = (BIN_LOOKUP, JOINT_TYPICALITY)


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo setting. Rates are nominal bits per symbol."""

    n: int
    B: int
    R0: float
    R1: float
    joint: JointPmf
    spec: DistortionSpec
    mode: CribbingMode = CribbingMode.NONCAUSAL
    variant: CribbingVariant = PERFECT
    eps: float = 0.1
    seed: int = 20240917
    slack: float = 1.0
    policy: str = Policy.BIN_LOOKUP
    select: str = "first"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"block length must be a positive integer, got {self.n}")
        if int(self.B) != self.B or self.B < 1:
            raise ConfigError(f"block count must be a positive integer, got {self.B}")
        if not 0 < self.eps < 0.5:
            raise ConfigError(f"eps must lie in (0, 0.5), got {self.eps}")
        if self.slack < 0:
            raise ConfigError("typicality slack must be >= 0")
        if not (self.R0 >= 0 and self.R1 >= 0 and math.isfinite(self.R0) and math.isfinite(self.R1)):
            raise ConfigError(f"rates must be finite and >= 0, got {(self.R0, self.R1)}")
        if self.select not in ("first", "cheapest"):
            raise ConfigError(f"unknown encoder selection rule {self.select!r}")
        if self.policy not in Policy.ALL:
            raise ConfigError(f"unknown decoding policy {self.policy!r}")
        if self.mode is CribbingMode.NONCAUSAL and self.B != 1:
            raise ConfigError("double binning runs a single block (B = 1)")
        if self.mode is not CribbingMode.NONCAUSAL and self.B < 2:
            raise ConfigError("forward encoding needs B >= 2 blocks")
        if self.n > MAX_N:
            raise SizingError(f"n = {self.n} exceeds the desk-scale cap {MAX_N}", {"n": self.n, "cap": MAX_N})
        missing = [v for v in (X, X1, X2) if v not in self.joint]
        if missing:
            raise ConfigError(f"target joint lacks {missing}")
        if self.mode is CribbingMode.CAUSAL and U not in self.joint:
            raise ConfigError("causal simulation needs U in the target joint")
        if self.spec.d1.shape != (self.joint.size(X), self.joint.size(X1)) or self.spec.d2.shape != (
            self.joint.size(X),
            self.joint.size(X2),
        ):
            raise ConfigError("distortion tables do not match the joint's alphabets")
        _ = self.scheme  # structural checks happen here
        _ = self.layout

    @property
    def block_markov(self) -> bool:
        return self.mode is not CribbingMode.NONCAUSAL

    @cached_property
    def scheme(self) -> "Scheme":
        return Scheme.from_config(self)

    @cached_property
    def layout(self) -> "Layout":
        return Layout.from_config(self)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "B": self.B,
            "R0": self.R0,
            "R1": self.R1,
            "eps": self.eps,
            "slack": self.slack,
            "mode": self.mode.value,
            "variant": self.variant.name,
            "crib_function": None if self.variant.g is None else list(self.variant.g.table),
            "policy": self.policy,
            "select": self.select,
            "seed": self.seed,
            "joint": {"names": list(self.joint.names), "probs": self.joint.probs.tolist()},
            "D1": self.spec.D1,
            "D2": self.spec.D2,
        }


@dataclass(frozen=True, eq=False)
class Scheme:
    """Target joint rearranged as (X, V, C, X1): outer layer V, crib C, refinement X1."""

    table: np.ndarray  # P(x, v, c, x1)
    outer: str
    crib: str
    refine: bool
    f: np.ndarray | None  # causal: x2 = f[v, c]
    info: dict

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "Scheme":
        p = cfg.joint
        keep = [v for v in (X, X1, X2, U) if v in p and (v != U or cfg.mode is CribbingMode.CAUSAL)]
        p = marginalize(p, keep)
        crib = X1
        # an identity crib function collapses to the perfect-cribbing codebooks
        if not cfg.variant.perfect and not cfg.variant.g.is_identity:
            p = extend_with_function(p, X1, cfg.variant.g, Z1)
            crib = cfg.variant.crib_var
        outer = U if cfg.mode is CribbingMode.CAUSAL else X2
        f = None
        if cfg.mode is CribbingMode.CAUSAL:
            if not is_function_of(p, X2, (U, crib)):
                raise ConfigError(f"X2 must be a function of (U, {crib}) for causal simulation")
            t = p.table((U, crib, X2))
            f = np.argmax(t, axis=2)
        names = (X, outer, crib) + ((X1,) if crib != X1 else ())
        t = p.table(names)
        if crib == X1:
            t = t[..., None]  # trivial refinement layer
        reg = sr_region(p if cfg.mode is not CribbingMode.CAUSAL else p, cfg.mode, cfg.variant)
        info = {
            "I_outer": mutual_information(p, X, outer),
            "I_crib": mutual_information(p, X, crib, given=outer),
            "I_refine": mutual_information(p, X, X1, given=(crib, outer)) if crib != X1 else 0.0,
            "H_crib_given_outer": conditional_entropy(p, crib, outer),
            "sum_rate_lb": reg.sum_rate_lb,
            "r0_lb": reg.r0_lb,
        }
        return cls(t, outer, crib, crib != X1, f, info)

    @property
    def sizes(self) -> tuple[int, int, int, int]:
        return self.table.shape

    def marginal(self, axes: tuple[int, ...]) -> np.ndarray:
        drop = tuple(i for i in range(4) if i not in axes)
        return self.table.sum(axis=drop)

    def conditional_cdf(self, target: int, given: tuple[int, ...]) -> np.ndarray:
        """CDF of the target axis given the listed axes, shape given-sizes + (|target|,)."""
        m = self.marginal(tuple(sorted(given + (target,))))
        order = [sorted(given + (target,)).index(a) for a in given] + [sorted(given + (target,)).index(target)]
        m = np.transpose(m, order)
        tot = m.sum(axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(tot > 0, m / tot, 1.0 / m.shape[-1])
        return np.cumsum(cond, axis=-1)


def _bits(n: int, rate: float) -> int:
    return max(0, math.ceil(n * rate - 1e-9))


@dataclass(frozen=True)
class Layout:
    """Codebook sizes in bits. All counts are powers of two."""

    n: int
    row_bits: int
    crib_bits: int
    refine_bits: int
    col_bits: int
    surplus_bits: int
    rounding: dict = field(compare=False)

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "Layout":
        info = cfg.scheme.info
        s = info["I_outer"] + info["I_crib"] + info["I_refine"]
        total = cfg.R0 + cfg.R1
        scale = total / s if s > 0 else 0.0
        rates = {
            "outer": scale * info["I_outer"],
            "crib": scale * info["I_crib"],
            "refine": scale * info["I_refine"],
        }
        n = cfg.n
        row, crib, ref = (_bits(n, rates[k]) for k in ("outer", "crib", "refine"))
        col = _bits(n, cfg.R0)
        rounding = {k: {"nominal_bits": n * v, "bits": _bits(n, v)} for k, v in rates.items()}
        rounding["common"] = {"nominal_bits": n * cfg.R0, "bits": col}
        if col > row + crib + ref:
            raise ConfigError(
                f"common rate needs {col} bits but the layers only hold {row + crib + ref}; a bin would be empty"
            )
        if col > row + crib:
            # the column index cannot be finer than the crib cloud; the extra common bits carry refinement bits
            rounding["common"]["bits_on_refine"] = col - row - crib
            col = row + crib
        surplus = max(0, col - crib)
        report = {"row_bits": row, "crib_bits": crib, "refine_bits": ref, "cap_bits": int(math.log2(MAX_LAYER))}
        if row + crib > math.log2(MAX_LAYER) or ref > math.log2(MAX_LAYER):
            raise SizingError("codebook layer exceeds 2^20 codewords", report)
        return cls(n, row, crib, ref, col, surplus, rounding)

    @property
    def n_rows(self) -> int:
        return 1 << self.row_bits

    @property
    def n_crib(self) -> int:
        return 1 << self.crib_bits

    @property
    def n_refine(self) -> int:
        return 1 << self.refine_bits

    @property
    def n_cols(self) -> int:
        return 1 << self.col_bits

    @property
    def cols_per_row(self) -> int:
        return 1 << (self.col_bits - self.surplus_bits)

    @property
    def bin_size(self) -> int:
        return self.n_crib // self.cols_per_row

    @property
    def rows_per_column(self) -> int:
        """Rows Decoder 2 must tell apart from the crib."""
        return 1 << (self.row_bits - self.surplus_bits)

    @property
    def private_bits(self) -> int:
        return self.row_bits + self.crib_bits + self.refine_bits - self.col_bits

    def split(self, row: int, pos: int) -> tuple[int, int, int]:
        """(row, position in permuted row) -> (m_v, t, l)."""
        s, t = divmod(row, self.rows_per_column)
        c, l = divmod(pos, self.bin_size)
        return s * self.cols_per_row + c, t, l

    def join(self, m_v: int, t: int, l: int) -> tuple[int, int]:
        s, c = divmod(m_v, self.cols_per_row)
        return s * self.rows_per_column + t, c * self.bin_size + l

    def as_dict(self) -> dict:
        return {
            "row_bits": self.row_bits,
            "crib_bits": self.crib_bits,
            "refine_bits": self.refine_bits,
            "common_bits": self.col_bits,
            "surplus_row_bits": self.surplus_bits,
            "private_bits": self.private_bits,
            "bin_size": self.bin_size,
            "rows_per_column": self.rows_per_column,
            "rounding": self.rounding,
        }


def keyed_rng(trial_seed: int, *key: int) -> np.random.Generator:
    """Independent stream for one codebook object, addressable by its indices."""
    return np.random.default_rng(np.random.SeedSequence(trial_seed, spawn_key=tuple(int(k) for k in key)))


def _sample(cdf_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(cdf_rows.shape[:-1])
    idx = np.zeros(u.shape, dtype=np.int64)
    for k in range(cdf_rows.shape[-1] - 1):  # alphabets are tiny; avoid a 4-d temporary
        idx += u >= cdf_rows[..., k]
    return idx


@dataclass(eq=False)
class Cloud:
    """Crib-layer codewords of one cloud, rows x positions, with their binning."""

    cond: np.ndarray  # (rows, n) outer sequences the crib words are drawn against
    words: np.ndarray  # (rows, n_crib, n) indexed by generation order j
    perm: np.ndarray  # (rows, n_crib) position -> j; columns are contiguous slices of positions
    layout: Layout
    key: tuple[int, ...]

    @cached_property
    def inv(self) -> np.ndarray:
        inv = np.empty_like(self.perm)
        np.put_along_axis(inv, self.perm, np.arange(self.perm.shape[1])[None, :].repeat(self.perm.shape[0], 0), axis=1)
        return inv

    def address(self, row: int, j: int) -> tuple[int, int, int]:
        """Codeword (row, j) -> (m_v, t, l)."""
        return self.layout.split(row, int(self.inv[row, j]))

    def locate(self, m_v: int, t: int, l: int) -> tuple[int, int]:
        """(m_v, t, l) -> codeword (row, j)."""
        row, pos = self.layout.join(m_v, t, l)
        return row, int(self.perm[row, pos])

    def lookup(self, m_v: int) -> tuple[np.ndarray, np.ndarray]:
        """Rows and codeword indices j that column ``m_v`` holds."""
        lay = self.layout
        rows, positions = [], []
        for t in range(lay.rows_per_column):
            r, p0 = lay.join(m_v, t, 0)
            rows.append(np.full(lay.bin_size, r))
            positions.append(np.arange(p0, p0 + lay.bin_size))
        rows = np.concatenate(rows)
        positions = np.concatenate(positions)
        return rows, self.perm[rows, positions]


@dataclass(eq=False)
class Codebook:
    """Codebook of one block. Clouds and refinement words are generated on demand."""

    cfg: SimConfig
    trial_seed: int
    block: int
    outer: np.ndarray  # (rows, n)
    _clouds: dict = field(default_factory=dict, repr=False)

    @property
    def layout(self) -> Layout:
        return self.cfg.layout

    def cloud(self, m: int = 0) -> Cloud:
        """Block-Markov: cloud around outer word m. Double binning: the single cloud."""
        if m not in self._clouds:
            lay = self.layout
            sch = self.cfg.scheme
            n = self.cfg.n
            if self.cfg.block_markov:
                cond = np.broadcast_to(self.outer[m], (lay.n_rows, n))
                key = (self.block, _CRIB, m)
            else:
                cond = self.outer
                key = (self.block, _CRIB, 0)
            cdf = sch.conditional_cdf(2, (1,))  # P(c | v)
            rng = keyed_rng(self.trial_seed, *key)
            cdf_rows = cdf[cond]  # (rows, n, |C|)
            words = _sample(np.broadcast_to(cdf_rows[:, None], (lay.n_rows, lay.n_crib, n, cdf.shape[-1])), rng)
            brng = keyed_rng(self.trial_seed, self.block, _BIN, m)
            perm = brng.permuted(np.tile(np.arange(lay.n_crib), (lay.n_rows, 1)), axis=1)
            self._clouds[m] = Cloud(np.asarray(cond), words, perm, lay, key)
        return self._clouds[m]

    def refinements(self, m: int, row: int, j: int) -> np.ndarray:
        """Refinement words (n_refine, n) hanging off crib word (row, j)."""
        cl = self.cloud(m)
        sch = self.cfg.scheme
        cdf = sch.conditional_cdf(3, (1, 2))  # P(x1 | v, c)
        rng = keyed_rng(self.trial_seed, self.block, _REFINE, m, row, j)
        rows = cdf[cl.cond[row], cl.words[row, j]]
        return _sample(np.broadcast_to(rows, (self.layout.n_refine,) + rows.shape), rng)

    def x1_words(self, m: int, row: int, j: int) -> np.ndarray:
        """Reconstruction-1 candidates for crib word (row, j)."""
        if self.cfg.scheme.refine:
            return self.refinements(m, row, j)
        return self.cloud(m).words[row, j][None]


def build_codebook(cfg: SimConfig, trial_seed: int, block: int = 1) -> Codebook:
    """Outer layer drawn i.i.d. from the outer marginal; clouds follow lazily."""
    sch = cfg.scheme
    lay = cfg.layout
    cdf = np.cumsum(sch.marginal((1,)))
    rng = keyed_rng(trial_seed, block, _OUTER)
    outer = _sample(np.broadcast_to(cdf, (lay.n_rows, cfg.n, len(cdf))), rng)
    return Codebook(cfg, trial_seed, block, outer)


def source_blocks(cfg: SimConfig, trial_seed: int) -> np.ndarray:
    """B source blocks of length n drawn i.i.d. from P(X)."""
    cdf = np.cumsum(cfg.scheme.marginal((0,)))
    rng = keyed_rng(trial_seed, 0, _SOURCE)
    return _sample(np.broadcast_to(cdf, (cfg.B, cfg.n, len(cdf))), rng)


def bin_audit(cb: Codebook, m: int = 0) -> dict:
    """Check that (m_v, t, l) addresses every crib word exactly once."""
    lay = cb.layout
    cl = cb.cloud(m)
    seen = np.zeros((lay.n_rows, lay.n_crib), dtype=int)
    occupancy = []
    round_trip = True
    for m_v in range(lay.n_cols):
        rows, js = cl.lookup(m_v)
        np.add.at(seen, (rows, js), 1)
        occupancy.append(len(rows))
        for r, j in zip(rows[:4], js[:4]):
            mv, t, l = cl.address(int(r), int(j))
            round_trip &= mv == m_v and cl.locate(mv, t, l) == (int(r), int(j))
    return {
        "exact_partition": bool(np.all(seen == 1)),
        "round_trip": bool(round_trip),
        "min_occupancy": int(min(occupancy)),
        "max_occupancy": int(max(occupancy)),
        "columns": lay.n_cols,
    }
