"""Encoders, Decoder 2 lookups, the two coding schemes and trial aggregation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..region_solver import PERFECT, region
from .codebook import Codebook, Cloud, Policy, SimConfig, build_codebook, source_blocks
from .typicality import deviation_scores

DB_EVENTS = ("E0", "E1", "E2", "E3", "E4")
BM_EVENTS = ("Ee0", "Ee1", "Ee2", "Ed1", "Ed2")
ENCODE_EVENTS = {"E1", "E2", "Ee1", "Ee2"}
SOURCE_EVENTS = {"E0", "Ee0"}


@dataclass(frozen=True)
class Encoding:
    row: int
    j: int
    k: int
    m_v: int
    t: int
    l: int


@dataclass(frozen=True)
class EncFail:
    """No jointly typical word at one layer; ``fallback`` is what gets sent anyway."""

    event: str
    fallback: Encoding


@dataclass(frozen=True)
class DecFail:
    event: str
    row: int  # the row Decoder 2 falls back to
    matches: int


def _first_typical(scores: np.ndarray, cost: np.ndarray | None = None, select: str = "first") -> tuple[int, bool]:
    """Pick a typical index, else the cheapest candidate (least atypical without a cost).

    ``select="first"`` takes the smallest typical index; ``"cheapest"`` takes
    the typical candidate of least cost, smallest index on ties.
    """
    hits = np.flatnonzero(scores <= 1e-9)
    if hits.size:
        if select == "cheapest" and cost is not None:
            return int(hits[np.argmin(cost[hits])]), True
        return int(hits[0]), True
    key = scores if cost is None else cost
    return int(np.argmin(key)), False


def _cost(d: np.ndarray, x: np.ndarray, words: np.ndarray) -> np.ndarray:
    return d[x[None, :], words].mean(axis=1)


def _outer_search(x: np.ndarray, cb: Codebook) -> tuple[int, bool]:
    cfg = cb.cfg
    table = cfg.scheme.marginal((0, 1))
    scores = deviation_scores([x[None], cb.outer], table, cfg.eps, cfg.slack, given=1)
    cost = _cost(cfg.spec.d2, x, cb.outer) if cfg.scheme.f is None else None
    idx, ok = _first_typical(scores, cost, cfg.select)
    if not ok:  # the least atypical row, so causal and strictly causal runs fall back alike
        idx = int(np.argmin(scores))
    return idx, ok


def _inner_search(x: np.ndarray, cb: Codebook, m: int, row: int, with_outer: bool) -> tuple[int, int, bool]:
    """Crib word in ``row`` then refinement word, each the smallest typical index."""
    cfg = cb.cfg
    sch = cfg.scheme
    cl = cb.cloud(m)
    words = cl.words[row]
    v = cl.cond[row]
    if with_outer:
        scores = deviation_scores([x[None], v[None], words], sch.marginal((0, 1, 2)), cfg.eps, cfg.slack, given=2)
    else:
        scores = deviation_scores([x[None], words], sch.marginal((0, 2)), cfg.eps, cfg.slack, given=1)
    j, ok = _first_typical(scores, None if sch.refine else _cost(cfg.spec.d1, x, words), cfg.select)
    k = 0
    if sch.refine:
        refs = cb.refinements(m, row, j)
        if with_outer:
            rs = deviation_scores([x[None], v[None], words[j][None], refs], sch.table, cfg.eps, cfg.slack, given=3)
        else:
            rs = deviation_scores([x[None], words[j][None], refs], sch.marginal((0, 2, 3)), cfg.eps, cfg.slack, given=2)
        k, ok_k = _first_typical(rs, _cost(cfg.spec.d1, x, refs), cfg.select)
        ok = ok and ok_k
    return j, k, ok


def _encoding(cl: Cloud, row: int, j: int, k: int) -> Encoding:
    m_v, t, l = cl.address(row, j)
    return Encoding(row, j, k, m_v, t, l)


def encode_noncausal(x: np.ndarray, cb: Codebook) -> Encoding | EncFail:
    """Smallest typical row, then smallest typical crib (and refinement) word in it."""
    row, ok_row = _outer_search(x, cb)
    j, k, ok_in = _inner_search(x, cb, 0, row, with_outer=True)
    enc = _encoding(cb.cloud(0), row, j, k)
    if not ok_row:
        return EncFail("E1", enc)
    if not ok_in:
        return EncFail("E2", enc)
    return enc


def _source_typical(x: np.ndarray, cfg: SimConfig) -> bool:
    return bool(deviation_scores([x[None]], cfg.scheme.marginal((0,)), cfg.eps, cfg.slack)[0] <= 1e-9)


def _crib_of(x1: np.ndarray, cfg: SimConfig) -> np.ndarray:
    g = cfg.variant.g
    return x1 if g is None else g(x1)


def _scan(crib: np.ndarray, m_v: int, cl: Cloud, cfg: SimConfig) -> np.ndarray:
    """Rows whose column ``m_v`` holds the crib, under the configured policy."""
    rows, js = cl.lookup(m_v)
    hit = np.all(cl.words[rows, js] == crib[None], axis=1)
    if cfg.policy == Policy.JOINT_TYPICALITY:
        table = cfg.scheme.marginal((1, 2))
        typ = deviation_scores([cl.cond[rows], crib[None]], table, cfg.eps, cfg.slack, given=1) <= 1e-9
        hit &= typ
    return np.unique(rows[hit])


def decode2_noncausal(crib: np.ndarray, m_v: int, cb: Codebook, m: int = 0,
                      tags: tuple[str, str] = ("E3", "E4")) -> int | DecFail:
    """Unique row carrying the crib in column ``m_v``; failures fall back to the smallest match."""
    cfg = cb.cfg
    rows = _scan(np.asarray(crib), m_v, cb.cloud(m), cfg)
    if rows.size == 1:
        return int(rows[0])
    if rows.size == 0:
        return DecFail(tags[0], cfg.layout.join(m_v, 0, 0)[0], 0)
    return DecFail(tags[1], int(rows[0]), int(rows.size))


def _distortion(d: np.ndarray, x: np.ndarray, xhat: np.ndarray) -> float:
    return float(d[x, xhat].mean())


@dataclass
class TrialRecord:
    trial: int
    seed: int
    events: dict[str, int]  # occurrences per event tag (blocks)
    d1: list[float]
    d2: list[float]
    chain_ok: list[bool]
    typical_average_violations: int = 0
    enc_fail: list[bool] = field(default_factory=list)  # per block: some layer had no typical word
    bad: list[bool] = field(default_factory=list)  # per block: any coding event

    def as_dict(self) -> dict:
        return {
            "trial": self.trial,
            "seed": self.seed,
            "events": dict(self.events),
            "d1": self.d1,
            "d2": self.d2,
            "chain_ok": self.chain_ok,
            "enc_fail": self.enc_fail,
            "bad": self.bad,
        }


def _typical_average_check(cfg: SimConfig, x: np.ndarray, xhat: np.ndarray, which: int) -> bool:
    """False when a typical pair breaks the typical-average bound."""
    from .typicality import typical_average_bound
    from ..prob_core import JointPmf

    spec = cfg.spec
    d = spec.d1 if which == 1 else spec.d2
    pair = cfg.joint.table(("X", "X1" if which == 1 else "X2"))
    if deviation_scores([x[None], xhat[None]], pair, cfg.eps, cfg.slack)[0] > 1e-9:
        return True
    bound = typical_average_bound(JointPmf(("X", "Xh"), pair), d, cfg.eps, cfg.slack, cfg.n)
    return _distortion(d, x, xhat) <= bound + 1e-12


def run_double_binning(cfg: SimConfig, trial: int, trial_seed: int) -> TrialRecord:
    x = source_blocks(cfg, trial_seed)[0]
    cb = build_codebook(cfg, trial_seed, block=1)
    events = dict.fromkeys(DB_EVENTS, 0)
    events["E0"] = int(not _source_typical(x, cfg))
    enc = encode_noncausal(x, cb)
    if isinstance(enc, EncFail):
        events[enc.event] += 1
        enc = enc.fallback
    # Decoder 1 has every index
    row, j = cb.cloud(0).locate(enc.m_v, enc.t, enc.l)
    x1 = cb.x1_words(0, row, j)[enc.k]
    crib = _crib_of(x1, cfg)
    dec = decode2_noncausal(crib, enc.m_v, cb)
    if isinstance(dec, DecFail):
        events[dec.event] += 1
        row2 = dec.row
    else:
        row2 = dec
    x2 = cb.outer[row2]
    d1 = _distortion(cfg.spec.d1, x, x1)
    d2 = _distortion(cfg.spec.d2, x, x2)
    viol = 0
    if not any(events.values()):  # includes a typical source
        viol = int(not _typical_average_check(cfg, x, x1, 1)) + int(not _typical_average_check(cfg, x, x2, 2))
    coding = any(v for e, v in events.items() if e not in SOURCE_EVENTS)
    return TrialRecord(trial, trial_seed, events, [d1], [d2], [row2 == enc.row], viol,
                       [bool(events["E1"] or events["E2"])], [coding])


def _decoder2_output(cfg: SimConfig, u: np.ndarray, crib: np.ndarray) -> np.ndarray:
    f = cfg.scheme.f
    if f is None:
        return u
    return f[u, crib]


def run_block_markov(cfg: SimConfig, trial: int, trial_seed: int) -> TrialRecord:
    """Forward encoding with block-Markov decoding over B blocks.

    Block b's row index carries the outer index of block b + 1. Both ends
    start from outer index 0 and the last block sends row 0.
    """
    if not cfg.block_markov:
        raise ConfigError("block-Markov run needs a strictly causal or causal configuration")
    B = cfg.B
    xs = source_blocks(cfg, trial_seed)
    books = [build_codebook(cfg, trial_seed, block=b + 1) for b in range(B)]
    events = dict.fromkeys(BM_EVENTS, 0)
    m = [0] * (B + 1)  # m[b]: outer index used in block b (0-based)
    m_hat = [0] * (B + 1)
    d1s, d2s, chain, fails, bad = [], [], [], [], []
    viol = 0
    for b in range(B):
        x = xs[b]
        block_events = 0
        if not _source_typical(x, cfg):
            events["Ee0"] += 1
        if b + 1 < B:
            nxt, ok = _outer_search(xs[b + 1], books[b + 1])
            if not ok:
                events["Ee1"] += 1
                block_events += 1
            m[b + 1] = nxt
        else:
            m[b + 1] = 0
        cb = books[b]
        j, k, ok = _inner_search(x, cb, m[b], m[b + 1], with_outer=b > 0)
        if not ok:
            events["Ee2"] += 1
            block_events += 1
        fails.append(block_events > 0)
        cl = cb.cloud(m[b])
        enc = _encoding(cl, m[b + 1], j, k)
        x1 = cb.x1_words(m[b], enc.row, enc.j)[enc.k]
        crib = _crib_of(x1, cfg)
        # Decoder 2 emits this block from its current estimate, then reads the crib
        u_hat = cb.outer[m_hat[b]]
        x2 = _decoder2_output(cfg, u_hat, crib)
        chain.append(m_hat[b] == m[b])
        if b + 1 < B:
            dec = decode2_noncausal(crib, enc.m_v, cb, m=m_hat[b], tags=("Ed1", "Ed2"))
            if isinstance(dec, DecFail):
                events[dec.event] += 1
                block_events += 1
                m_hat[b + 1] = dec.row
            else:
                m_hat[b + 1] = dec
        d1 = _distortion(cfg.spec.d1, x, x1)
        d2 = _distortion(cfg.spec.d2, x, x2)
        d1s.append(d1)
        d2s.append(d2)
        bad.append(block_events > 0)
        if b > 0 and block_events == 0 and chain[-1]:
            viol += int(not _typical_average_check(cfg, x, x1, 1)) + int(not _typical_average_check(cfg, x, x2, 2))
    return TrialRecord(trial, trial_seed, events, d1s, d2s, chain, viol, fails, bad)


def trial_seed(master: int, trial: int) -> int:
    """Seed of one trial, a pure function of the master seed and trial index."""
    ss = np.random.SeedSequence(master, spawn_key=(int(trial),))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def run_trial(cfg: SimConfig, trial: int) -> TrialRecord:
    seed = trial_seed(cfg.seed, trial)
    if cfg.block_markov:
        return run_block_markov(cfg, trial, seed)
    return run_double_binning(cfg, trial, seed)


@dataclass(frozen=True)
class SimReport:
    config: dict
    layout: dict
    trials: int
    event_trials: dict[str, int]
    event_blocks: dict[str, int]
    d1_blocks: list[float]
    d2_blocks: list[float]
    d1: float
    d2: float
    d2_charged: float
    d2_first_block: float
    chain_break_blocks: int
    typical_average_violations: int
    records: tuple[TrialRecord, ...] = field(repr=False, compare=False)

    @property
    def blocks_counted(self) -> int:
        """Blocks per trial that enter the aggregate distortions."""
        return len(self.d1_blocks) - (1 if len(self.d1_blocks) > 1 else 0)

    def rate(self, event: str) -> float:
        return self.event_trials[event] / self.trials

    def block_rate(self, event: str) -> float:
        return self.event_blocks[event] / (self.trials * len(self.d1_blocks))

    @property
    def any_event_rate(self) -> float:
        """Fraction of trials with a coding event in a counted block; source atypicality alone does not count."""
        s = self._first_counted
        return sum(1 for r in self.records if any(r.bad[s:])) / self.trials

    @property
    def _first_counted(self) -> int:
        return 1 if len(self.d1_blocks) > 1 else 0

    @property
    def encode_failure_rate(self) -> float:
        """Fraction of trials with an encoding failure in a counted block (block 1 is skipped for block-Markov)."""
        s = self._first_counted
        return sum(1 for r in self.records if any(r.enc_fail[s:])) / self.trials

    @property
    def encode_failure_block_rate(self) -> float:
        """Fraction of counted encoding steps in which some layer found no typical word."""
        s = self._first_counted
        return sum(sum(r.enc_fail[s:]) for r in self.records) / (self.trials * self.blocks_counted)

    @property
    def error_block_rate(self) -> float:
        """Fraction of counted blocks with any coding event (equals ``any_event_rate`` for one block)."""
        s = self._first_counted
        return sum(sum(r.bad[s:]) for r in self.records) / (self.trials * self.blocks_counted)

    @property
    def decode_failure_rate(self) -> float:
        return sum(1 for r in self.records if any(r.events[e] for e in r.events if e not in ENCODE_EVENTS | SOURCE_EVENTS)) / self.trials

    def as_dict(self, include_records: bool = False) -> dict:
        d = {
            "config": self.config,
            "layout": self.layout,
            "trials": self.trials,
            "event_trials": self.event_trials,
            "event_blocks": self.event_blocks,
            "rates": {
                "any_event": self.any_event_rate,
                "encode_failure": self.encode_failure_rate,
                "encode_failure_per_block": self.encode_failure_block_rate,
                "error_per_block": self.error_block_rate,
                "decode_failure": self.decode_failure_rate,
            },
            "distortion": {
                "d1": self.d1,
                "d2": self.d2,
                "d2_first_block_charged_dmax": self.d2_charged,
                "d2_first_block_measured": self.d2_first_block,
                "d1_blocks": self.d1_blocks,
                "d2_blocks": self.d2_blocks,
            },
            "chain_break_blocks": self.chain_break_blocks,
            "typical_average_violations": self.typical_average_violations,
        }
        if include_records:
            d["records"] = [r.as_dict() for r in self.records]
        return d


def merge(cfg: SimConfig, records: list[TrialRecord]) -> SimReport:
    """Order-insensitive reduction: records are sorted by trial index first."""
    recs = tuple(sorted(records, key=lambda r: r.trial))
    trials = len(recs)
    tags = BM_EVENTS if cfg.block_markov else DB_EVENTS
    event_trials = {e: sum(1 for r in recs if r.events[e] > 0) for e in tags}
    event_blocks = {e: sum(r.events[e] for r in recs) for e in tags}
    d1b = np.array([r.d1 for r in recs])
    d2b = np.array([r.d2 for r in recs])
    start = 1 if cfg.block_markov else 0
    # per-trial means first, then the mean over trials
    d1 = float(np.mean([math.fsum(r.d1[start:]) / len(r.d1[start:]) for r in recs]))
    d2 = float(np.mean([math.fsum(r.d2[start:]) / len(r.d2[start:]) for r in recs]))
    if cfg.block_markov:
        dmax = float(cfg.spec.d2.max())
        charged = float(np.mean([(dmax + math.fsum(r.d2[1:])) / len(r.d2) for r in recs]))
        first = float(d2b[:, 0].mean())
    else:
        charged, first = d2, float(d2b[:, 0].mean())
    return SimReport(
        config=cfg.as_dict(),
        layout=cfg.layout.as_dict(),
        trials=trials,
        event_trials=event_trials,
        event_blocks=event_blocks,
        d1_blocks=[float(v) for v in d1b.mean(axis=0)],
        d2_blocks=[float(v) for v in d2b.mean(axis=0)],
        d1=d1,
        d2=d2,
        d2_charged=charged,
        d2_first_block=first,
        chain_break_blocks=int(sum(1 for r in recs for ok in r.chain_ok if not ok)),
        typical_average_violations=int(sum(r.typical_average_violations for r in recs)),
        records=recs,
    )


def simulate(cfg: SimConfig, trials: int, workers: int = 1) -> SimReport:
    """Independent seeded trials merged in trial order, so results do not depend on ``workers``."""
    if trials < 1:
        raise ConfigError("need at least one trial")
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            records = list(ex.map(lambda t: run_trial(cfg, t), range(trials)))
    else:
        records = [run_trial(cfg, t) for t in range(trials)]
    return merge(cfg, records)


def rate_point(joint, mode, variant=PERFECT, scale: float = 1.15) -> tuple[float, float]:
    """(R0, R1) with all of R1 folded into the common rate, at ``scale`` times the region's bounds.

    Above 1 the point clears every lower bound of the region by the same
    factor; below 1 the sum rate falls short of the sum bound. Putting the
    whole budget on R0 gives the decoder that sees only the common message
    the most row resolution.
    """
    if scale <= 0:
        raise ConfigError("scale must be positive")
    reg = region(joint, mode, variant)
    return scale * reg.sum_rate_lb, 0.0
