import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cribsr.codec_sim import (
    MAX_N,
    Encoding,
    Policy,
    SimConfig,
    bin_audit,
    build_codebook,
    decode2_noncausal,
    deviation_scores,
    encode_noncausal,
    is_typical,
    rate_point,
    run_trial,
    simulate,
    source_blocks,
    trial_seed,
    typical_average_bound,
)
from cribsr.errors import ConfigError, SizingError, UsageError
from cribsr.prob_core import CribFunction, DistortionSpec, JointPmf, adjoin_function, mutual_information, pmf
from cribsr.region_solver import CribbingMode, bernoulli_example, deterministic, sr_region

from oracles import binary_typical_probability

NC, SC, CA = CribbingMode.NONCAUSAL, CribbingMode.STRICTLY_CAUSAL, CribbingMode.CAUSAL
SPEC = DistortionSpec.hamming(2, 0.05, 0.1)
EX = bernoulli_example(0.05, 0.1)
NC_JOINT = EX.frontiers["noncausal"].joints[0]
SC_JOINT = EX.frontiers["strictly-causal"].joints[0]
IDENT = deterministic(CribFunction.identity(2))
UNIFORM = pmf(["X"], [0.5, 0.5])


def lossless_joint():
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[1, 1, 1] = 0.5
    return JointPmf(("X", "X1", "X2"), p)


def noisy_crib_joint():
    """X2 = X, X1 independent of X with P(X1 = 1) = 0.1."""
    p = np.zeros((2, 2, 2))
    for x in range(2):
        p[x, 0, x], p[x, 1, x] = 0.45, 0.05
    return JointPmf(("X", "X1", "X2"), p)


def nc_config(**kw):
    R0, R1 = rate_point(NC_JOINT, NC)
    base = dict(n=12, B=1, R0=R0, R1=R1, joint=NC_JOINT, spec=SPEC)
    base.update(kw)
    return SimConfig(**base)


def sc_config(**kw):
    R0, R1 = rate_point(SC_JOINT, SC)
    base = dict(n=8, B=5, R0=R0, R1=R1, joint=SC_JOINT, spec=SPEC, mode=SC)
    base.update(kw)
    return SimConfig(**base)


def same_records(a, b):
    return [r.as_dict() | {"seed": 0} for r in a.records] == [r.as_dict() | {"seed": 0} for r in b.records]


# --- typicality -------------------------------------------------------------


def test_exact_type_is_typical():
    x = np.array([0, 1] * 10)
    for eps in (1e-6, 0.1, 0.4):
        assert is_typical([x], UNIFORM, eps)


def test_all_zeros_block_is_not_typical():
    assert not is_typical([np.zeros(20, dtype=int)], UNIFORM, 0.1)


def test_typicality_rejects_bad_input():
    with pytest.raises(UsageError):
        is_typical([np.zeros(4, dtype=int), np.zeros(5, dtype=int)], pmf(["A", "B"], np.full((2, 2), 0.25)), 0.1)
    with pytest.raises(UsageError):
        is_typical([np.zeros(4, dtype=int)], pmf(["A", "B"], np.full((2, 2), 0.25)), 0.1)
    with pytest.raises(UsageError):
        is_typical([np.array([0, 2])], UNIFORM, 0.1)


@pytest.mark.parametrize("n", [200, 400, 2000])
def test_acceptance_rate_matches_binomial_oracle(n):
    rng = np.random.default_rng(n)
    x = rng.integers(0, 2, size=(1000, n))
    rate = float(np.mean(deviation_scores([x], UNIFORM.probs, 0.1) <= 1e-9))
    exact = binary_typical_probability(n, 0.5, 0.1)
    assert abs(rate - exact) < 4 * math.sqrt(exact * (1 - exact) / 1000) + 1e-3
    if n >= 400:
        assert rate > 0.9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.sampled_from([0.05, 0.1, 0.3]), st.sampled_from([0.0, 1.0]))
def test_scores_match_count_oracle(seed, n, eps, slack):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(6)).reshape(2, 3)
    joint = JointPmf(("A", "B"), p)
    a, b = rng.integers(0, 2, n), rng.integers(0, 3, n)
    ok = True
    for i in range(2):
        for j in range(3):
            count = int(np.sum((a == i) & (b == j)))
            if abs(count - n * p[i, j]) > eps * n * p[i, j] + slack + 1e-9:
                ok = False
    assert is_typical([a, b], joint, eps, slack) == ok


def test_typical_average_bound_holds_for_typical_pairs():
    joint = pmf(["X", "Xh"], [[0.45, 0.05], [0.05, 0.45]])
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    rng = np.random.default_rng(4)
    bound = typical_average_bound(joint, d, 0.1, 1.0, 40)
    seen = 0
    for _ in range(2000):
        flat = rng.choice(4, size=40, p=joint.probs.ravel())
        x, xh = np.divmod(flat, 2)
        if is_typical([x, xh], joint, 0.1, 1.0):
            seen += 1
            assert d[x, xh].mean() <= bound + 1e-12
    assert seen > 100


# --- configuration and codebooks --------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        nc_config(eps=0.5)
    with pytest.raises(ConfigError):
        nc_config(n=0)
    with pytest.raises(ConfigError):
        nc_config(B=2)
    with pytest.raises(ConfigError):
        sc_config(B=1)
    with pytest.raises(ConfigError):
        sc_config(mode=CA)  # no U in the joint
    with pytest.raises(ConfigError):
        nc_config(R0=-0.1)
    with pytest.raises(ConfigError):
        nc_config(policy="guess")
    with pytest.raises(ConfigError):
        simulate(nc_config(), 0)


def test_sizing_caps():
    with pytest.raises(SizingError) as exc:
        nc_config(n=MAX_N + 1)
    assert exc.value.report["cap"] == MAX_N
    with pytest.raises(SizingError) as exc:
        nc_config(n=16, R0=3.0, R1=0.0)
    assert exc.value.report["cap_bits"] == 20


def test_rounding_is_recorded():
    lay = nc_config().layout
    for layer in ("outer", "crib", "refine", "common"):
        r = lay.rounding[layer]
        assert r["bits"] == max(0, math.ceil(r["nominal_bits"] - 1e-9))
    assert lay.row_bits == lay.rounding["outer"]["bits"]


def test_zero_common_rate_gives_single_column():
    cfg = nc_config(R0=0.0, R1=0.9)
    lay = cfg.layout
    assert lay.n_cols == 1 and lay.rows_per_column == lay.n_rows and lay.bin_size == lay.n_crib
    audit = bin_audit(build_codebook(cfg, 1))
    assert audit["exact_partition"] and audit["columns"] == 1


def test_degenerate_codebook_at_n1():
    cfg = SimConfig(n=1, B=1, R0=0.0, R1=0.0, joint=NC_JOINT, spec=SPEC)
    cb = build_codebook(cfg, 5)
    assert cb.outer.shape == (1, 1)
    assert cb.cloud().words.shape == (1, 1, 1)
    assert cb.x1_words(0, 0, 0).shape == (1, 1)
    rec = run_trial(cfg, 0)
    assert rec.events["E3"] == 0 and rec.events["E4"] == 0


@pytest.mark.parametrize("scale", [1.0, 1.15, 1.4])
def test_bin_audit_at_n8(scale):
    R0, R1 = rate_point(NC_JOINT, NC, scale=scale)
    cfg = nc_config(n=8, R0=R0, R1=R1)
    for seed in range(3):
        audit = bin_audit(build_codebook(cfg, seed))
        assert audit["exact_partition"] and audit["round_trip"]
        assert audit["max_occupancy"] - audit["min_occupancy"] <= 1


def test_block_markov_clouds_audit():
    cfg = sc_config()
    cb = build_codebook(cfg, 9, block=2)
    for m in (0, 3, cfg.layout.n_rows - 1):
        audit = bin_audit(cb, m)
        assert audit["exact_partition"] and audit["round_trip"]
        np.testing.assert_array_equal(cb.cloud(m).cond[0], cb.outer[m])


def test_codebooks_are_reproducible():
    cfg = nc_config()
    a, b = build_codebook(cfg, 11), build_codebook(cfg, 11)
    np.testing.assert_array_equal(a.outer, b.outer)
    np.testing.assert_array_equal(a.cloud().words, b.cloud().words)
    np.testing.assert_array_equal(a.cloud().perm, b.cloud().perm)
    assert not np.array_equal(a.outer, build_codebook(cfg, 12).outer)


def test_codewords_follow_the_target_marginal():
    cfg = SimConfig(n=16, B=1, R0=0.5, R1=0.5, joint=noisy_crib_joint(), spec=DistortionSpec.hamming(2, 0.5, 0.0))
    words = build_codebook(cfg, 2).cloud().words
    assert abs(words.mean() - 0.1) < 0.02


# --- double binning ---------------------------------------------------------


def test_lossless_layer_encodes_to_matching_row():
    cfg = SimConfig(n=8, B=1, R0=1.5, R1=0.0, joint=lossless_joint(), spec=DistortionSpec.hamming(2, 0, 0))
    seed = trial_seed(cfg.seed, 0)
    x = np.array([0, 1, 1, 0, 1, 0, 0, 1])
    cb = build_codebook(cfg, seed)
    enc = encode_noncausal(x, cb)
    assert isinstance(enc, Encoding)
    np.testing.assert_array_equal(cb.outer[enc.row], x)


def test_singleton_bin_decodes_uniquely():
    cfg = nc_config(n=8, R0=1.4, R1=0.0)
    assert cfg.layout.rows_per_column == 1 and cfg.layout.bin_size == 1
    cb = build_codebook(cfg, 3)
    x = source_blocks(cfg, 3)[0]
    enc = encode_noncausal(x, cb)
    enc = getattr(enc, "fallback", enc)
    crib = cb.cloud().words[enc.row, enc.j]
    assert decode2_noncausal(crib, enc.m_v, cb) == enc.row


def test_low_rate_triggers_e1():
    ix2 = mutual_information(NC_JOINT, "X", "X2")
    rep = simulate(nc_config(R0=0.8 * ix2, R1=0.0), 200)
    assert rep.rate("E1") > 0.5


def test_rates_above_bounds_encode_reliably():
    reg = sr_region(NC_JOINT, NC)
    rep = simulate(nc_config(R0=1.15 * reg.r0_lb, R1=1.15 * (reg.sum_rate_lb - reg.r0_lb)), 200)
    assert rep.encode_failure_rate < 0.2


def test_common_rate_below_bound_gives_ambiguity():
    joint = noisy_crib_joint()
    reg = sr_region(joint, NC)
    R0 = reg.r0_lb - 0.2
    cfg = SimConfig(n=12, B=1, R0=R0, R1=reg.sum_rate_lb - R0, joint=joint, spec=DistortionSpec.hamming(2, 0.5, 0.0))
    assert simulate(cfg, 200).rate("E4") > 0.3


def test_policies_agree_inside_region():
    a = simulate(nc_config(), 50)
    b = simulate(nc_config(policy=Policy.JOINT_TYPICALITY), 50)
    agree = sum(any(x.bad) == any(y.bad) for x, y in zip(a.records, b.records))
    assert agree >= 45


def test_own_bin_miss_needs_an_encoder_failure():
    rep = simulate(nc_config(R0=0.6, R1=0.0), 200)
    for r in rep.records:
        if not (r.events["E1"] or r.events["E2"]):
            assert r.events["E3"] == 0


def test_identity_crib_matches_perfect_double_binning():
    a = simulate(nc_config(), 60)
    b = simulate(nc_config(variant=IDENT), 60)
    assert same_records(a, b)
    assert a.layout == b.layout


def test_detfn_crib_is_applied_to_decoder1_output():
    parity = deterministic(CribFunction((0, 0)))
    cfg = nc_config(variant=parity)
    assert cfg.scheme.refine and cfg.scheme.crib == "Z1"
    rep = simulate(cfg, 20)
    # a constant crib says nothing, so every row in the column matches
    assert rep.rate("E3") == 0.0
    assert rep.rate("E4") == 1.0 or cfg.layout.rows_per_column == 1


# --- block-Markov -----------------------------------------------------------


def test_lossless_chain_with_two_blocks():
    cfg = SimConfig(n=8, B=2, R0=1.5, R1=0.0, joint=lossless_joint(), spec=DistortionSpec.hamming(2, 0, 0), mode=SC)
    rep = simulate(cfg, 50)
    assert rep.d1 == 0.0 and rep.d2 == 0.0
    assert rep.d2_charged <= 1.0 / 2 + 1e-12
    for r in rep.records:
        assert r.d1[1] == 0.0 and r.d2[1] == 0.0


def test_block_markov_distortions_at_rate_point():
    R0, R1 = rate_point(SC_JOINT, SC, scale=1.15)
    cfg = SimConfig(n=12, B=10, R0=R0, R1=R1, joint=SC_JOINT, spec=SPEC, mode=SC, select="cheapest")
    rep = simulate(cfg, 100)
    assert rep.d1 <= 0.05 + 0.05
    assert rep.d2 <= 0.1 + 0.05 + 1.0 / 10
    assert rep.d2_charged <= 0.1 + 0.05 + 1.0 / 10


def test_causal_with_u_equal_x2_reproduces_strictly_causal():
    causal = adjoin_function(SC_JOINT, ("X2",), np.arange(2), "U")
    a = simulate(sc_config(), 40)
    b = simulate(sc_config(joint=causal, mode=CA), 40)
    assert same_records(a, b)


def test_identity_crib_matches_perfect_block_markov():
    assert same_records(simulate(sc_config(), 40), simulate(sc_config(variant=IDENT), 40))


def test_chain_breaks_are_recorded_per_block():
    rep = simulate(sc_config(R0=0.45), 40)
    broken = sum(not ok for r in rep.records for ok in r.chain_ok)
    assert rep.chain_break_blocks == broken
    for r in rep.records:
        assert r.chain_ok[0]  # both ends start from outer index 0


# --- aggregation ------------------------------------------------------------


def test_single_trial_equals_run_trial():
    for cfg in (nc_config(), sc_config()):
        rep = simulate(cfg, 1)
        assert rep.records[0].as_dict() == run_trial(cfg, 0).as_dict()
        assert rep.d1 == pytest.approx(np.mean(rep.records[0].d1[1 if cfg.block_markov else 0:]))


def test_doubling_trials_keeps_first_half():
    for cfg in (nc_config(), sc_config()):
        a, b = simulate(cfg, 10), simulate(cfg, 20)
        assert [r.as_dict() for r in a.records] == [r.as_dict() for r in b.records[:10]]


def test_results_do_not_depend_on_workers():
    for cfg in (nc_config(), sc_config()):
        a, b = simulate(cfg, 24), simulate(cfg, 24, workers=4)
        assert a.as_dict(include_records=True) == b.as_dict(include_records=True)


def test_report_invariants():
    for cfg in (nc_config(), sc_config()):
        rep = simulate(cfg, 30)
        assert all(0 <= v <= rep.trials for v in rep.event_trials.values())
        rates = rep.as_dict()["rates"]
        assert all(0.0 <= v <= 1.0 for v in rates.values())
        s = 1 if cfg.block_markov else 0
        assert rep.d1 == pytest.approx(np.mean([np.mean(r.d1[s:]) for r in rep.records]), abs=1e-12)
        assert rep.d2 == pytest.approx(np.mean([np.mean(r.d2[s:]) for r in rep.records]), abs=1e-12)


def test_typical_average_bound_per_trial():
    for cfg in (nc_config(), sc_config(), nc_config(select="cheapest")):
        assert simulate(cfg, 60).typical_average_violations == 0


def test_sum_rate_shift_orders_error_rates():
    lb = sr_region(NC_JOINT, NC).sum_rate_lb
    outside = simulate(nc_config(R0=lb - 0.15, R1=0.0), 500)
    inside = simulate(nc_config(R0=lb + 0.15, R1=0.0), 500)
    assert outside.any_event_rate > inside.any_event_rate


def test_double_binning_monotone_in_n():
    R0, _ = rate_point(NC_JOINT, NC, scale=1.3)
    small = simulate(nc_config(n=8, R0=R0, R1=0.0), 100)
    large = simulate(nc_config(n=16, R0=R0, R1=0.0), 100)
    assert large.any_event_rate <= small.any_event_rate + 0.1
