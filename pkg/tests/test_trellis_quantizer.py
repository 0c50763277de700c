import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codevq.convcode import ConvCodeSpec, build_trellis, encode, enumerate_candidates
from codevq.metrics import build_metric_table, rho_costs
from codevq.trellis_quantizer import (MetricTable, ReconTable, brute_force_search, fit_recon,
                                      quantize, reconstruct, train_recon, viterbi_search)

SPEC_7_5 = ConvCodeSpec.from_label("[7;5]")


def rho_table(x, q):
    """Cyclic-metric table: every code symbol with index 0."""
    cost = rho_costs(x, q)
    return MetricTable(np.zeros(cost.shape, dtype=np.int64), cost, np.asarray(x, float), q, 0.0)


def lattice_point(spec, u, b):
    return encode(spec, u).ravel() + spec.q * np.asarray(b)


def test_exact_lattice_point_has_zero_distortion():
    rng = np.random.default_rng(1)
    for label, q in [("[7;5]", 2), ("[12;11]", 3), ("[14;13]", 5)]:
        spec = ConvCodeSpec.from_label(label, q)
        u = rng.integers(0, q, 30)
        b = rng.integers(-4, 5, 60)
        x = lattice_point(spec, u, b)
        r = viterbi_search(build_trellis(spec), build_metric_table(x, q))
        assert r.distortion == 0.0
        assert np.array_equal(r.point, x)
        assert np.array_equal(r.b, b)


def test_small_oracles():
    rng = np.random.default_rng(7)
    cases = [(ConvCodeSpec.from_label("[3;1]"), rng.uniform(0, 2, 6)),
             (ConvCodeSpec.from_label("[12;11]", 3), rng.uniform(-4, 4, 8))]
    for spec, x in cases:
        table = build_metric_table(x, spec.q)
        v = viterbi_search(build_trellis(spec), table)
        o = brute_force_search(spec, table)
        assert v.distortion == pytest.approx(o.distortion, rel=1e-12)


def test_brute_force_trivial_cases():
    r = brute_force_search(SPEC_7_5, build_metric_table(np.zeros(8), 2))
    assert r.distortion == 0 and not r.u.any() and not r.b.any()
    x = np.array([0.7, 1.2])
    r = brute_force_search(SPEC_7_5, build_metric_table(x, 2))
    # one step: the codeword pair is (0, 0) or (1, 1)
    best = min(((x - c) ** 2).mean() for c in (np.array([0, 0]), np.array([1, 1])))
    assert r.distortion == pytest.approx(best)


def test_brute_force_guard():
    with pytest.raises(ValueError):
        brute_force_search(SPEC_7_5, build_metric_table(np.zeros(52), 2))


def test_search_input_errors():
    t = build_trellis(SPEC_7_5)
    with pytest.raises(ValueError):
        viterbi_search(t, build_metric_table(np.zeros(0), 2))
    with pytest.raises(ValueError):
        viterbi_search(t, build_metric_table(np.zeros(5), 2))
    with pytest.raises(ValueError):
        viterbi_search(t, build_metric_table(np.zeros(4), 3))


@st.composite
def instances(draw):
    q = draw(st.sampled_from([2, 3, 5]))
    m = draw(st.integers(1, 3 if q < 5 else 2))
    specs = list(enumerate_candidates(q, m))
    spec = specs[draw(st.integers(0, len(specs) - 1))]
    k = draw(st.integers(1, 7))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    delta = draw(st.sampled_from([0.0, 0.5]))
    cyclic = draw(st.booleans())
    return spec, k, seed, delta, cyclic


@settings(max_examples=150, deadline=None)
@given(instances())
def test_viterbi_matches_brute_force(inst):
    spec, k, seed, delta, cyclic = inst
    rng = np.random.default_rng(seed)
    if cyclic:
        table = rho_table(rng.uniform(0, spec.q, 2 * k), spec.q)
    else:
        table = build_metric_table(rng.normal(0, 2 * spec.q, 2 * k), spec.q, delta)
    v = viterbi_search(build_trellis(spec), table)
    o = brute_force_search(spec, table)
    assert v.distortion == pytest.approx(o.distortion, rel=1e-12, abs=1e-15)
    assert v.distortion == pytest.approx(table.mu[np.arange(2 * k), v.codeword].mean())


def test_shift_covariance():
    rng = np.random.default_rng(5)
    spec = ConvCodeSpec.from_label("[17;13]")
    x = rng.normal(0, 3, 400)
    t = build_trellis(spec)
    a = viterbi_search(t, build_metric_table(x, 2))
    b = viterbi_search(t, build_metric_table(x + 2, 2))
    assert np.array_equal(a.u, b.u)
    assert np.array_equal(a.b + 1, b.b)
    assert a.distortion == pytest.approx(b.distortion, rel=1e-12)


def test_quantize_blocks_match_single_searches():
    rng = np.random.default_rng(2)
    x = rng.normal(0, 1, 48)
    st_ = quantize(x, SPEC_7_5, scale=0.5, block_len=16)
    t = build_trellis(SPEC_7_5)
    for i in range(3):
        r = viterbi_search(t, build_metric_table(x[16 * i:16 * (i + 1)] / 0.5, 2))
        assert np.array_equal(st_.u[8 * i:8 * (i + 1)], r.u)
        assert np.array_equal(st_.b[16 * i:16 * (i + 1)], r.b)
    assert st_.distortion == pytest.approx(0.25 * st_.mu.mean())


def test_quantize_errors():
    with pytest.raises(ValueError):
        quantize(np.zeros(4), SPEC_7_5, scale=0.0)
    with pytest.raises(ValueError):
        quantize(np.zeros(5), SPEC_7_5)


def test_monotone_in_states_on_uniform_source():
    x = np.random.default_rng(11).uniform(0, 2, 100_000)
    d = {}
    for label in ("[3;1]", "[7;5]"):
        st_ = quantize(x, ConvCodeSpec.from_label(label), block_len=2000)
        d[label] = st_.mu.mean()
    assert d["[7;5]"] < d["[3;1]"]


def test_recon_uniform_source_is_nominal():
    q = 3
    spec = ConvCodeSpec.from_label("[12;11]", q)
    x = np.random.default_rng(4).uniform(-20, 20, 400_000)
    recon = train_recon(spec, 0.0, 3, x, block_len=4000)
    nominal = ReconTable.nominal(q, 3).beta
    assert recon.beta[0, 3] == 0.0
    assert np.abs(recon.beta - nominal).max() < 0.05


def test_recon_invariants_with_delta():
    x = np.random.default_rng(8).laplace(0, 1, 200_000)
    st_ = quantize(x, SPEC_7_5, scale=0.7, delta=0.25)
    recon = fit_recon(st_, 10)
    L = 10
    assert recon.beta[0, L] == 0.0
    # empty far buckets fall back to the shifted lattice value
    assert recon.counts[1, 2 * L] == 0
    assert recon.beta[1, 2 * L] == 1 + 2 * L + 0.25
    assert recon.counts[0, 0] == 0
    assert recon.beta[0, 0] == -2 * L - 0.25
    # shifted means: the b > 0 bucket means sit Delta above the xi means
    c = st_.codeword
    sel = (c == 1) & (st_.b == 0)
    assert recon.beta[1, L] == pytest.approx(st_.xi[sel].mean() + 0.25)


def test_train_recon_empty():
    with pytest.raises(ValueError):
        train_recon(SPEC_7_5, 0.0, 10, np.zeros(0))


def test_reconstruct_rules():
    recon = ReconTable.nominal(2, 10, 0.0)
    y = reconstruct(np.zeros(3, int), np.zeros(6, int), SPEC_7_5, recon)
    assert not y.any()
    u = np.array([1, 0, 0])
    b = np.array([15, 0, 0, -13, 2, 0])
    c = encode(SPEC_7_5, u).ravel()
    y = reconstruct(u, b, SPEC_7_5, recon)
    assert y[0] == c[0] + 2 * 15
    assert y[3] == c[3] + 2 * -13
    assert y[4] == c[4] + 4
    with pytest.raises(ValueError):
        reconstruct(u, b[:5], SPEC_7_5, recon)


def test_reconstruct_uses_trained_table():
    x = np.random.default_rng(9).normal(0, 1, 100_000)
    st_ = quantize(x, SPEC_7_5, scale=0.6)
    recon = fit_recon(st_, 10)
    y = reconstruct(st_.u, st_.b, SPEC_7_5, recon, 0.6, st_.block_len)
    nominal = reconstruct(st_.u, st_.b, SPEC_7_5, ReconTable.nominal(2), 0.6, st_.block_len)
    assert np.mean((x - y) ** 2) < np.mean((x - nominal) ** 2)


def test_block_slices_cover_samples():
    st_ = quantize(np.zeros(40), SPEC_7_5, block_len=16)
    assert [(s.start, s.stop) for s in st_.block_slices()] == [(0, 16), (16, 32), (32, 40)]


def test_quantize_rejects_overflowing_scale():
    with pytest.raises(ValueError):
        quantize(np.array([1.0, -1.0]), SPEC_7_5, scale=1e-300)
    with pytest.raises(ValueError):
        quantize(np.array([np.nan, 0.0]), SPEC_7_5)
