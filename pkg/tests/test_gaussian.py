import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import NETWORKS
from relaynet.errors import ModeError, SteinerError
from relaynet.gaussian import (
    GaussianParams,
    asymptotic_gap,
    cut_upper_bound,
    df_rate,
    gap,
    render_report,
    source_cut_bound,
)
from relaynet.network import Network, load_network, parse_network


def gaussian_net(gains, nodes=None, dest=None):
    """Network on ``nodes`` with the given {(u, v): gain}; source 1."""
    nodes = nodes or sorted({u for e in gains for u in e})
    dest = dest or nodes[-1]
    roles = {u: "relay" for u in nodes}
    roles[1] = "source"
    roles[dest] = "dest"
    return Network("gaussian", tuple(nodes), roles, tuple(gains), {u: 0 for u in nodes}, gains=dict(gains))


def test_df_rate_examples():
    assert df_rate(gaussian_net({(1, 2): 1.0}), GaussianParams(1, 1)) == pytest.approx(1.0)
    assert df_rate(gaussian_net({(1, 2): 1.0}), GaussianParams(1e-12, 1)) == pytest.approx(0.0, abs=1e-9)
    assert df_rate(gaussian_net({(1, 2): 0.5}), GaussianParams(100, 1)) == pytest.approx(math.log2(51))


def test_cut_upper_bound_examples():
    assert cut_upper_bound(gaussian_net({(1, 2): 1.0}), GaussianParams(1, 1)) == pytest.approx(1.0)
    net = load_network(NETWORKS / "gauss5.net")
    assert cut_upper_bound(net, GaussianParams(100, 1)) == pytest.approx(math.log2(1601))
    assert cut_upper_bound(net, GaussianParams(1e-12, 1)) == pytest.approx(0.0, abs=1e-9)


def test_gap_examples():
    r = gap(gaussian_net({(1, 2): 3.0}), GaussianParams(10, 1))
    assert r.gap_asymptotic_bits == 0.0
    assert asymptotic_gap(2.0, 1.0, 5) == pytest.approx(3.0)
    r = gap(load_network(NETWORKS / "gauss5.net"), GaussianParams(100, 1))
    assert r.df_rate_bits == pytest.approx(math.log2(101), abs=1e-12)
    assert r.cut_ub_bits == pytest.approx(math.log2(1601), abs=1e-12)
    assert r.gap_exact_bits == pytest.approx(math.log2(1601) - math.log2(101), abs=1e-12)
    assert r.gap_exact_bits == pytest.approx(3.987, abs=5e-4)
    assert r.gap_asymptotic_bits == pytest.approx(4.0, abs=1e-12)
    assert r.steiner_ok and (r.g_min, r.g_max, r.nodes) == (1.0, 4.0, 5)


def test_source_cut_variant():
    r = gap(load_network(NETWORKS / "gauss5.net"), GaussianParams(100, 1))
    assert r.source_cut_bits == pytest.approx(math.log2(1 + 5 * 100))
    assert r.source_cut_bits <= r.cut_ub_bits


def test_steiner_failure():
    net = parse_network(
        "relaynet v1\nmode gaussian\nnode 1 role=source\nnode 2\nnode 3 role=dest\nedge 1 2 gain=1\n",
        require_reachable=False,
    )
    with pytest.raises(SteinerError, match="no Steiner tree with nonzero gains"):
        gap(net, GaussianParams(1, 1))


def test_mode_and_parameter_checks():
    with pytest.raises(ModeError):
        df_rate(load_network(NETWORKS / "path3.net"), GaussianParams(1, 1))
    for P, N in ((0, 1), (1, 0), (-1, 1)):
        with pytest.raises(ValueError):
            GaussianParams(P, N)


def test_report_layout():
    text = render_report(gap(load_network(NETWORKS / "gauss5.net"), GaussianParams(100, 1)), GaussianParams(100, 1))
    assert "df_rate_bits: 6.658211" in text.splitlines()
    assert "gap_asymptotic_bits: 4.000000" in text.splitlines()


gains = st.floats(0.1, 100.0)


@settings(max_examples=200, deadline=None)
@given(a=gains, b=gains, k=st.integers(2, 8), snr=st.floats(1e-6, 1e9))
def test_exact_gap_below_asymptotic(a, b, k, snr):
    g_min, g_max = min(a, b), max(a, b)
    nodes = list(range(1, k + 1))
    edges = {(u, u + 1): g_min for u in nodes[:-1]}
    edges[(1, k)] = g_max
    r = gap(gaussian_net(edges, nodes), GaussianParams(snr, 1.0))
    assert r.gap_exact_bits >= -1e-12
    assert r.gap_exact_bits <= r.gap_asymptotic_bits + 1e-9


@settings(max_examples=200, deadline=None)
@given(a=gains, b=gains, k=st.integers(2, 8), snr=st.floats(1e4, 1e12))
def test_gap_converges_at_high_snr(a, b, k, snr):
    g_min, g_max = min(a, b), max(a, b)
    nodes = list(range(1, k + 1))
    edges = {(u, u + 1): g_min for u in nodes[:-1]}
    edges[(1, k)] = g_max
    r = gap(gaussian_net(edges, nodes), GaussianParams(snr, 1.0))
    assert abs(r.gap_exact_bits - r.gap_asymptotic_bits) <= 0.05


@settings(max_examples=100, deadline=None)
@given(s1=st.floats(1e-6, 1e8), s2=st.floats(1e-6, 1e8))
def test_bounds_increase_with_snr(s1, s2):
    assume(s1 < s2 * (1 - 1e-9))
    net = load_network(NETWORKS / "gauss5.net")
    lo, hi = GaussianParams(s1, 1), GaussianParams(s2, 1)
    assert df_rate(net, lo) < df_rate(net, hi)
    assert cut_upper_bound(net, lo) < cut_upper_bound(net, hi)
    assert source_cut_bound(net, lo) < source_cut_bound(net, hi)
