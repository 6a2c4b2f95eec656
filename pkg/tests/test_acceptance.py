"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line (also repeated in
the pytest terminal summary) and then asserts. Run on its own with
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import math
import random
import time

import pytest

from acceptance_log import report
from oracles import NETWORKS, random_network, random_product_dist
from relaynet.cli import main
from relaynet.coding import TypicalityConfig, lemma1_sweep, run_experiment
from relaynet.cuts import Cut, cut_value, enumerate_cuts
from relaynet.gaussian import GaussianParams, gap
from relaynet.info import YE, InputDistribution, joint_entropy
from relaynet.network import Network, load_network, longest_path_and_layering
from relaynet.schedule import build_schedule, forward_window_analysis

GOLDEN = NETWORKS.parent / "tests" / "golden"


def load(name, **kw):
    return load_network(NETWORKS / f"{name}.net", **kw)


def uniform(net):
    return InputDistribution.uniform(net)


def test_1_cut_value_decomposition():
    net = load("fig1_fragment", require_reachable=False)
    cut = Cut.from_set(net, {1, 2, 3, 7})
    d = uniform(net)
    split = joint_entropy(net, d, [YE(2, 4), YE(2, 6)]) + joint_entropy(net, d, [YE(3, 4)])
    values = {f: cut_value(net, d, cut, f).value_bits for f in ("general", "deterministic", "aref")}
    ok = (
        cut.beta1 == {2, 3}
        and cut.beta2 == {4, 6}
        and abs(values["aref"] - split) <= 1e-9
        and abs(values["aref"] - 2.0) <= 1e-9
        and max(values.values()) - min(values.values()) <= 1e-9
    )
    detail = ", ".join(f"{k}={v:.9f}" for k, v in values.items())
    assert report(1, "cut-value decomposition on the seven-node fragment", ok, detail)


def _formula_spread(net, dist, formulas):
    worst = 0.0
    for t in net.destinations:
        for cut in enumerate_cuts(net, t):
            vals = [cut_value(net, dist, cut, f).value_bits for f in formulas]
            worst = max(worst, max(vals) - min(vals))
    return worst


def test_2_formula_equivalence():
    start = time.perf_counter()
    rng = random.Random(20240601)
    worst_aref = worst_det = 0.0
    for _ in range(200):
        net = random_network(rng, "aref", k=rng.randint(2, 5))
        dist = InputDistribution(random_product_dist(rng, net))
        worst_aref = max(worst_aref, _formula_spread(net, dist, ("general", "deterministic", "aref")))
    for _ in range(200):
        net = random_network(rng, "deterministic", k=rng.randint(2, 5))
        dist = InputDistribution(random_product_dist(rng, net))
        worst_det = max(worst_det, _formula_spread(net, dist, ("general", "deterministic")))
    elapsed = time.perf_counter() - start
    ok = worst_aref <= 1e-9 and worst_det <= 1e-9 and elapsed <= 60
    detail = f"max spread aref={worst_aref:.2e} rxfn={worst_det:.2e}, {elapsed:.1f}s"
    assert report(2, "three cut formulas agree on 200+200 random networks", ok, detail)


def test_3_cut_enumeration_count():
    counts = {}
    for k in (3, 4, 5, 6):
        net = random_network(random.Random(k), "aref", k=k)
        counts[k] = len(list(enumerate_cuts(net, k)))
    ok = all(c == 2 ** (k - 2) for k, c in counts.items())
    assert report(3, "2^(|V|-2) cuts per destination", ok, str(counts))


def test_4_achievability_below_min_cut():
    start = time.perf_counter()
    net = load("path3")
    d = uniform(net)
    p16 = run_experiment(net, d, 16, 0.25, 1000, seed=7).p_e(3)
    p32 = run_experiment(net, d, 32, 0.25, 1000, seed=7).p_e(3)
    elapsed = time.perf_counter() - start
    ok = p16 <= 0.01 and (p32 == 0 or p32 <= p16 / 4) and elapsed <= 120
    detail = f"P_e(n=16)={p16:.6f}, P_e(n=32)={p32:.6f}, {elapsed:.1f}s"
    assert report(4, "achievability below the min-cut with exponential decay", ok, detail)


def test_5_converse_pigeonhole():
    net = load("path3")
    # 2^(8*1.5) = 4096 messages share at most 2^8 = 256 destination blocks
    r = run_experiment(net, uniform(net), 8, 1.5, 200, seed=7)
    ok = r.messages > 2 ** 8 and r.p_e(3) >= 0.9
    assert report(5, "pigeonhole errors above capacity", ok, f"messages={r.messages}, P_e={r.p_e(3):.6f}")


def test_6_lemma1_harness():
    runs = [
        ("path3", 12, 0.75, 0.75, 40, 31),
        ("layered_xor", 64, 0.1, 0.8, 20, 32),
    ]
    pairs = violations = events = 0
    for name, n, rate, delta, trials, seed in runs:
        net = load(name)
        assert longest_path_and_layering(net).is_layered
        s = lemma1_sweep(net, uniform(net), n, rate, trials, seed, TypicalityConfig(delta, "strict"))
        pairs += s.pairs_checked
        violations += s.violations
        events += s.events
    ok = pairs >= 10**4 and violations == 0
    detail = f"pairs={pairs}, collision events={events}, violations={violations}"
    assert report(6, "collision-lemma consequences on sampled pairs in strict mode", ok, detail)


def _cli(capsys, argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out


def test_7_table_reproduction(capsys):
    ok = True
    for mode in ("batch", "pipelined"):
        code, out = _cli(capsys, ["schedule", NETWORKS / "fig2.net", "--blocks", "3", "--mode", mode])
        ok &= code == 0 and out == (GOLDEN / f"fig2_{mode}.txt").read_text(encoding="utf-8")
        ok &= len(out.splitlines()) == 2 + 5
    sched = build_schedule(load("fig2"), 3, "pipelined")
    ok &= sched.deps(3, 3) == (1, 2) and sched.deps(3, 4) == (2, 3)
    assert report(7, "batch and pipelined tables for the four-node network", ok,
                  f"node3 block3={sched.deps(3, 3)}, block4={sched.deps(3, 4)}")


def test_8_forward_window_blocking():
    net = load("fig2")
    verdicts = forward_window_analysis(build_schedule(net, 3, "pipelined"), net, 4)
    first = verdicts[0].blockers[0] if verdicts[0].blockers else None
    ok = (
        not verdicts[0].decodable
        and first is not None
        and (first.node, first.block, first.deps) == (3, 3, (1, 2))
    )
    layered = [load(n) for n in ("path3", "diamond", "layered_xor")]
    rng = random.Random(8)
    while len(layered) < 60:
        cand = random_network(rng, "deterministic", k=rng.randint(2, 6))
        if longest_path_and_layering(cand).is_layered:
            layered.append(cand)
    blocked = 0
    for lnet in layered:
        for B in (1, 2, 3, 5):
            sched = build_schedule(lnet, B, "pipelined")
            for t in lnet.destinations:
                blocked += sum(not v.decodable for v in forward_window_analysis(sched, lnet, t))
    ok &= blocked == 0
    detail = f"w1 blocked by node {first.node} block {first.block}; layered nets blocked={blocked}"
    assert report(8, "forward-window blocking analysis", ok, detail)


def _gauss(gains, nodes):
    roles = {u: "relay" for u in nodes}
    roles[nodes[0]] = "source"
    roles[nodes[-1]] = "dest"
    return Network("gaussian", tuple(nodes), roles, tuple(gains), {}, gains=dict(gains))


def test_9_gap_formulas():
    r = gap(load("gauss5"), GaussianParams(100.0, 1.0))
    expect = {
        "df": math.log2(101),
        "ub": math.log2(1601),
        "gap": math.log2(1601) - math.log2(101),
        "asym": math.log2(4 / 1 * 4),
    }
    got = {"df": r.df_rate_bits, "ub": r.cut_ub_bits, "gap": r.gap_exact_bits, "asym": r.gap_asymptotic_bits}
    ok = all(abs(got[k] - expect[k]) <= 1e-6 for k in expect)
    ok &= abs(r.gap_exact_bits - 3.987) <= 5e-4
    rng = random.Random(9)
    worst = 0.0
    nets = [load("gauss5")]
    for _ in range(50):
        k = rng.randint(2, 8)
        nodes = list(range(1, k + 1))
        gains = {(u, u + 1): rng.uniform(0.1, 50) for u in nodes[:-1]}
        gains[(1, k)] = rng.uniform(0.1, 50)
        nets.append(_gauss(gains, nodes))
    for net in nets:
        for exp in range(4, 13):
            rep = gap(net, GaussianParams(10.0**exp, 1.0))
            worst = max(worst, abs(rep.gap_exact_bits - rep.gap_asymptotic_bits))
    ok &= worst <= 0.05
    detail = f"gap_exact={r.gap_exact_bits:.6f}, asym={r.gap_asymptotic_bits:.6f}, max |diff| at P/N>=1e4: {worst:.4f}"
    assert report(9, "DF rate, cut bound and high-SNR gap", ok, detail)


INVOCATIONS = [
    ["validate", NETWORKS / "path3.net"],
    ["cutset", NETWORKS / "diamond.net", "--dist", "uniform"],
    ["cutset", NETWORKS / "fig1_fragment.net", "--allow-unreachable", "--formula", "general"],
    ["cutset", NETWORKS / "erasure.net", "--optimize", "--grid", "16"],
    ["simulate", NETWORKS / "path3.net", "--n", "16", "--rate", "0.25", "--trials", "1000", "--seed", "7"],
    ["simulate", NETWORKS / "path3.net", "--n", "8", "--rate", "1.5", "--trials", "200", "--seed", "7"],
    ["simulate", NETWORKS / "layered_xor.net", "--n", "12", "--rate", "0.5", "--trials", "100", "--seed", "3",
     "--typicality", "strict", "--delta", "0.5", "--cut-stats"],
    ["sweep", NETWORKS / "path3.net", "--n", "12", "--rates", "0.25,0.5,1.0", "--trials", "100", "--seed", "4"],
    ["schedule", NETWORKS / "fig2.net", "--blocks", "3", "--mode", "batch"],
    ["schedule", NETWORKS / "fig2.net", "--blocks", "3", "--mode", "pipelined", "--analyze-window"],
    ["schedule", NETWORKS / "fig2.net", "--blocks", "3", "--mode", "pipelined", "--machine"],
    ["gap", NETWORKS / "gauss5.net", "--power", "100", "--noise", "1"],
]


def test_10_determinism(capsys):
    mismatched = []
    for argv in INVOCATIONS:
        outs = [
            _cli(capsys, argv + extra)
            for extra in (["--threads", "1"], ["--threads", "8"], ["--threads", "8"], [])
        ]
        if any(o != outs[0] for o in outs) or outs[0][0] != 0:
            mismatched.append(" ".join(str(a) for a in argv[:2]))
    ok = not mismatched
    detail = f"{len(INVOCATIONS)} invocations x 4 runs" + (f"; differ: {mismatched}" if mismatched else "")
    assert report(10, "byte-identical CLI output across runs and thread counts", ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
