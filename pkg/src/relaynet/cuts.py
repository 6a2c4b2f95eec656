"""Cut enumeration, cut values and the product-form cut-set bound."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .errors import CapError, ModeError
from .info import (
    DEFAULT_CAP,
    InputDistribution,
    X,
    Y,
    YE,
    conditional_entropy,
    conditional_mutual_information,
    joint_entropy,
)
from .network import Network

FORMULAS = ("general", "deterministic", "aref")
MAX_CUT_NODES = 24
TIE_TOL = 1e-9


def _fmt_set(nodes) -> str:
    return "{" + ",".join(str(u) for u in sorted(nodes)) + "}"


@dataclass(frozen=True)
class Cut:
    S: frozenset
    Sc: frozenset
    beta1: frozenset
    beta2: frozenset

    @classmethod
    def from_set(cls, net: Network, S) -> Cut:
        S = frozenset(S)
        Sc = frozenset(net.nodes) - S
        crossing = [(u, v) for u, v in net.edges if u in S and v in Sc]
        return cls(
            S=S,
            Sc=Sc,
            beta1=frozenset(u for u, _ in crossing),
            beta2=frozenset(v for _, v in crossing),
        )

    @property
    def sort_key(self):
        return tuple(sorted(self.S))

    def label(self) -> str:
        return _fmt_set(self.S)


@dataclass
class CutReport:
    cut: Cut
    value_bits: float
    formula_used: str


@dataclass
class BoundResult:
    min_cut_bits: float
    argmin_cuts: list[Cut]
    distribution: InputDistribution
    per_destination: dict[int, float]
    formula: str = ""
    reports: dict[int, list[CutReport]] = field(default_factory=dict)


def default_formula(net: Network) -> str:
    if net.mode == "aref":
        return "aref"
    if net.mode == "deterministic":
        return "deterministic"
    raise ModeError("cut values are computed for deterministic and aref networks only")


def enumerate_cuts(net: Network, t: int, max_nodes: int = MAX_CUT_NODES):
    """Yield every cut with the source in S and destination ``t`` in S^c."""
    if t not in net.destinations:
        raise ValueError(f"node {t} is not a destination")
    if len(net.nodes) > max_nodes:
        raise CapError(
            f"{len(net.nodes)} nodes give 2^{len(net.nodes) - 2} cuts; "
            f"raise max_nodes (currently {max_nodes}) to proceed"
        )
    s = net.source
    others = [u for u in net.nodes if u not in (s, t)]
    for mask in range(1 << len(others)):
        S = {s}.union(u for i, u in enumerate(others) if mask >> i & 1)
        yield Cut.from_set(net, S)


def cut_value(net: Network, dist: InputDistribution, cut: Cut, formula=None, *, cap=DEFAULT_CAP) -> CutReport:
    """Value of a cut under one of the three formulas.

    ``general``       I(X_S; Y_beta2 | X_Sc)
    ``deterministic`` H(Y_beta2 | X_Sc)
    ``aref``          sum over u in beta1 of H(Y_{u,beta2})
    """
    formula = formula or default_formula(net)
    if formula not in FORMULAS:
        raise ValueError(f"unknown formula {formula!r}")
    beta2 = sorted(cut.beta2)
    xs = [X(u) for u in sorted(cut.S)]
    xsc = [X(u) for u in sorted(cut.Sc)]
    ys = [Y(v) for v in beta2]
    if formula == "general":
        value = conditional_mutual_information(net, dist, xs, ys, xsc, cap=cap)
    elif formula == "deterministic":
        value = conditional_entropy(net, dist, ys, xsc, cap=cap)
    else:
        if net.mode != "aref":
            raise ModeError("the aref cut formula needs an aref network")
        value = sum(
            joint_entropy(
                net, dist, [YE(u, v) for v in net.out_neighbors(u) if v in cut.beta2], cap=cap
            )
            for u in sorted(cut.beta1)
        )
    return CutReport(cut, float(max(value, 0.0)), formula)


def full_cut_information(net: Network, dist: InputDistribution, cut: Cut, *, cap=DEFAULT_CAP) -> float:
    """I(X_S; Y_Sc | X_Sc) over all outputs in S^c, before any simplification."""
    return conditional_mutual_information(
        net,
        dist,
        [X(u) for u in sorted(cut.S)],
        [Y(v) for v in sorted(cut.Sc)],
        [X(u) for u in sorted(cut.Sc)],
        cap=cap,
    )


def min_cut(
    net: Network,
    dist: InputDistribution,
    formula=None,
    *,
    workers=None,
    max_nodes: int = MAX_CUT_NODES,
    cap=DEFAULT_CAP,
) -> BoundResult:
    """Exact minimum cut value over all destinations, with every tied cut."""
    formula = formula or default_formula(net)
    dist.check(net)
    per_dest_cuts = {t: list(enumerate_cuts(net, t, max_nodes)) for t in net.destinations}
    unique = sorted({c.S: c for cuts in per_dest_cuts.values() for c in cuts}.values(),
                    key=lambda c: c.sort_key)
    values = ordered_map(lambda c: cut_value(net, dist, c, formula, cap=cap), unique, workers)
    by_set = {r.cut.S: r for r in values}

    per_destination = {}
    reports = {}
    for t, cuts in per_dest_cuts.items():
        rs = sorted((by_set[c.S] for c in cuts), key=lambda r: r.cut.sort_key)
        reports[t] = rs
        per_destination[t] = min(r.value_bits for r in rs)
    best = min(per_destination.values())
    argmin = {
        r.cut.S: r.cut
        for t, rs in reports.items()
        for r in rs
        if r.value_bits <= best + TIE_TOL
    }
    return BoundResult(
        min_cut_bits=best,
        argmin_cuts=sorted(argmin.values(), key=lambda c: c.sort_key),
        distribution=dist,
        per_destination=per_destination,
        formula=formula,
        reports=reports,
    )


@dataclass(frozen=True)
class DistSearchConfig:
    grid: int = 16
    max_sweeps: int = 100


def simplex_grid(q: int, k: int) -> np.ndarray:
    """All probability vectors of length ``q`` with entries in multiples of 1/k, lexicographic."""
    points = [
        c for c in itertools.product(range(k + 1), repeat=q - 1) if sum(c) <= k
    ]
    return np.array([list(c) + [k - sum(c)] for c in points], dtype=float) / k


def optimize_distribution(
    net: Network,
    search: DistSearchConfig = DistSearchConfig(),
    formula=None,
    *,
    workers=None,
    max_nodes: int = MAX_CUT_NODES,
) -> BoundResult:
    """Coordinate ascent of the min-cut value over product distributions.

    Starts at the uniform distribution and sweeps nodes in ascending id order.
    For each node every grid point is tried in lexicographic order and any
    strict improvement is accepted on the spot. Sweeps repeat until one makes
    no progress. Nodes without outgoing edges cannot affect any cut and are
    left uniform.
    """
    dist = InputDistribution.uniform(net)
    best = min_cut(net, dist, formula, workers=workers, max_nodes=max_nodes)
    movable = [u for u in net.nodes if net.out_neighbors(u)]
    grids = {u: simplex_grid(net.alphabet[u], search.grid) for u in movable}
    for _ in range(search.max_sweeps):
        improved = False
        for u in movable:
            for point in grids[u]:
                cand = best.distribution.replace(u, point)
                result = min_cut(net, cand, formula, workers=workers, max_nodes=max_nodes)
                if result.min_cut_bits > best.min_cut_bits + 1e-12:
                    best = result
                    improved = True
        if not improved:
            break
    return best


def render_bound_report(net: Network, result: BoundResult, dist_label: str = "uniform") -> str:
    """Deterministic key-sorted text report, one cut per line."""
    lines = [
        "report: cutset",
        f"mode: {net.mode}",
        f"formula: {result.formula}",
        f"distribution: {dist_label}",
        f"min_cut_bits: {result.min_cut_bits:.9f}",
        "argmin: " + " ".join(c.label() for c in result.argmin_cuts),
    ]
    for t in sorted(result.per_destination):
        lines.append(f"per_destination: dest={t} min_cut_bits={result.per_destination[t]:.9f}")
    for u in sorted(result.distribution.probs):
        p = ",".join(f"{x:.9f}" for x in result.distribution.probs[u])
        lines.append(f"dist {u} p={p}")
    for t in sorted(result.reports):
        for r in result.reports[t]:
            c = r.cut
            lines.append(
                f"cut dest={t} S={_fmt_set(c.S)} beta1={_fmt_set(c.beta1)} "
                f"beta2={_fmt_set(c.beta2)} value={r.value_bits:.9f}"
            )
    return "\n".join(lines) + "\n"
