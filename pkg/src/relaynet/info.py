"""Exact entropies and mutual informations of network variables.

Inputs are independent across nodes (product distribution). Joint laws of
selected variables are obtained by enumerating every input tuple of the
nodes they depend on, evaluating the deterministic channel and accumulating
probability mass. Enumeration is split into fixed-size chunks so that the
result does not depend on how many workers process them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._parallel import ordered_map
from .errors import CapError, DistributionError, ModeError
from .network import Network, edge_output, node_output

DEFAULT_CAP = 2**24
CHUNK = 1 << 16
_DENSE_MAX = 1 << 20
_KEY_MAX = 1 << 62


@dataclass(frozen=True, order=True)
class Var:
    """One network random variable: ``X`` input, ``Y`` node output, ``YE`` edge output."""

    kind: str
    node: int
    sender: int = -1

    def __repr__(self):
        if self.kind == "YE":
            return f"Y[{self.sender},{self.node}]"
        return f"{self.kind}[{self.node}]"


def X(u: int) -> Var:
    return Var("X", u)


def Y(v: int) -> Var:
    return Var("Y", v)


def YE(u: int, v: int) -> Var:
    return Var("YE", v, u)


class InputDistribution:
    """Product distribution: one probability vector per node."""

    def __init__(self, probs: dict[int, np.ndarray]):
        self.probs = {u: np.asarray(p, dtype=float) for u, p in probs.items()}

    @classmethod
    def uniform(cls, net: Network) -> InputDistribution:
        return cls({u: np.full(q, 1.0 / q) for u, q in net.alphabet.items()})

    def replace(self, u: int, p) -> InputDistribution:
        probs = dict(self.probs)
        probs[u] = np.asarray(p, dtype=float)
        return InputDistribution(probs)

    def check(self, net: Network) -> InputDistribution:
        for u in net.nodes:
            p = self.probs.get(u)
            if p is None:
                raise DistributionError(f"no distribution for node {u}")
            if p.shape != (net.alphabet[u],):
                raise DistributionError(
                    f"node {u}: {p.size} probabilities for alphabet {net.alphabet[u]}"
                )
            if (p < 0).any() or abs(math.fsum(p) - 1.0) > 1e-12:
                raise DistributionError(f"node {u}: not a probability vector: {p}")
        return self

    def node_entropy(self, u: int) -> float:
        return _entropy_bits(self.probs[u])

    def __eq__(self, other):
        if not isinstance(other, InputDistribution):
            return NotImplemented
        return self.probs.keys() == other.probs.keys() and all(
            np.array_equal(p, other.probs[u]) for u, p in self.probs.items()
        )

    def render(self) -> str:
        return "".join(
            f"dist {u} p=" + ",".join(f"{x:.9f}" for x in self.probs[u]) + "\n"
            for u in sorted(self.probs)
        )

    @classmethod
    def parse(cls, text: str, net: Network) -> InputDistribution:
        """Read ``dist <node> p=<comma list>`` lines; unlisted nodes stay uniform.

        Entries may be decimals or fractions such as ``1/3``.
        """
        dist = cls.uniform(net)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 3 or tokens[0] != "dist" or not tokens[2].startswith("p="):
                raise DistributionError(f"line {lineno}: expected 'dist <node> p=<list>'")
            try:
                u = int(tokens[1])
                fracs = [Fraction(t) for t in tokens[2][2:].split(",")]
            except (ValueError, ZeroDivisionError):
                raise DistributionError(f"line {lineno}: bad number") from None
            if u not in net.index:
                raise DistributionError(f"line {lineno}: unknown node {u}")
            if sum(fracs) != 1 and abs(float(sum(fracs)) - 1.0) > 1e-12:
                raise DistributionError(f"line {lineno}: probabilities sum to {float(sum(fracs))}")
            dist = dist.replace(u, [float(f) for f in fracs])
        return dist.check(net)


def _entropy_bits(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return max(0.0, -math.fsum(p * np.log2(p)))


def product_entropy(dist: InputDistribution, nodes) -> float:
    """H(X_A) for independent inputs: sum of per-node entropies."""
    return math.fsum(dist.node_entropy(u) for u in nodes)


# ---------------------------------------------------------------------------
# variable encoding


def _support(net: Network, var: Var) -> list[int]:
    if var.kind == "X":
        return [var.node]
    if var.kind == "YE":
        return [var.sender]
    return list(net.in_neighbors(var.node))


def _radix(net: Network, var: Var) -> int:
    if var.kind == "X":
        return net.alphabet[var.node]
    if var.kind == "YE":
        return net.q_out
    return net.output_radix(var.node)


def check_vars(net: Network, vars) -> list[Var]:
    out = []
    for var in vars:
        if var.node not in net.index:
            raise KeyError(f"{var!r}: unknown node")
        if var.kind == "YE":
            if net.mode != "aref":
                raise ModeError("edge outputs exist only in aref mode")
            if (var.sender, var.node) not in net.edge_fns:
                raise KeyError(f"{var!r}: no such edge")
        elif var.kind not in ("X", "Y"):
            raise KeyError(f"unknown variable kind {var.kind!r}")
        out.append(var)
    return out


def var_codes(net: Network, var: Var, x, shape=None) -> np.ndarray:
    """Integer code of ``var`` given input arrays ``x`` (node id -> array)."""
    if var.kind == "X":
        return np.asarray(x[var.node], dtype=np.int64)
    if var.kind == "YE":
        return edge_output(net, var.sender, var.node, x[var.sender])
    return node_output(net, var.node, x, shape)


def encode_joint(net: Network, vars, x, shape=None):
    """Mixed-radix joint code of ``vars``; ``None`` if it would overflow int64."""
    if math.prod(_radix(net, v) for v in vars) > _KEY_MAX:
        return None
    if not vars:
        return np.zeros(shape if shape is not None else (), dtype=np.int64)
    return combine_codes(net, vars, [var_codes(net, v, x, shape) for v in vars])


def combine_codes(net: Network, vars, codes) -> np.ndarray:
    """Pack per-variable codes into one key, first variable most significant."""
    key = None
    for var, code in zip(vars, codes):
        code = np.asarray(code, dtype=np.int64)
        key = code if key is None else key * _radix(net, var) + code
    return key


# ---------------------------------------------------------------------------
# enumeration


def _require_discrete(net: Network, cap: int):
    if net.mode == "gaussian":
        raise ModeError("entropies are computed for deterministic and aref networks only")
    total = net.input_tuple_count()
    if total > cap:
        raise CapError(f"{total} input tuples exceed enumeration cap {cap}")


def _chunk_inputs(net, dist, nodes, lo, hi):
    idx = np.arange(lo, hi, dtype=np.int64)
    x = {}
    prob = np.ones(hi - lo)
    for u in reversed(nodes):
        q = net.alphabet[u]
        digit = idx % q
        idx //= q
        x[u] = digit
        prob = prob * dist.probs[u][digit]
    return x, prob


def joint_pmf(net: Network, dist: InputDistribution, vars, *, cap=DEFAULT_CAP, workers=1):
    """Joint law of ``vars`` as ``(keys, probs)``, keys sorted ascending.

    Keys are the mixed-radix codes of :func:`encode_joint` (first variable most
    significant). Zero-probability outcomes are dropped.
    """
    _require_discrete(net, cap)
    vars = check_vars(net, vars)
    nodes = sorted({u for v in vars for u in _support(net, v)})
    total = math.prod(net.alphabet[u] for u in nodes)
    if not vars:
        return np.zeros(1, dtype=np.int64), np.ones(1)
    K = math.prod(_radix(net, v) for v in vars)
    bounds = [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]

    if K > _KEY_MAX:
        return _joint_pmf_rows(net, dist, vars, nodes, bounds, workers)

    def work(b):
        x, prob = _chunk_inputs(net, dist, nodes, *b)
        key = encode_joint(net, vars, x, shape=prob.shape)
        if K <= _DENSE_MAX:
            return np.bincount(key, weights=prob, minlength=K)
        ukeys, inv = np.unique(key, return_inverse=True)
        return ukeys, np.bincount(inv.ravel(), weights=prob)

    parts = ordered_map(work, bounds, workers)
    if K <= _DENSE_MAX:
        # Neumaier-compensated sum of chunk partials, in chunk order
        acc = np.zeros(K)
        comp = np.zeros(K)
        for part in parts:
            t = acc + part
            big = np.abs(acc) >= np.abs(part)
            comp += np.where(big, (acc - t) + part, (part - t) + acc)
            acc = t
        probs = acc + comp
        keys = np.nonzero(probs > 0)[0].astype(np.int64)
        return keys, probs[keys]
    keys = np.concatenate([k for k, _ in parts])
    vals = np.concatenate([v for _, v in parts])
    return _group_sum(keys, vals)


def _group_sum(keys, vals):
    order = np.argsort(keys, kind="stable")
    keys, vals = keys[order], vals[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    sums = np.add.reduceat(vals, starts) if len(vals) else vals
    ukeys = keys[starts]
    keep = sums > 0
    return ukeys[keep], sums[keep]


def _joint_pmf_rows(net, dist, vars, nodes, bounds, workers):
    # joint alphabet too large for an int64 key: rank the code rows instead
    def work(b):
        x, prob = _chunk_inputs(net, dist, nodes, *b)
        cols = [var_codes(net, v, x, prob.shape) for v in vars]
        return np.stack(cols, axis=1), prob

    parts = ordered_map(work, bounds, workers)
    rows = np.concatenate([r for r, _ in parts])
    vals = np.concatenate([p for _, p in parts])
    _, inv = np.unique(rows, axis=0, return_inverse=True)
    return _group_sum(inv.ravel().astype(np.int64), vals)


# ---------------------------------------------------------------------------
# information measures


def joint_entropy(net: Network, dist: InputDistribution, vars, *, cap=DEFAULT_CAP, workers=1) -> float:
    """H(vars) in bits."""
    _, probs = joint_pmf(net, dist, list(vars), cap=cap, workers=workers)
    return _entropy_bits(probs)


def conditional_entropy(net, dist, a, c=(), *, cap=DEFAULT_CAP, workers=1) -> float:
    """H(A | C) = H(A, C) - H(C)."""
    a, c = list(a), list(c)
    h_ac = joint_entropy(net, dist, a + c, cap=cap, workers=workers)
    h_c = joint_entropy(net, dist, c, cap=cap, workers=workers) if c else 0.0
    value = h_ac - h_c
    return 0.0 if -1e-12 < value < 0 else value


def conditional_mutual_information(net, dist, a, b, c=(), *, cap=DEFAULT_CAP, workers=1) -> float:
    """I(A; B | C) = H(A,C) + H(B,C) - H(A,B,C) - H(C), clamped at 1e-12."""
    a, b, c = list(a), list(b), list(c)
    h = lambda vs: joint_entropy(net, dist, vs, cap=cap, workers=workers) if vs else 0.0
    value = h(a + c) + h(b + c) - h(a + b + c) - h(c)
    if -1e-12 < value < 0:
        return 0.0
    return value
