"""Relay-network topologies, channel functions and the v1 text format.

A network is a DAG with one source, one or more destinations and relays in
between. Three channel semantics are supported:

* ``aref``: node ``v`` observes one symbol ``f_uv(x_u)`` per incoming edge
  (broadcast, no interference).
* ``deterministic``: node ``v`` observes a single symbol that is a function of
  all incoming inputs.
* ``gaussian``: edges carry a positive power gain; only closed-form rate
  formulas are evaluated for this mode.

Node ids are the integers used in the file. They are kept as the public
labels; ``Network.index`` gives the dense 0-based position.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ArityError,
    CycleError,
    GainError,
    ModeError,
    ParseError,
    ReachabilityError,
    RoleError,
)

MODES = ("aref", "deterministic", "gaussian")
ROLES = ("source", "dest", "relay")
HEADER = "relaynet v1"


@dataclass(frozen=True)
class EdgeFn:
    """Per-edge function ``Y_uv = f_uv(X_u)`` for aref networks."""

    kind: str  # identity | const | table
    const: int = 0
    table: tuple[int, ...] = ()

    def lookup(self, q_in: int) -> np.ndarray:
        if self.kind == "identity":
            return np.arange(q_in, dtype=np.int64)
        if self.kind == "const":
            return np.full(q_in, self.const, dtype=np.int64)
        return np.asarray(self.table, dtype=np.int64)

    def render(self) -> str:
        if self.kind == "identity":
            return "identity"
        if self.kind == "const":
            return f"const:{self.const}"
        return "table:" + ",".join(str(c) for c in self.table)

    @classmethod
    def from_text(cls, text: str) -> EdgeFn:
        if text == "identity":
            return cls("identity")
        if text.startswith("const:"):
            return cls("const", const=_nonneg_int(text[6:], "const value"))
        if text.startswith("table:"):
            return cls("table", table=_int_list(text[6:]))
        raise ValueError(f"unknown edge function {text!r}")


@dataclass(frozen=True)
class RxFn:
    """Receive function of a deterministic-mode node over its in-neighbour inputs.

    ``table`` is row-major over the in-neighbours in ascending id order, the
    first in-neighbour being the most significant digit.
    """

    kind: str  # xor | table
    table: tuple[int, ...] = ()

    def render(self) -> str:
        if self.kind == "xor":
            return "xor"
        return "table:" + ",".join(str(c) for c in self.table)

    @classmethod
    def from_text(cls, text: str) -> RxFn:
        if text == "xor":
            return cls("xor")
        if text.startswith("table:"):
            return cls("table", table=_int_list(text[6:]))
        raise ValueError(f"unknown receive function {text!r}")


@dataclass(frozen=True)
class Layering:
    layer: dict[int, int]  # longest path length from the source
    shortest: dict[int, int]
    L: int
    is_layered: bool


@dataclass
class Network:
    mode: str
    nodes: tuple[int, ...]
    roles: dict[int, str]
    edges: tuple[tuple[int, int], ...]
    alphabet: dict[int, int] = field(default_factory=dict)
    edge_fns: dict[tuple[int, int], EdgeFn] = field(default_factory=dict)
    rx_fns: dict[int, RxFn] = field(default_factory=dict)
    gains: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = tuple(sorted(self.nodes))
        self.edges = tuple(sorted(set(self.edges)))
        self.index = {u: i for i, u in enumerate(self.nodes)}
        self._in = {u: [] for u in self.nodes}
        self._out = {u: [] for u in self.nodes}
        for u, v in self.edges:
            self._out[u].append(v)
            self._in[v].append(u)
        if self.mode != "gaussian":
            for u in self.nodes:
                self.alphabet.setdefault(u, 2)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.nodes == other.nodes
            and self.roles == other.roles
            and self.edges == other.edges
            and self.alphabet == other.alphabet
            and self.edge_fns == other.edge_fns
            and self.rx_fns == other.rx_fns
            and self.gains == other.gains
        )

    @property
    def source(self) -> int:
        return next(u for u in self.nodes if self.roles.get(u) == "source")

    @property
    def destinations(self) -> list[int]:
        return [u for u in self.nodes if self.roles.get(u) == "dest"]

    def in_neighbors(self, v: int) -> list[int]:
        return self._in[v]

    def out_neighbors(self, u: int) -> list[int]:
        return self._out[u]

    @property
    def q_out(self) -> int:
        """Alphabet size of a single aref edge output."""
        return max(self.alphabet.values()) if self.alphabet else 1

    def output_radix(self, v: int) -> int:
        """Number of distinct values the code of ``Y_v`` can take."""
        k = len(self._in[v])
        if k == 0:
            return 1
        if self.mode == "aref":
            return self.q_out**k
        return self.alphabet[v]

    def input_tuple_count(self) -> int:
        return math.prod(self.alphabet[u] for u in self.nodes)


# ---------------------------------------------------------------------------
# evaluation of the deterministic channel


def edge_output(net: Network, u: int, v: int, xu: np.ndarray) -> np.ndarray:
    return net.edge_fns[(u, v)].lookup(net.alphabet[u])[xu]


def node_output(net: Network, v: int, x, shape=None) -> np.ndarray:
    """Integer code of ``Y_v`` for every position of the input arrays in ``x``.

    ``x`` maps node id to an integer array; all arrays share one shape. In aref
    mode the code packs the edge outputs of the in-neighbours in ascending
    order, least significant first.
    """
    preds = net.in_neighbors(v)
    if not preds:
        if shape is None:
            shape = np.shape(next(iter(x.values())))
        return np.zeros(shape, dtype=np.int64)
    if net.mode == "aref":
        r = net.q_out
        code = np.zeros(np.shape(x[preds[0]]), dtype=np.int64)
        for j, u in enumerate(preds):
            code = code + edge_output(net, u, v, x[u]) * (r**j)
        return code
    if net.mode == "deterministic":
        fn = net.rx_fns[v]
        if fn.kind == "xor":
            total = sum(np.asarray(x[u], dtype=np.int64) for u in preds)
            return total % net.alphabet[v]
        idx = np.zeros(np.shape(x[preds[0]]), dtype=np.int64)
        for u in preds:
            idx = idx * net.alphabet[u] + x[u]
        return np.asarray(fn.table, dtype=np.int64)[idx]
    raise ModeError("gaussian networks have no discrete channel outputs")


# ---------------------------------------------------------------------------
# graph algorithms


def toposort(net: Network) -> list[int]:
    """Kahn's algorithm with ties broken by the smallest id."""
    indeg = {u: len(net.in_neighbors(u)) for u in net.nodes}
    heap = [u for u in net.nodes if indeg[u] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in net.out_neighbors(u):
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) != len(net.nodes):
        stuck = sorted(u for u in net.nodes if indeg[u] > 0)
        raise CycleError(f"graph has a cycle through nodes {stuck}")
    return order


def reachable_from(net: Network, s: int) -> set[int]:
    seen = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v in net.out_neighbors(u):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def longest_path_and_layering(net: Network) -> Layering:
    s = net.source
    reach = reachable_from(net, s)
    longest = {s: 0}
    shortest = {s: 0}
    for u in toposort(net):
        if u not in longest:
            continue
        for v in net.out_neighbors(u):
            longest[v] = max(longest.get(v, -1), longest[u] + 1)
            shortest[v] = min(shortest.get(v, len(net.nodes)), shortest[u] + 1)
    dests = [t for t in net.destinations if t in reach]
    if not dests:
        raise ReachabilityError("no destination is reachable from the source")
    L = max(longest[t] for t in dests)
    is_layered = all(longest[u] == shortest[u] for u in reach)
    return Layering(layer=longest, shortest=shortest, L=L, is_layered=is_layered)


def steiner_reachability(net: Network) -> bool:
    """True iff an out-arborescence rooted at the source spans every destination.

    In gaussian mode only edges with a positive gain count.
    """
    s = net.source
    if net.mode == "gaussian":
        usable = {e for e in net.edges if net.gains.get(e, 0.0) > 0}
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in net.out_neighbors(u):
                if (u, v) in usable and v not in seen:
                    seen.add(v)
                    queue.append(v)
    else:
        seen = reachable_from(net, s)
    return all(t in seen for t in net.destinations)


# ---------------------------------------------------------------------------
# validation


def validate(net: Network, require_reachable: bool = True) -> Network:
    if net.mode not in MODES:
        raise ModeError(f"unknown mode {net.mode!r}")
    sources = [u for u in net.nodes if net.roles.get(u) == "source"]
    if len(sources) != 1:
        raise RoleError(f"expected exactly one source, found {len(sources)}")
    if not net.destinations:
        raise RoleError("no destination node declared")
    for u, v in net.edges:
        if u == v:
            raise CycleError(f"self-loop at node {u}")
        if u not in net.index or v not in net.index:
            raise ParseError(f"edge ({u},{v}) references an undeclared node")
    toposort(net)

    if net.mode == "aref":
        for e in net.edges:
            if e not in net.edge_fns:
                raise ArityError(f"edge {e} has no edge function")
        edge_set = set(net.edges)
        for (u, v), fn in net.edge_fns.items():
            if (u, v) not in edge_set:
                raise ArityError(f"edge function given for missing edge ({u},{v})")
            q_in = net.alphabet[u]
            if fn.kind == "table" and len(fn.table) != q_in:
                raise ArityError(
                    f"edge ({u},{v}) table has {len(fn.table)} entries, "
                    f"sender alphabet is {q_in}"
                )
            out = fn.lookup(q_in)
            if out.size and (out.min() < 0 or out.max() >= net.q_out):
                raise ArityError(f"edge ({u},{v}) outputs leave alphabet 0..{net.q_out - 1}")
    elif net.mode == "deterministic":
        for v in net.nodes:
            preds = net.in_neighbors(v)
            if preds and v not in net.rx_fns:
                raise ArityError(f"node {v} has in-degree {len(preds)} but no rxfn")
            if not preds and v in net.rx_fns:
                raise ArityError(f"node {v} has an rxfn but no incoming edges")
            fn = net.rx_fns.get(v)
            if fn is not None and fn.kind == "table":
                size = math.prod(net.alphabet[u] for u in preds)
                if len(fn.table) != size:
                    raise ArityError(
                        f"rxfn of node {v} has {len(fn.table)} entries, expected {size}"
                    )
                if min(fn.table) < 0 or max(fn.table) >= net.alphabet[v]:
                    raise ArityError(f"rxfn of node {v} outputs leave alphabet")
    else:
        for e in net.edges:
            g = net.gains.get(e)
            if g is None or not math.isfinite(g) or g <= 0:
                raise GainError(f"edge {e} needs a finite gain > 0, got {g}")

    if require_reachable:
        reach = reachable_from(net, net.source)
        missing = [t for t in net.destinations if t not in reach]
        if missing:
            raise ReachabilityError(f"destinations {missing} unreachable from source")
    return net


# ---------------------------------------------------------------------------
# v1 text format


def _nonneg_int(text, what):
    try:
        value = int(text)
    except ValueError:
        raise ValueError(f"bad {what} {text!r}") from None
    if value < 0:
        raise ValueError(f"{what} must be nonnegative")
    return value


def _int_list(text):
    if not text:
        raise ValueError("empty table")
    return tuple(_nonneg_int(t, "table entry") for t in text.split(","))


def _kv(token, lineno):
    if "=" not in token:
        raise ParseError(f"expected key=value, got {token!r}", lineno)
    key, _, value = token.partition("=")
    return key, value


def parse_network(text: str, require_reachable: bool = True) -> Network:
    """Parse and validate a v1 network description."""
    mode = None
    q = None
    nodes: dict[int, str] = {}
    edges: list[tuple[int, int]] = []
    edge_fns: dict[tuple[int, int], EdgeFn] = {}
    rx_fns: dict[int, RxFn] = {}
    gains: dict[tuple[int, int], float] = {}
    seen_header = False
    refs: list[tuple[int, int]] = []  # (node, line) references to check

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if not seen_header:
            if line != HEADER:
                raise ParseError(f"expected header {HEADER!r}", lineno)
            seen_header = True
            continue
        kw, args = tokens[0], tokens[1:]
        try:
            if kw == "mode":
                if mode is not None:
                    raise ParseError("mode given twice", lineno)
                if len(args) != 1 or args[0] not in MODES:
                    raise ParseError(f"mode must be one of {'|'.join(MODES)}", lineno)
                mode = args[0]
            elif kw == "alphabet":
                if q is not None:
                    raise ParseError("alphabet given twice", lineno)
                if len(args) != 1:
                    raise ParseError("usage: alphabet q=<int>", lineno)
                key, value = _kv(args[0], lineno)
                if key != "q":
                    raise ParseError(f"unknown key {key!r}", lineno)
                q = _nonneg_int(value, "alphabet size")
                if q < 1:
                    raise ParseError("alphabet size must be >= 1", lineno)
            elif kw == "node":
                if not args or len(args) > 2:
                    raise ParseError("usage: node <id> [role=...]", lineno)
                u = _nonneg_int(args[0], "node id")
                role = "relay"
                if len(args) == 2:
                    key, role = _kv(args[1], lineno)
                    if key != "role":
                        raise ParseError(f"unknown key {key!r}", lineno)
                    if role not in ROLES:
                        raise ParseError(f"unknown role {role!r}", lineno)
                if u in nodes:
                    raise ParseError(f"node {u} declared twice", lineno)
                nodes[u] = role
            elif kw == "edge":
                if mode is None:
                    raise ParseError("edge before mode", lineno)
                if len(args) < 2:
                    raise ParseError("usage: edge <u> <v> ...", lineno)
                u = _nonneg_int(args[0], "node id")
                v = _nonneg_int(args[1], "node id")
                if (u, v) in edges:
                    raise ParseError(f"edge ({u},{v}) given twice", lineno)
                if u == v:
                    raise CycleError(f"line {lineno}: self-loop at node {u}")
                extra = dict(_kv(t, lineno) for t in args[2:])
                allowed = {"aref": {"fn"}, "deterministic": set(), "gaussian": {"gain"}}[mode]
                unknown = set(extra) - allowed
                if unknown:
                    raise ParseError(f"unknown key(s) {sorted(unknown)} for {mode} edge", lineno)
                if mode == "aref":
                    if "fn" not in extra:
                        raise ParseError("aref edge needs fn=...", lineno)
                    edge_fns[(u, v)] = EdgeFn.from_text(extra["fn"])
                elif mode == "gaussian":
                    if "gain" not in extra:
                        raise ParseError("gaussian edge needs gain=...", lineno)
                    gains[(u, v)] = float(extra["gain"])
                edges.append((u, v))
                refs += [(u, lineno), (v, lineno)]
            elif kw == "rxfn":
                if mode != "deterministic":
                    raise ParseError("rxfn is only valid in deterministic mode", lineno)
                if len(args) != 2:
                    raise ParseError("usage: rxfn <v> xor|table:...", lineno)
                v = _nonneg_int(args[0], "node id")
                if v in rx_fns:
                    raise ParseError(f"rxfn for node {v} given twice", lineno)
                rx_fns[v] = RxFn.from_text(args[1])
                refs.append((v, lineno))
            else:
                raise ParseError(f"unknown directive {kw!r}", lineno)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None

    if not seen_header:
        raise ParseError(f"missing header {HEADER!r}", 1)
    if mode is None:
        raise ParseError("missing mode line")
    if q is not None and mode == "gaussian":
        raise ParseError("alphabet is not meaningful in gaussian mode")
    for u, lineno in refs:
        if u not in nodes:
            raise ParseError(f"node {u} is not declared", lineno)

    alphabet = {} if mode == "gaussian" else {u: q or 2 for u in nodes}
    net = Network(
        mode=mode,
        nodes=tuple(nodes),
        roles=dict(nodes),
        edges=tuple(edges),
        alphabet=alphabet,
        edge_fns=edge_fns,
        rx_fns=rx_fns,
        gains=gains,
    )
    return validate(net, require_reachable=require_reachable)


def load_network(path, require_reachable: bool = True) -> Network:
    return parse_network(Path(path).read_text(encoding="utf-8"), require_reachable)


def render_network(net: Network) -> str:
    """Canonical v1 text; ``parse_network(render_network(net)) == net``."""
    lines = [HEADER, f"mode {net.mode}"]
    if net.mode != "gaussian":
        sizes = set(net.alphabet.values())
        if len(sizes) > 1:
            raise ValueError("v1 format only supports a single alphabet size")
        lines.append(f"alphabet q={sizes.pop()}")
    for u in net.nodes:
        lines.append(f"node {u} role={net.roles.get(u, 'relay')}")
    for u, v in net.edges:
        if net.mode == "aref":
            lines.append(f"edge {u} {v} fn={net.edge_fns[(u, v)].render()}")
        elif net.mode == "gaussian":
            lines.append(f"edge {u} {v} gain={net.gains[(u, v)]!r}")
        else:
            lines.append(f"edge {u} {v}")
    for v in sorted(net.rx_fns):
        lines.append(f"rxfn {v} {net.rx_fns[v].render()}")
    return "\n".join(lines) + "\n"


def summary(net: Network) -> str:
    lay = longest_path_and_layering(net)
    return f"{len(net.nodes)} nodes, {len(net.edges)} edges, acyclic, L={lay.L}"
