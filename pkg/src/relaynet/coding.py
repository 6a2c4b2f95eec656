"""Monte-Carlo simulation of random coding over deterministic relay networks.

Each trial draws a fresh source codebook and fresh random relay maps, pushes
every message through the network in one topological pass (each node's whole
length-n block is a function of the block it received) and applies the
ambiguity decoder at every destination: message ``w`` is in error iff some
``w' != w`` produces the same destination block.

Relay maps are materialised lazily. An image is drawn the first time a
received block is seen and cached, which realises the same random function
as drawing all images up front.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from ._parallel import ordered_map
from .cuts import Cut, cut_value
from .errors import CapError, EmptyTypicalSetError, ModeError, PreconditionError
from .info import InputDistribution, X, Y, _radix, combine_codes, joint_pmf, product_entropy
from .network import Network, node_output, toposort

MESSAGE_CAP = 2**16
PAIR_CAP = 10**4
TYPE_CAP = 10**6
TRIALS_PER_TASK = 64


@dataclass(frozen=True)
class TypicalityConfig:
    delta: float = 0.1
    mode: str = "iid"  # iid | strict

    def __post_init__(self):
        if self.mode not in ("iid", "strict"):
            raise ValueError(f"unknown typicality mode {self.mode!r}")
        if not 0 < self.delta < 1 and self.mode == "strict":
            raise ValueError("delta must lie in (0, 1)")


def message_count(n: int, rate: float) -> int:
    """ceil(2^(nR)), computed without drifting past exact powers of two."""
    return max(1, math.ceil(round(2.0 ** (n * rate), 9)))


# ---------------------------------------------------------------------------
# typical sequences


def _count_bounds(p, n, delta):
    tol = 1e-9
    lo = [math.ceil(n * pa * (1 - delta) - tol) for pa in p]
    hi = [math.floor(n * pa * (1 + delta) + tol) for pa in p]
    return lo, hi


def typical_types(p, n: int, delta: float) -> list[tuple[int, ...]]:
    """Count vectors of the robustly typical set: |k_a/n - p_a| <= delta p_a."""
    lo, hi = _count_bounds(p, n, delta)
    q = len(p)
    out = []

    def rec(a, remaining, prefix):
        if a == q - 1:
            if lo[a] <= remaining <= hi[a]:
                out.append(tuple(prefix + [remaining]))
            return
        rest_lo = sum(lo[a + 1:])
        rest_hi = sum(hi[a + 1:])
        for k in range(max(lo[a], remaining - rest_hi), min(hi[a], remaining - rest_lo) + 1):
            rec(a + 1, remaining - k, prefix + [k])
            if len(out) > TYPE_CAP:
                raise CapError(f"typical set has more than {TYPE_CAP} types")

    if sum(lo) <= n <= sum(hi):
        rec(0, n, [])
    return out


def is_typical(codes: np.ndarray, keys: np.ndarray, probs: np.ndarray, delta: float) -> bool:
    """Robust typicality of a sequence of joint-symbol codes against ``(keys, probs)``."""
    n = codes.size
    seen, counts = np.unique(codes, return_counts=True)
    pos = np.searchsorted(keys, seen)
    pos = np.minimum(pos, len(keys) - 1)
    if not np.array_equal(keys[pos], seen):
        return False  # a zero-probability symbol occurred
    freq = np.zeros(len(keys))
    freq[pos] = counts / n
    return bool(np.all(np.abs(freq - probs) <= delta * probs + 1e-12))


class TypicalSampler:
    """Uniform draws from the robustly typical set T_delta^n(P).

    A type is chosen with probability proportional to its number of
    sequences, then a uniformly random arrangement of it.
    """

    def __init__(self, p, n: int, delta: float, label: str = "P"):
        self.p = np.asarray(p, dtype=float)
        self.n = n
        self.types = np.array(typical_types(self.p, n, delta), dtype=np.int64)
        if len(self.types) == 0:
            raise EmptyTypicalSetError(
                f"T_delta^n({label}) is empty for n={n}, delta={delta}, p={self.p.tolist()}"
            )
        logw = np.array(
            [math.lgamma(n + 1) - sum(math.lgamma(k + 1) for k in t) for t in self.types]
        )
        w = np.exp(logw - logw.max())
        self.weights = w / w.sum()
        self.log2_size = (logw.max() + math.log(w.sum())) / math.log(2)

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        picks = rng.choice(len(self.types), size=k, p=self.weights)
        symbols = np.arange(len(self.p))
        rows = np.stack([np.repeat(symbols, self.types[i]) for i in picks]) if k else np.zeros((0, self.n), dtype=np.int64)
        return rng.permuted(rows, axis=1)


# ---------------------------------------------------------------------------
# codebooks and relay maps


def _row_view(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    return a.view(np.dtype((np.void, a.dtype.itemsize * a.shape[1]))).ravel()


def _row_ids(a: np.ndarray):
    """Class id per row (ids in order of first appearance) and first-row index per class."""
    if a.shape[1] == 0:
        return np.zeros(a.shape[0], dtype=np.int64), np.zeros(1, dtype=np.int64)
    _, first, inv = np.unique(_row_view(a), return_index=True, return_inverse=True)
    inv = inv.ravel()
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inv], np.sort(first)


@dataclass
class Codebook:
    n: int
    rate: float
    words: np.ndarray  # (messages, n)

    def __len__(self):
        return len(self.words)


class RelayMap:
    """Random function from received blocks to transmitted blocks of length n."""

    def __init__(self, node: int, draw, rng: np.random.Generator):
        self.node = node
        self._draw = draw
        self._rng = rng
        self._cache: dict[bytes, np.ndarray] = {}

    def __len__(self):
        return len(self._cache)

    def __call__(self, block) -> np.ndarray:
        return self.apply(np.asarray(block, dtype=np.int64)[None, :])[0]

    def apply(self, blocks: np.ndarray) -> np.ndarray:
        blocks = np.ascontiguousarray(blocks, dtype=np.int64)
        ids, first = _row_ids(blocks)
        keys = [blocks[i].tobytes() for i in first]
        missing = [k for k in keys if k not in self._cache]
        if missing:
            fresh = self._draw(self._rng, len(missing))
            for k, img in zip(missing, fresh):
                self._cache[k] = img
        images = np.stack([self._cache[k] for k in keys])
        return images[ids]


def _drawer(p, n, cfg: TypicalityConfig, label: str):
    if cfg.mode == "strict":
        sampler = TypicalSampler(p, n, cfg.delta, label)
        return sampler.sample
    p = np.asarray(p, dtype=float)

    def draw(rng, k):
        return rng.choice(len(p), size=(k, n), p=p)

    return draw


# ---------------------------------------------------------------------------
# one trial


@dataclass
class TrialState:
    """Everything produced by one trial: codebook, relay maps and all node blocks."""

    net: Network
    dist: InputDistribution
    cfg: TypicalityConfig
    codebook: Codebook
    relay_maps: dict[int, RelayMap]
    x: dict[int, np.ndarray]  # node -> (messages, n) transmitted blocks
    y: dict[int, np.ndarray]  # node -> (messages, n) received-symbol codes
    y_ids: dict[int, np.ndarray]  # node -> class id of its received block per message
    context: dict = field(default_factory=dict, repr=False)

    @property
    def messages(self) -> int:
        return len(self.codebook)

    def outputs(self, w: int) -> dict[int, np.ndarray]:
        return {u: self.y[u][w] for u in self.y}


def _check_setup(net, n, rate, message_cap):
    if net.mode == "gaussian":
        raise ModeError("coded simulation needs a deterministic or aref network")
    if n < 1:
        raise ValueError("block length must be positive")
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if n * rate > math.log2(message_cap) + 1e-12:
        raise CapError(
            f"2^(nR) = 2^{n * rate:g} messages exceed the message cap {message_cap}"
        )
    return message_count(n, rate)


def run_trial(net, dist, n, rate, rng, cfg=TypicalityConfig(), *, message_cap=MESSAGE_CAP,
              drawers=None, context=None) -> TrialState:
    M = _check_setup(net, n, rate, message_cap)
    if drawers is None:
        drawers = {u: _drawer(dist.probs[u], n, cfg, f"P_X{u}") for u in net.nodes}
    s = net.source
    words = drawers[s](rng, M)
    codebook = Codebook(n, rate, words)
    x, y, y_ids, maps = {}, {}, {}, {}
    for u in toposort(net):
        y[u] = node_output(net, u, x, shape=(M, n))
        y_ids[u], _ = _row_ids(y[u])
        if u == s:
            x[u] = words  # received symbols at the source are ignored
        else:
            maps[u] = RelayMap(u, drawers[u], rng)
            x[u] = maps[u].apply(y[u])
    return TrialState(net, dist, cfg, codebook, maps, x, y, y_ids,
                      context if context is not None else {})


def destination_errors(state: TrialState, t: int) -> int:
    """Number of messages the ambiguity decoder at ``t`` gets wrong."""
    ids = state.y_ids[t]
    counts = np.bincount(ids)
    return int((counts[ids] > 1).sum())


def distinguishability_set(outputs_w, outputs_w2, source) -> frozenset:
    """Nodes whose received blocks differ under the two messages; the source always counts."""
    nodes = {u for u in outputs_w if not np.array_equal(outputs_w[u], outputs_w2[u])}
    nodes.add(source)
    return frozenset(nodes)


def _pair_masks(state: TrialState, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    net = state.net
    mask = np.zeros(len(a), dtype=np.int64)
    for u in net.nodes:
        i = net.index[u]
        if u == net.source:
            mask |= 1 << i
        else:
            mask |= (state.y_ids[u][a] != state.y_ids[u][b]).astype(np.int64) << i
    return mask


def sample_pairs(M: int, rng: np.random.Generator, cap: int = PAIR_CAP):
    """All unordered message pairs if there are at most ``cap``, else a seeded sample."""
    total = M * (M - 1) // 2
    if total <= cap:
        a, b = np.triu_indices(M, k=1)
        return a.astype(np.int64), b.astype(np.int64)
    a = rng.integers(M, size=cap)
    b = rng.integers(M - 1, size=cap)
    b = b + (b >= a)
    return a, b


def _mask_to_set(net: Network, mask: int) -> frozenset:
    return frozenset(u for u in net.nodes if mask >> net.index[u] & 1)


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentResult:
    n: int
    rate: float
    messages: int
    trials: int
    master_seed: int
    cfg: TypicalityConfig
    errors: dict[int, int]
    cut_counts: dict[frozenset, int] | None = None
    pairs_examined: int = 0

    @property
    def decisions(self) -> int:
        return self.trials * self.messages

    def p_e(self, t: int) -> float:
        return self.errors[t] / self.decisions if self.decisions else 0.0

    def worst_p_e(self) -> float:
        return max(self.p_e(t) for t in self.errors)

    def wilson(self, t: int, level: float = 0.95) -> tuple[float, float]:
        if not self.decisions:
            return 0.0, 1.0
        ci = binomtest(self.errors[t], self.decisions).proportion_ci(
            confidence_level=level, method="wilson"
        )
        return float(ci.low), float(ci.high)


def _trial_rng(seed: int, i: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(i), stream]))


def run_experiment(
    net: Network,
    dist: InputDistribution,
    n: int,
    rate: float,
    trials: int,
    seed: int,
    cfg: TypicalityConfig = TypicalityConfig(),
    *,
    cut_stats: bool = False,
    workers=None,
    message_cap: int = MESSAGE_CAP,
    pair_cap: int = PAIR_CAP,
) -> ExperimentResult:
    """Run ``trials`` independent random-code trials.

    Trial ``i`` uses an RNG seeded from ``(seed, i)``, so the result is the
    same for any number of workers.
    """
    dist.check(net)
    M = _check_setup(net, n, rate, message_cap)
    drawers = {u: _drawer(dist.probs[u], n, cfg, f"P_X{u}") for u in net.nodes}
    dests = net.destinations

    def task(bounds):
        errors = dict.fromkeys(dests, 0)
        masks = {}
        pairs = 0
        for i in range(*bounds):
            state = run_trial(net, dist, n, rate, _trial_rng(seed, i), cfg,
                              message_cap=message_cap, drawers=drawers)
            for t in dests:
                errors[t] += destination_errors(state, t)
            if cut_stats and M > 1:
                a, b = sample_pairs(M, _trial_rng(seed, i, 1), pair_cap)
                ms, cs = np.unique(_pair_masks(state, a, b), return_counts=True)
                for m, c in zip(ms.tolist(), cs.tolist()):
                    masks[m] = masks.get(m, 0) + c
                pairs += len(a)
        return errors, masks, pairs

    chunks = [(lo, min(lo + TRIALS_PER_TASK, trials)) for lo in range(0, trials, TRIALS_PER_TASK)]
    errors = dict.fromkeys(dests, 0)
    masks: dict[int, int] = {}
    pairs = 0
    for e, m, p in ordered_map(task, chunks, workers):
        for t in dests:
            errors[t] += e[t]
        for k, c in m.items():
            masks[k] = masks.get(k, 0) + c
        pairs += p
    cut_counts = None
    if cut_stats:
        cut_counts = {_mask_to_set(net, k): c for k, c in sorted(masks.items())}
    return ExperimentResult(n, rate, M, trials, seed, cfg, errors, cut_counts, pairs)


def rate_sweep(net, dist, n, rates, trials, seed, cfg=TypicalityConfig(), *, workers=None,
               message_cap=MESSAGE_CAP) -> list[ExperimentResult]:
    """One experiment per rate, in the order given; all rates share the seed schedule."""
    return [
        run_experiment(net, dist, n, r, trials, seed, cfg, workers=workers, message_cap=message_cap)
        for r in rates
    ]


# ---------------------------------------------------------------------------
# theory hooks


def theoretical_cut_exponent(net: Network, dist: InputDistribution, cut: Cut, delta: float) -> float:
    """H(Y_beta2 | X_Sc) - 3 delta H(X_V), in bits; may be negative."""
    h = cut_value(net, dist, cut, "deterministic").value_bits
    return h - 3 * delta * product_entropy(dist, net.nodes)


@dataclass
class ExponentCheck:
    S: frozenset
    count: int
    pairs: int
    empirical: float
    bound: float
    ok: bool
    flagged: bool  # too few samples to judge


def exponent_check(net, dist, result: ExperimentResult, delta: float = 0.0,
                   min_samples: int = 100) -> list[ExponentCheck]:
    """Compare Pr[S(w,w') = S] with 2^(-n * exponent) + 3 sigma for every proper cut."""
    if result.cut_counts is None:
        raise ValueError("experiment was run without cut statistics")
    N = result.pairs_examined
    s = net.source
    others = [u for u in net.nodes if u != s]
    checks = []
    for mask in range(1 << len(others)):
        S = frozenset([s, *(u for i, u in enumerate(others) if mask >> i & 1)])
        if S == frozenset(net.nodes):
            continue
        count = result.cut_counts.get(S, 0)
        exponent = theoretical_cut_exponent(net, dist, Cut.from_set(net, S), delta)
        bound = min(1.0, 2.0 ** (-result.n * exponent))
        sigma = math.sqrt(bound * (1 - bound) / N) if N else 1.0
        empirical = count / N if N else 0.0
        checks.append(ExponentCheck(
            S, count, N, empirical, bound,
            ok=empirical <= bound + 3 * sigma,
            flagged=N < min_samples,
        ))
    return checks


# ---------------------------------------------------------------------------
# collision-lemma harness for the layered-network analysis


@dataclass
class _Law:
    keys: np.ndarray
    probs: np.ndarray


def _law(state: TrialState, vars) -> _Law:
    cache = state.context.setdefault("laws", {})
    key = tuple(vars)
    if key not in cache:
        if math.prod(_radix(state.net, v) for v in vars) > 2**62:
            raise CapError("joint alphabet too large for the typicality check")
        keys, probs = joint_pmf(state.net, state.dist, list(vars))
        cache[key] = _Law(keys, probs)
    return cache[key]


def inputs_typical(state: TrialState, w: int) -> bool:
    """Whether x_V(w) lies in T_delta^n(P_{X_V})."""
    net = state.net
    vars = [X(u) for u in net.nodes]
    law = _law(state, vars)
    codes = combine_codes(net, vars, [state.x[u][w] for u in net.nodes])
    return is_typical(codes, law.keys, law.probs, state.cfg.delta)


def lemma1_check(state: TrialState, w: int, w2: int, cut: Cut | None = None) -> bool:
    """Check the cut-collision lemma for the pair (w, w').

    With S = S(w, w') the set of nodes that tell the messages apart, verify
    (a) (x_S(w'), y_beta2(S)(w), x_Sc(w)) is jointly typical for
        P_{X_S Y_beta2 X_Sc}, and
    (b) x_Sc(w') == x_Sc(w).
    If ``cut`` is given and S(w, w') differs from it the event did not occur
    and the check holds vacuously. Raises PreconditionError if the harness
    is misused (not strict mode, or an input tuple is atypical).
    """
    if state.cfg.mode != "strict":
        raise PreconditionError("the collision-lemma check needs strict-typical mode")
    for m in (w, w2):
        if not inputs_typical(state, m):
            raise PreconditionError(f"x_V({m}) is not in T_delta^n(P_X_V)")
    if w == w2:
        return True
    net = state.net
    S = distinguishability_set(state.outputs(w), state.outputs(w2), net.source)
    if cut is not None and cut.S != S:
        return True
    event_cut = Cut.from_set(net, S)
    Sc = sorted(event_cut.Sc)
    if not all(np.array_equal(state.x[u][w2], state.x[u][w]) for u in Sc):
        return False
    Sl, b2 = sorted(event_cut.S), sorted(event_cut.beta2)
    vars = [X(u) for u in Sl] + [Y(v) for v in b2] + [X(u) for u in Sc]
    codes = (
        [state.x[u][w2] for u in Sl]
        + [state.y[v][w] for v in b2]
        + [state.x[u][w] for u in Sc]
    )
    law = _law(state, vars)
    return is_typical(combine_codes(net, vars, codes), law.keys, law.probs, state.cfg.delta)


@dataclass
class Lemma1Summary:
    pairs_checked: int = 0
    violations: int = 0
    events: int = 0  # pairs whose distinguishing set excluded some node
    skipped_messages: int = 0


def lemma1_sweep(net, dist, n, rate, trials, seed, cfg, pairs_per_trial=PAIR_CAP) -> Lemma1Summary:
    """Run the collision-lemma check over sampled pairs of messages with typical input tuples."""
    if cfg.mode != "strict":
        raise PreconditionError("the collision-lemma sweep needs strict-typical mode")
    out = Lemma1Summary()
    context: dict = {}
    drawers = {u: _drawer(dist.probs[u], n, cfg, f"P_X{u}") for u in net.nodes}
    for i in range(trials):
        state = run_trial(net, dist, n, rate, _trial_rng(seed, i), cfg,
                          drawers=drawers, context=context)
        good = np.array([w for w in range(state.messages) if inputs_typical(state, w)])
        out.skipped_messages += state.messages - len(good)
        if len(good) < 2:
            continue
        a, b = sample_pairs(len(good), _trial_rng(seed, i, 2), pairs_per_trial)
        for wa, wb in zip(good[a].tolist(), good[b].tolist()):
            out.pairs_checked += 1
            S = distinguishability_set(state.outputs(wa), state.outputs(wb), net.source)
            if len(S) < len(net.nodes):
                out.events += 1
            if not lemma1_check(state, wa, wb):
                out.violations += 1
    return out


# ---------------------------------------------------------------------------
# reports


def render_experiment(result: ExperimentResult, net: Network | None = None,
                      dist: InputDistribution | None = None) -> str:
    lines = [
        "report: simulate",
        f"n: {result.n}",
        f"rate: {result.rate:.6f}",
        f"messages: {result.messages}",
        f"trials: {result.trials}",
        f"master_seed: {result.master_seed}",
        f"typicality: {result.cfg.mode}",
        f"delta: {result.cfg.delta:.6f}",
        "dest,trials,errors,p_e,ci_low,ci_high",
    ]
    for t in sorted(result.errors):
        lo, hi = result.wilson(t)
        lines.append(
            f"{t},{result.trials},{result.errors[t]},{result.p_e(t):.6f},{lo:.6f},{hi:.6f}"
        )
    if result.cut_counts is not None and net is not None:
        lines.append(f"pairs_examined: {result.pairs_examined}")
        lines.append("S,count,empirical,bound,ok,flagged")
        for c in exponent_check(net, dist, result, result.cfg.delta if result.cfg.mode == "strict" else 0.0):
            label = "{" + ",".join(str(u) for u in sorted(c.S)) + "}"
            lines.append(
                f"{label},{c.count},{c.empirical:.6e},{c.bound:.6e},"
                f"{'yes' if c.ok else 'no'},{'yes' if c.flagged else 'no'}"
            )
    return "\n".join(lines) + "\n"


def render_sweep(results: list[ExperimentResult]) -> str:
    lines = ["report: sweep"]
    if results:
        r0 = results[0]
        lines += [f"n: {r0.n}", f"trials: {r0.trials}", f"master_seed: {r0.master_seed}",
                  f"typicality: {r0.cfg.mode}"]
    lines.append("rate,dest,trials,errors,p_e,ci_low,ci_high")
    for r in results:
        for t in sorted(r.errors):
            lo, hi = r.wilson(t)
            lines.append(
                f"{r.rate:.6f},{t},{r.trials},{r.errors[t]},{r.p_e(t):.6f},{lo:.6f},{hi:.6f}"
            )
    return "\n".join(lines) + "\n"
