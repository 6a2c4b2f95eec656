"""Batch and pipelined block schedules for acyclic networks.

Transmission spans ``B + L - 1`` length-n blocks, ``L`` being the longest
source-to-destination path. In batch mode the source sends a fresh codeword
of the single long message ``w`` in each of blocks ``1..B``. In pipelined
mode it sends message part ``w_b`` in block ``b``. A relay transmits in block
``b`` a function of what it received in block ``b - 1``, so its message
dependencies are the union of its in-neighbours' dependencies one block
earlier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .network import Network, longest_path_and_layering

IDLE = "·"  # the "·" used for idle cells
BATCH_MESSAGE = 0  # dependency label of the single long message ``w``


@dataclass(frozen=True)
class TransmissionRecord:
    node: int
    block: int
    deps: tuple[int, ...]  # sorted message indices (1-based); (0,) is the batch message


@dataclass
class Schedule:
    mode: str
    B: int
    L: int
    source: int
    entries: dict[tuple[int, int], TransmissionRecord]
    transmitters: list[int] = field(default_factory=list)

    @property
    def total_blocks(self) -> int:
        return self.B + self.L - 1

    def record(self, node: int, block: int) -> TransmissionRecord | None:
        return self.entries.get((node, block))

    def deps(self, node: int, block: int) -> tuple[int, ...]:
        rec = self.entries.get((node, block))
        return rec.deps if rec else ()


def build_schedule(net: Network, B: int, mode: str) -> Schedule:
    if mode not in ("batch", "pipelined"):
        raise ValueError(f"unknown schedule mode {mode!r}")
    if B < 1:
        raise ValueError("B must be at least 1")
    lay = longest_path_and_layering(net)  # raises if no destination is reachable
    s = net.source
    total = B + lay.L - 1
    deps: dict[tuple[int, int], frozenset] = {}
    for b in range(1, total + 1):
        for u in net.nodes:
            if u == s:
                d = frozenset([b]) if b <= B else frozenset()
            else:
                d = frozenset().union(*(deps.get((v, b - 1), frozenset()) for v in net.in_neighbors(u)))
            deps[(u, b)] = d
    entries = {}
    for (u, b), d in deps.items():
        if not d:
            continue
        label = (BATCH_MESSAGE,) if mode == "batch" else tuple(sorted(d))
        entries[(u, b)] = TransmissionRecord(u, b, label)
    transmitters = [u for u in net.nodes if net.out_neighbors(u)]
    return Schedule(mode, B, lay.L, s, entries, transmitters)


# ---------------------------------------------------------------------------
# delay and decodability


@dataclass
class Blocking:
    node: int
    block: int
    deps: tuple[int, ...]


@dataclass
class WindowVerdict:
    message: int
    deadline: int
    decodable: bool
    blockers: list[Blocking]


@dataclass
class DelayReport:
    encoding_delay_blocks: int  # message blocks the source buffers before its first transmission
    message_needed_at: dict[int, int]  # message part -> block in which the source first needs it
    end_to_end_delay_blocks: int
    window: list[WindowVerdict] | None = None


def delay_report(schedule: Schedule, net: Network | None = None, t: int | None = None) -> DelayReport:
    """Encoding and end-to-end delay; adds forward-window verdicts when a destination is given."""
    if schedule.mode == "pipelined":
        needed = {b: b for b in range(1, schedule.B + 1)}
        enc = 1
    else:
        needed = {b: 1 for b in range(1, schedule.B + 1)}
        enc = schedule.B
    window = None
    if net is not None and t is not None and schedule.mode == "pipelined":
        window = forward_window_analysis(schedule, net, t)
    return DelayReport(enc, needed, schedule.total_blocks, window)


def forward_window_analysis(schedule: Schedule, net: Network, t: int) -> list[WindowVerdict]:
    """Whether ``w_b`` is decodable at ``t`` by block ``b + L - 1`` without later parts.

    A message is blocked when some transmission heard by ``t`` up to that
    block depends on ``w_b`` and also on a later part ``w_b'``, ``b' > b``.
    """
    if schedule.mode != "pipelined":
        raise ValueError("forward-window analysis applies to pipelined schedules")
    preds = net.in_neighbors(t)
    out = []
    for b in range(1, schedule.B + 1):
        deadline = b + schedule.L - 1
        blockers = []
        for blk in range(1, deadline + 1):
            for v in preds:
                d = schedule.deps(v, blk)
                if b in d and max(d) > b:
                    blockers.append(Blocking(v, blk, d))
        out.append(WindowVerdict(b, deadline, not blockers, blockers))
    return out


# ---------------------------------------------------------------------------
# rendering


def _msg(m: int) -> str:
    return "w" if m == BATCH_MESSAGE else f"w{m}"


def _cell(schedule: Schedule, u: int, b: int) -> str:
    rec = schedule.record(u, b)
    if rec is None:
        return IDLE
    args = ",".join(_msg(m) for m in rec.deps)
    if u == schedule.source:
        return f"x{u}^({b})({args})"
    return f"x{u}^({b})(y{u}^({b - 1})({args}))"


def render_table(schedule: Schedule) -> str:
    """Fixed-width table: one row per block, one column per transmitting node."""
    header = ["Block b", "Message"] + [f"{u} Transmits" for u in schedule.transmitters]
    rows = []
    for b in range(1, schedule.total_blocks + 1):
        if b <= schedule.B:
            message = "w" if schedule.mode == "batch" else f"w{b}"
        else:
            message = IDLE
        rows.append([str(b), message] + [_cell(schedule, u, b) for u in schedule.transmitters])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]

    def line(cells):
        return " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([line(header), sep] + [line(r) for r in rows]) + "\n"


def render_machine(schedule: Schedule) -> str:
    """One record per active (node, block): ``node,block,deps=w1+w2``."""
    lines = []
    for u, b in sorted(schedule.entries, key=lambda k: (k[1], k[0])):
        rec = schedule.entries[(u, b)]
        lines.append(f"{u},{b},deps=" + "+".join(_msg(m) for m in rec.deps))
    return "\n".join(lines) + "\n"


def render_delay(report: DelayReport, mode: str) -> str:
    lines = [
        f"mode: {mode}",
        f"encoding_delay_blocks: {report.encoding_delay_blocks}",
        "message_needed_at: "
        + " ".join(f"w{m}@{blk}" for m, blk in sorted(report.message_needed_at.items())),
        f"end_to_end_delay_blocks: {report.end_to_end_delay_blocks}",
    ]
    for v in report.window or []:
        if v.decodable:
            lines.append(f"window w{v.message} deadline={v.deadline} decodable")
        else:
            first = v.blockers[0]
            lines.append(
                f"window w{v.message} deadline={v.deadline} blocked by node {first.node} "
                f"block {first.block} deps={{{','.join(_msg(m) for m in first.deps)}}}"
            )
    return "\n".join(lines) + "\n"
