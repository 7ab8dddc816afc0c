"""Static schedule compilation for the extension-engine datapath.

A hardware shape exposes E extension engines per processing element, so at
most E MLE streams can be combined in one pass over the table. A term with
more factors is split into nodes: the first consumes E fresh factors, every
later node consumes the running partial product (Tmp) plus up to E-1 fresh
factors, and partial products accumulate within a single Tmp buffer rather
than a tree of intermediates. The step sequence, Tmp usage, residency, and
prefetch sets produced here drive both the functional engine's operation
accounting and the analytical performance model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .gates import TMP, CompositePoly


class InfeasibleShape(Exception):
    pass


@dataclass(frozen=True)
class HwShape:
    num_pes: int = 1
    ees_per_pe: int = 2
    pls_per_pe: int = 1
    scratch_buffers: int = 16
    accum_registers: int = 32

    def __post_init__(self):
        if self.num_pes < 1 or self.pls_per_pe < 1:
            raise InfeasibleShape("need at least one PE and one product lane")
        if self.ees_per_pe < 2:
            raise InfeasibleShape("need at least two extension engines per PE")


def nodes_for_degree(m: int, ees: int) -> int:
    """Schedule nodes for a term of total multiplicity m.

    One pass handles up to ees factors; each follow-on pass spends one input
    slot on Tmp, leaving ees-1 slots for fresh factors.
    """
    if m <= ees:
        return 1
    return 1 + math.ceil((m - ees) / (ees - 1))


@dataclass
class Step:
    term_index: int
    mle_ids: list[str]          # consumed this step; TMP occupies one slot
    writes_tmp: bool
    prefetch: list[str] = dc_field(default_factory=list)

    @property
    def uses_tmp(self) -> bool:
        return TMP in self.mle_ids

    def fresh_ids(self) -> list[str]:
        return [i for i in self.mle_ids if i != TMP]


@dataclass
class Schedule:
    gate_name: str
    extensions: int             # K = degree + 1
    steps: list[Step]
    tmp_buffers_used: int       # one Tmp MLE buffer is allocated
    spill_to_scratch: bool      # K exceeded the accumulator registers
    warmup: list[str]           # fetched before step 0 streams
    max_resident: int

    @property
    def num_nodes(self) -> int:
        return len(self.steps)

    def nodes_per_term(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for s in self.steps:
            out[s.term_index] = out.get(s.term_index, 0) + 1
        return out

    def distinct_ids(self) -> list[str]:
        seen: list[str] = []
        for s in self.steps:
            for i in s.fresh_ids():
                if i not in seen:
                    seen.append(i)
        return seen

    def to_dict(self) -> dict:
        return {
            "gate": self.gate_name,
            "extensions": self.extensions,
            "tmp_buffers_used": self.tmp_buffers_used,
            "spill_to_scratch": self.spill_to_scratch,
            "warmup": self.warmup,
            "max_resident": self.max_resident,
            "steps": [
                {
                    "term": s.term_index,
                    "consumes": s.mle_ids,
                    "writes_tmp": s.writes_tmp,
                    "prefetch": s.prefetch,
                }
                for s in self.steps
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build_schedule(p: CompositePoly, shape: HwShape) -> Schedule:
    """Traverse the polynomial term-by-term into accumulation-style nodes."""
    ees = shape.ees_per_pe
    k = p.degree + 1

    # Future-reuse counts: factors also needed by later terms are scheduled
    # late within their term, so they are more likely to still be resident
    # (or already prefetched) when those terms start. Ties break on id.
    steps: list[Step] = []
    for t_idx, term in enumerate(p.terms):
        future = {}
        for f in set(term.factors):
            future[f] = sum(1 for later in p.terms[t_idx + 1:] if f in later.factors)
        ordered = sorted(term.factors, key=lambda f: (future[f], f))
        nodes = nodes_for_degree(len(ordered), ees)
        take = min(ees, len(ordered))
        chunks = [ordered[:take]]
        rest = ordered[take:]
        while rest:
            chunks.append(rest[: ees - 1])
            rest = rest[ees - 1:]
        assert len(chunks) == nodes
        for j, chunk in enumerate(chunks):
            ids = ([TMP] if j else []) + list(chunk)
            steps.append(Step(t_idx, ids, writes_tmp=(j < nodes - 1)))

    # Residency: an MLE occupies a scratch buffer from the step before its
    # first use (prefetch) through its last use.
    first_use: dict[str, int] = {}
    last_use: dict[str, int] = {}
    for idx, s in enumerate(steps):
        for ident in s.fresh_ids():
            first_use.setdefault(ident, idx)
            last_use[ident] = idx
    max_resident = 0
    for idx in range(len(steps)):
        live = sum(1 for ident in first_use
                   if first_use[ident] - 1 <= idx <= last_use[ident])
        max_resident = max(max_resident, live)
    if max_resident > shape.scratch_buffers:
        raise InfeasibleShape(
            f"schedule needs {max_resident} resident MLEs, "
            f"shape has {shape.scratch_buffers} scratch buffers"
        )

    sched = Schedule(
        gate_name=p.name,
        extensions=k,
        steps=steps,
        tmp_buffers_used=1,
        spill_to_scratch=k > shape.accum_registers,
        warmup=list(steps[0].fresh_ids()) if steps else [],
        max_resident=max_resident,
    )
    return plan_prefetch(sched)


def plan_prefetch(s: Schedule, tile_elems: int = 0, spread: bool = False) -> Schedule:
    """Fill each step's prefetch set with the next step's nonresident MLEs.

    Default policy fetches during step j exactly what step j+1 first needs.
    With spread=True the same fetches may move to earlier idle steps so that
    per-step fetch volume (tile_elems per MLE) is balanced, the lookahead
    variant suggested by the published schedule figure.
    """
    first_use: dict[str, int] = {}
    for idx, st in enumerate(s.steps):
        for ident in st.fresh_ids():
            first_use.setdefault(ident, idx)
    for st in s.steps:
        st.prefetch = []

    pending = [(ident, use) for ident, use in first_use.items() if use > 0]
    pending.sort(key=lambda kv: (kv[1], kv[0]))
    if not spread:
        for ident, use in pending:
            s.steps[use - 1].prefetch.append(ident)
        return s

    load = [len(s.steps[0].fresh_ids()) if i == 0 else 0 for i in range(len(s.steps))]
    for ident, use in pending:
        window = range(0, use)
        best = min(window, key=lambda i: (load[i], -i))
        s.steps[best].prefetch.append(ident)
        load[best] += 1
    return s


@dataclass
class LanePlan:
    extensions: int             # K per pair
    lanes: int                  # P
    steady_state_ii: Fraction   # cycles per pair
    pattern: list[list[tuple[int, int]]]  # per cycle: (pair offset, ext index)

    @property
    def period_cycles(self) -> int:
        return len(self.pattern)

    @property
    def pairs_per_period(self) -> int:
        return math.lcm(self.extensions, self.lanes) // self.extensions

    def cycles_for_pairs(self, n_pairs: int) -> int:
        """Cycles to retire n_pairs at full lane occupancy."""
        return math.ceil(n_pairs * self.extensions / self.lanes)


def build_lane_plan(k: int, p: int) -> LanePlan:
    """Cyclic mapping of per-pair extensions 0..K-1 onto P product lanes.

    Unmatched extensions queue in delay buffers and interleave with the next
    pair's, so the steady state issues P extensions per cycle whenever K > P
    (K per cycle otherwise, the extension engines feeding one pair a cycle).
    """
    if k < 1 or p < 1:
        raise ValueError("need K >= 1 extensions and P >= 1 lanes")
    window = math.lcm(k, p)
    stream = [(slot // k, slot % k) for slot in range(window)]
    pattern = [stream[c * p : (c + 1) * p] for c in range(window // p)]
    return LanePlan(k, p, Fraction(k, p), pattern)
