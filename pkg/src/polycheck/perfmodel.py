"""Analytical performance model of the programmable SumCheck unit.

Cycle counts are reconstructed from the datapath description rather than
measured: each schedule step streams every table pair through the extension
engines at an effective initiation interval of max(1, K/P) cycles per pair,
rounds are the max of compute and bandwidth time, and off-chip traffic
follows the four-read/two-write pipelined update flow until tables fit in
the scratchpads. All unit latencies and areas are calibration estimates and
live in a config the caller can override; trend claims, never absolute
cycle counts, are what the model is validated against.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field as dc_field, replace
from typing import Iterable, Sequence

from .gates import CompositePoly
from .scheduler import HwShape, InfeasibleShape, Schedule, build_schedule

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:  # pragma: no cover
    import tomli as _toml

BANDWIDTH_TIERS_GBPS = (64, 128, 256, 512, 1024, 2048, 4096)


class EmptyGrid(Exception):
    pass


@dataclass(frozen=True)
class Calibration:
    """Unit latency/area constants. Defaults are documented estimates:
    modular-multiplier and inverse-unit areas follow published 7nm synthesis
    results for 255-bit fixed-prime units; SRAM density and the fill/drain
    penalty are order-of-magnitude figures."""

    modmul_mm2: float = 0.073
    modmul_mm2_arbitrary: float = 0.162
    inverse_unit_mm2: float = 0.0075
    sram_mm2_per_mb: float = 0.45
    fill_drain_cycles: int = 32
    inverse_latency_cycles: int = 532
    inverse_issue_interval: int = 2
    update_muls_per_ee: int = 2
    area_budget_mm2: float = 37.0
    bandwidth_tiers_gbps: tuple = BANDWIDTH_TIERS_GBPS

    @staticmethod
    def from_toml(path: str) -> "Calibration":
        with open(path, "rb") as f:
            data = _toml.load(f)
        known = {k: v for k, v in data.items() if k in Calibration.__dataclass_fields__}
        if "bandwidth_tiers_gbps" in known:
            known["bandwidth_tiers_gbps"] = tuple(known["bandwidth_tiers_gbps"])
        return Calibration(**known)


@dataclass(frozen=True)
class HwConfig:
    shape: HwShape
    bandwidth_gbps: float
    sram_bank_elems: int = 1 << 15
    clock_ghz: float = 1.0
    elem_bytes: int = 32
    calib: Calibration = dc_field(default_factory=Calibration)

    def bytes_per_cycle(self) -> float:
        return self.bandwidth_gbps / self.clock_ghz

    def modmul_count(self) -> int:
        sh = self.shape
        per_pe = (sh.ees_per_pe * self.calib.update_muls_per_ee
                  + sh.pls_per_pe * (sh.ees_per_pe - 1))
        return sh.num_pes * per_pe

    def area_mm2(self) -> float:
        sram_mb = (self.shape.scratch_buffers * self.sram_bank_elems
                   * self.elem_bytes) / (1 << 20)
        return (self.modmul_count() * self.calib.modmul_mm2
                + sram_mb * self.calib.sram_mm2_per_mb)


@dataclass
class RoundStats:
    compute_cycles: float
    dram_bytes: float
    bw_cycles: float
    bound: str  # "compute" | "bandwidth"


@dataclass
class PerfReport:
    gate_name: str
    num_vars: int
    rounds: list[RoundStats]
    total_cycles: float
    runtime_s: float
    utilization: float
    modmul_count: int
    product_muls: int
    update_muls: int
    eq_build_muls: int
    schedule: Schedule

    @property
    def modeled_muls(self) -> int:
        return self.product_muls + self.update_muls + self.eq_build_muls

    @property
    def bound_summary(self) -> str:
        bw = sum(1 for r in self.rounds if r.bound == "bandwidth")
        return "bandwidth" if bw > len(self.rounds) / 2 else "compute"


def model_sumcheck(p: CompositePoly, mu: int, cfg: HwConfig) -> PerfReport:
    """Per-round cycle and traffic model for one SumCheck over 2^mu rows."""
    if mu < 1:
        raise ValueError("mu must be >= 1")
    sched = build_schedule(p, cfg.shape)
    shape = cfg.shape
    k = p.degree + 1
    eq_ids = set(p.eq_inputs())
    distinct = sched.distinct_ids()
    n_distinct = len(distinct)
    n_eq = sum(1 for i in distinct if i in eq_ids)
    bank = cfg.sram_bank_elems
    bpc = cfg.bytes_per_cycle()
    eb = cfg.elem_bytes

    # per-step product multiplications per pair per extension point
    step_muls = [len(s.mle_ids) - 1 for s in sched.steps]
    prod_per_pair = sum(step_muls) * k
    tmp_handoffs = sum(1 for s in sched.steps if s.writes_tmp)
    tmp_spills = tmp_handoffs > 0 and k * (bank // 2) > bank

    def fits(table_elems: int) -> bool:
        return n_distinct * table_elems <= shape.scratch_buffers * bank

    rounds: list[RoundStats] = []
    product_total = 0
    update_total = 0
    fr_total = 0
    active_cycles = 0.0
    n1 = 1 << mu
    for r in range(1, mu + 1):
        n_r = 1 << (mu - r + 1)
        pairs = n_r // 2
        pl_eff = shape.pls_per_pe
        if eq_ids and r == 1 and pl_eff > 1:
            pl_eff -= 1  # one lane builds the randomized eq table on the fly
        ii = max(1.0, k / pl_eff)
        tiles = math.ceil(n_r / bank)
        compute = (len(sched.steps) * math.ceil(pairs / shape.num_pes) * ii
                   + len(sched.steps) * tiles * cfg.calib.fill_drain_cycles)

        read_elems = n1 if r <= 2 else (1 << (mu - r + 2))
        reads = 0.0
        writes = 0.0
        if r == 1:
            if not fits(n1):
                reads = (n_distinct - n_eq) * n1 * eb
                writes = n_eq * n1 * eb  # materialize the built eq tables
        else:
            if not fits(read_elems):
                reads = n_distinct * read_elems * eb
            if not fits(n_r):
                writes = n_distinct * n_r * eb
        tmp_bytes = 0.0
        if tmp_spills:
            tmp_bytes = 2 * tmp_handoffs * pairs * k * eb
        dram = reads + writes + tmp_bytes
        bw_cycles = dram / bpc
        rounds.append(RoundStats(compute, dram, bw_cycles,
                                 "compute" if compute >= bw_cycles else "bandwidth"))

        product_total += pairs * prod_per_pair
        if r >= 2:
            update_total += n_distinct * n_r
        if eq_ids and r == 1:
            fr_total += n_eq * (n1 - 1)

    total = sum(max(r.compute_cycles, r.bw_cycles) for r in rounds)
    runtime = total / (cfg.clock_ghz * 1e9)
    muls = cfg.modmul_count()
    active = product_total + update_total + fr_total
    util = min(1.0, active / (muls * total)) if total > 0 else 0.0
    return PerfReport(
        gate_name=p.name,
        num_vars=mu,
        rounds=rounds,
        total_cycles=total,
        runtime_s=runtime,
        utilization=util,
        modmul_count=muls,
        product_muls=product_total,
        update_muls=update_total,
        eq_build_muls=fr_total,
        schedule=sched,
    )


def model_utilization(p: CompositePoly, mu: int, cfg: HwConfig) -> float:
    """Active modular-multiplier cycles over total multiplier-cycles.

    Update multipliers idle through round 1 (their work is pipelined into
    later rounds); product lanes idle on the P - K mod P slack whenever the
    extension count falls short of the lane count; everything idles while a
    round is bandwidth-bound.
    """
    return model_sumcheck(p, mu, cfg).utilization


def utilization_breakdown(p: CompositePoly, mu: int, cfg: HwConfig) -> dict:
    rep = model_sumcheck(p, mu, cfg)
    sh = cfg.shape
    pl_muls = sh.num_pes * sh.pls_per_pe * (sh.ees_per_pe - 1)
    upd_muls = sh.num_pes * sh.ees_per_pe * cfg.calib.update_muls_per_ee
    stream_cycles = sum(
        len(rep.schedule.steps) * math.ceil((1 << (mu - r)) / sh.num_pes)
        * max(1.0, (p.degree + 1) / sh.pls_per_pe)
        for r in range(1, mu + 1)
    )
    return {
        "overall": rep.utilization,
        "update_active_muls": rep.update_muls,
        "update_utilization": (min(1.0, rep.update_muls / (upd_muls * rep.total_cycles))
                               if rep.total_cycles else 0.0),
        "pl_active_muls": rep.product_muls + rep.eq_build_muls,
        "pl_steady_utilization": (min(1.0, rep.product_muls / (pl_muls * stream_cycles))
                                  if stream_cycles else 0.0),
    }


@dataclass
class PermGenReport:
    warmup_cycles: int
    steady_cycles: float
    total_cycles: float
    runtime_s: float
    inverse_units_required: int
    stalls: bool


def model_permcheck_gen(inst_size: int, cfg: HwConfig, gen_pes: int = 1,
                        inverse_units: int = 266) -> PermGenReport:
    """Pipelined numerator/denominator/fraction generator throughput.

    One element per cycle per PE after warmup; inversion latency is fully
    masked when enough inverse units exist to start one inversion every
    issue interval without backpressure.
    """
    calib = cfg.calib
    required = math.ceil(calib.inverse_latency_cycles / calib.inverse_issue_interval)
    warmup = calib.inverse_latency_cycles + calib.fill_drain_cycles
    steady = inst_size / gen_pes if inst_size else 0.0
    stalls = inverse_units < required
    if stalls and inst_size:
        steady *= required / inverse_units
    total = warmup + steady
    return PermGenReport(
        warmup_cycles=warmup,
        steady_cycles=steady,
        total_cycles=total,
        runtime_s=total / (cfg.clock_ghz * 1e9),
        inverse_units_required=required,
        stalls=stalls,
    )


# ---------------------------------------------------------------------------
# Design-space exploration
# ---------------------------------------------------------------------------

@dataclass
class DseRow:
    cfg: HwConfig
    area_mm2: float
    feasible: bool
    runtimes: dict
    utils: dict
    geomean_runtime: float
    mean_util: float
    geomean_slowdown: float
    objective: float


@dataclass
class DseResult:
    ranked: list[DseRow]                   # feasible rows, best objective first
    pareto_by_bandwidth: dict
    pareto_global: list[DseRow]

    @property
    def best(self) -> DseRow:
        return self.ranked[0]


def _geomean(xs: Sequence[float]) -> float:
    return math.exp(sum(math.log(x) for x in xs) / len(xs))


def _pareto(rows: list[DseRow]) -> list[DseRow]:
    """Rows not dominated in both area and geomean runtime."""
    out = []
    for row in rows:
        dominated = any(
            (o.area_mm2 <= row.area_mm2 and o.geomean_runtime <= row.geomean_runtime
             and (o.area_mm2 < row.area_mm2 or o.geomean_runtime < row.geomean_runtime))
            for o in rows
        )
        if not dominated:
            out.append(row)
    return sorted(out, key=lambda r: r.area_mm2)


def dse(
    candidates: Sequence[HwConfig],
    gate_suite: Sequence[tuple[object, CompositePoly]],
    lam: float,
    mu: int = 20,
    area_budget_mm2: float | None = None,
) -> DseResult:
    """Rank feasible designs by lam*(1 - mean util) + lam*geomean slowdown.

    Slowdown for a gate is runtime relative to the fastest area-feasible
    design for that gate. The frontier pairs (area, geomean runtime) per
    bandwidth tier and globally.
    """
    if not candidates:
        raise EmptyGrid("no candidate configurations")
    if not 0 <= lam <= 1:
        raise ValueError("lambda must be in [0, 1]")

    rows: list[DseRow] = []
    for idx, cfg in enumerate(candidates):
        budget = area_budget_mm2 if area_budget_mm2 is not None else cfg.calib.area_budget_mm2
        area = cfg.area_mm2()
        feasible = area <= budget
        runtimes, utils = {}, {}
        try:
            for gid, gate in gate_suite:
                rep = model_sumcheck(gate, mu, cfg)
                runtimes[gid] = rep.runtime_s
                utils[gid] = rep.utilization
        except InfeasibleShape:
            feasible = False
        if not runtimes:
            feasible = False
        rows.append(DseRow(cfg, area, feasible, runtimes, utils,
                           _geomean(list(runtimes.values())) if runtimes else float("inf"),
                           (sum(utils.values()) / len(utils)) if utils else 0.0,
                           0.0, float("inf")))

    feas = [r for r in rows if r.feasible]
    if not feas:
        raise EmptyGrid("no area-feasible configuration in the grid")
    best_per_gate = {
        gid: min(r.runtimes[gid] for r in feas)
        for gid, _ in gate_suite
    }
    for r in feas:
        slowdowns = [r.runtimes[g] / best_per_gate[g] for g, _ in gate_suite]
        r.geomean_slowdown = _geomean(slowdowns)
        r.objective = lam * (1.0 - r.mean_util) + lam * r.geomean_slowdown

    order = {id(r): i for i, r in enumerate(rows)}
    ranked = sorted(feas, key=lambda r: (r.objective, r.area_mm2, order[id(r)]))

    by_bw: dict = {}
    for r in feas:
        by_bw.setdefault(r.cfg.bandwidth_gbps, []).append(r)
    pareto_by_bw = {bw: _pareto(rs) for bw, rs in sorted(by_bw.items())}
    return DseResult(ranked, pareto_by_bw, _pareto(feas))


def grid_from_toml(path: str, calib: Calibration | None = None) -> list[HwConfig]:
    """Expand a sweep grid file into configurations.

    Keys (each a list or scalar): pes, ees, pls, bank_elems, bandwidth_gbps.
    """
    with open(path, "rb") as f:
        data = _toml.load(f)

    def as_list(key, default):
        v = data.get(key, default)
        return list(v) if isinstance(v, (list, tuple)) else [v]

    calib = calib or Calibration()
    out = []
    for pes in as_list("pes", [1]):
        for ees in as_list("ees", [2]):
            for pls in as_list("pls", [5]):
                for bank in as_list("bank_elems", [1 << 15]):
                    for bw in as_list("bandwidth_gbps", list(calib.bandwidth_tiers_gbps)):
                        out.append(HwConfig(
                            shape=HwShape(num_pes=pes, ees_per_pe=ees, pls_per_pe=pls),
                            bandwidth_gbps=bw,
                            sram_bank_elems=bank,
                            calib=calib,
                        ))
    return out


def default_grid(calib: Calibration | None = None,
                 bandwidths: Iterable[float] | None = None) -> list[HwConfig]:
    """The published sweep knobs: PEs, EEs, PLs, bank size, bandwidth tiers."""
    calib = calib or Calibration()
    bws = list(bandwidths) if bandwidths is not None else list(calib.bandwidth_tiers_gbps)
    out = []
    for pes in (1, 2, 4, 8, 16, 32):
        for ees in (2, 3, 4, 5, 6, 7):
            for pls in (3, 4, 5, 6, 7, 8):
                for bank in (1 << 10, 1 << 12, 1 << 15):
                    for bw in bws:
                        out.append(HwConfig(
                            shape=HwShape(num_pes=pes, ees_per_pe=ees, pls_per_pe=pls),
                            bandwidth_gbps=bw,
                            sram_bank_elems=bank,
                            calib=calib,
                        ))
    return out


def sweep_gate(d: int) -> CompositePoly:
    """The degree-sweep family q_1 w_1 + q_2 w_2 + q_3 w_1^(d-1) w_2 + q_c."""
    from .gates import Expr

    if d < 2:
        raise ValueError("sweep degree starts at 2")
    r = Expr.ref
    expr = (r("q_1") * r("w_1") + r("q_2") * r("w_2")
            + r("q_3") * (r("w_1") ** (d - 1)) * r("w_2") + r("q_c"))
    inputs = [("q_1", "selector"), ("q_2", "selector"), ("q_3", "selector"),
              ("q_c", "selector"), ("w_1", "witness"), ("w_2", "witness")]
    return expr.into_gate(f"sweep_d{d}", inputs)
