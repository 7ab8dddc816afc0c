"""Built-in library of polynomial constraints.

Covers the verifiable-ASICs add/mul gate, the two Spartan instances, the
Halo2 elliptic-curve constraint set, the Vanilla and Jellyfish Zero- and
PermChecks, and the evaluation-batching OpenCheck. Parenthesized products
are expanded here into the flat sum-of-products IR; like terms merge and
cancel during expansion.

Proving flow differs by family:

* ``plain``      -- SumCheck of the gate as-is; the claim is the table sum.
* ``identity``   -- the gate body vanishes on every row for a satisfying
                    witness; proven by wrapping in a ZeroCheck (an eq-role
                    factor is appended at prove time).
* ``zerocheck``  -- the listed constraint already carries the randomized
                    eq factor ``f_r``; claim must be zero.
* ``permcheck``  -- like zerocheck but over the wire-identity auxiliary
                    tables (numerator/denominator/fraction/product).
* ``opencheck``  -- evaluation-claim batching; one eq factor per opened
                    point and one challenge weight per claim.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gates import CompositePoly, Expr, UnknownGate

R = Expr.ref
C = Expr.const
CH = Expr.chal

GateId = int | str


@dataclass(frozen=True)
class CatalogEntry:
    gate_id: GateId
    name: str
    family: str  # plain | identity | zerocheck | permcheck | opencheck
    poly: CompositePoly


def _sel(*ids):
    return [(i, "selector") for i in ids]


def _wit(*ids):
    return [(i, "witness") for i in ids]


def _aux(*ids):
    return [(i, "permutation-aux") for i in ids]


def _eq(*ids):
    return [(i, "eq") for i in ids]


def _build() -> dict[GateId, CatalogEntry]:
    entries: list[CatalogEntry] = []

    def add(gate_id, name, family, expr, inputs):
        entries.append(CatalogEntry(gate_id, name, family, expr.into_gate(name, inputs)))

    # 0: q_add*(a+b) + q_mul*(a*b)
    q_add, q_mul, a, b = R("q_add"), R("q_mul"), R("a"), R("b")
    add(0, "verifiable_asics", "plain",
        q_add * (a + b) + q_mul * (a * b),
        _sel("q_add", "q_mul") + _wit("a", "b"))

    # 1: (A*B - C) * f_tau
    az, bz, cz, f_tau = R("az"), R("bz"), R("cz"), R("f_tau")
    add(1, "spartan_1", "zerocheck",
        (az * bz - cz) * f_tau,
        _wit("az", "bz", "cz") + _eq("f_tau"))

    # 2: (Sum_ABC) * Z
    sa, sb, sc, z = R("az"), R("bz"), R("cz"), R("z")
    add(2, "spartan_2", "plain",
        (sa + sb + sc) * z,
        _wit("az", "bz", "cz", "z"))

    # --- Halo2 constraints. The curve-side auxiliary values (lambda, alpha,
    # beta, gamma, delta) are ordinary witness columns here.
    x, y = R("x"), R("y")
    xp, yp, xq, yq, xr, yr = R("x_p"), R("y_p"), R("x_q"), R("y_q"), R("x_r"), R("y_r")
    lam, al, be, ga, de = R("lam"), R("alpha"), R("beta"), R("gamma"), R("delta")
    curve = y * y - x * x * x - C(5)

    add(3, "halo2_nonzero_point", "identity",
        R("q_point_nonid") * curve,
        _sel("q_point_nonid") + _wit("x", "y"))
    add(4, "halo2_curve_x", "identity",
        (R("q_point") * x) * curve,
        _sel("q_point") + _wit("x", "y"))
    add(5, "halo2_curve_y", "identity",
        (R("q_point") * y) * curve,
        _sel("q_point") + _wit("x", "y"))

    q = R("q_add_incomplete")
    pq_coords = _wit("x_p", "y_p", "x_q", "y_q", "x_r", "y_r")
    add(6, "halo2_incomplete_add_1", "identity",
        q * ((xr + xq + xp) * (xp - xq) ** 2 - (yp - yq) ** 2),
        _sel("q_add_incomplete") + pq_coords)
    add(7, "halo2_incomplete_add_2", "identity",
        q * ((yr + yq) * (xp - xq) - (yp - yq) * (xq - xr)),
        _sel("q_add_incomplete") + pq_coords)

    q = R("q_add")
    full_coords = _wit("x_p", "y_p", "x_q", "y_q", "x_r", "y_r", "lam",
                       "alpha", "beta", "gamma", "delta")
    add(8, "halo2_complete_add_1", "identity",
        q * (xq - xp) * ((xq - xp) * lam - (yq - yp)),
        _sel("q_add") + full_coords)
    add(9, "halo2_complete_add_2", "identity",
        q * (C(1) - (xq - xp) * al) * (2 * yp * lam - 3 * xp * xp),
        _sel("q_add") + full_coords)
    add(10, "halo2_complete_add_3", "identity",
        q * xp * xq * (xq - xp) * (lam * lam - xp - xq - xr),
        _sel("q_add") + full_coords)
    add(11, "halo2_complete_add_4", "identity",
        q * xp * xq * (xq - xp) * (lam * (xp - xr) - yp - yr),
        _sel("q_add") + full_coords)
    add(12, "halo2_complete_add_5", "identity",
        q * xp * xq * (yq + yp) * (lam * lam - xp - xq - xr),
        _sel("q_add") + full_coords)
    add(13, "halo2_complete_add_6", "identity",
        q * xp * xq * (yq + yp) * (lam * (xp - xr) - yp - yr),
        _sel("q_add") + full_coords)
    add(14, "halo2_complete_add_7", "identity",
        q * (C(1) - xp * be) * (xr - xq),
        _sel("q_add") + full_coords)
    add(15, "halo2_complete_add_8", "identity",
        q * (C(1) - xp * be) * (yr - yq),
        _sel("q_add") + full_coords)
    add(16, "halo2_complete_add_9", "identity",
        q * (C(1) - xq * ga) * (xr - xp),
        _sel("q_add") + full_coords)
    add(17, "halo2_complete_add_10", "identity",
        q * (C(1) - xq * ga) * (yr - yp),
        _sel("q_add") + full_coords)
    add(18, "halo2_complete_add_11", "identity",
        q * (C(1) - (xq - xp) * al - (yq + yp) * de) * xr,
        _sel("q_add") + full_coords)
    add(19, "halo2_complete_add_12", "identity",
        q * (C(1) - (xq - xp) * al - (yq + yp) * de) * yr,
        _sel("q_add") + full_coords)

    # 20: (q_L w1 + q_R w2 - q_O w3 + q_M w1 w2 + q_C) f_r
    q_l, q_r, q_o, q_m, q_c = (R(i) for i in ("q_l", "q_r", "q_o", "q_m", "q_c"))
    w1, w2, w3 = R("w_1"), R("w_2"), R("w_3")
    f_r = R("f_r")
    add(20, "vanilla_zerocheck", "zerocheck",
        (q_l * w1 + q_r * w2 - q_o * w3 + q_m * w1 * w2 + q_c) * f_r,
        _sel("q_l", "q_r", "q_o", "q_m", "q_c") + _wit("w_1", "w_2", "w_3") + _eq("f_r"))

    # 21: (pi - p1 p2 + alpha*(phi D1 D2 D3 - N1 N2 N3)) f_r
    pi, p1, p2, phi = R("pi"), R("p_1"), R("p_2"), R("phi")
    d = [R(f"d_{i}") for i in range(1, 6)]
    n = [R(f"n_{i}") for i in range(1, 6)]
    alpha = CH("al")
    add(21, "vanilla_permcheck", "permcheck",
        (pi - p1 * p2 + alpha * (phi * d[0] * d[1] * d[2] - n[0] * n[1] * n[2])) * f_r,
        _aux("pi", "p_1", "p_2", "phi", "d_1", "d_2", "d_3", "n_1", "n_2", "n_3")
        + _eq("f_r"))

    # 22: Jellyfish ZeroCheck
    qs = {i: R(i) for i in ("q_1", "q_2", "q_3", "q_4", "q_m1", "q_m2",
                            "q_h1", "q_h2", "q_h3", "q_h4", "q_o", "q_ecc", "q_c")}
    w = [R(f"w_{i}") for i in range(1, 6)]
    jelly = (qs["q_1"] * w[0] + qs["q_2"] * w[1] + qs["q_3"] * w[2] + qs["q_4"] * w[3]
             + qs["q_m1"] * w[0] * w[1] + qs["q_m2"] * w[2] * w[3]
             + qs["q_h1"] * w[0] ** 5 + qs["q_h2"] * w[1] ** 5
             + qs["q_h3"] * w[2] ** 5 + qs["q_h4"] * w[3] ** 5
             - qs["q_o"] * w[4]
             + qs["q_ecc"] * w[0] * w[1] * w[2] * w[3]
             + qs["q_c"]) * f_r
    add(22, "jellyfish_zerocheck", "zerocheck", jelly,
        _sel("q_1", "q_2", "q_3", "q_4", "q_m1", "q_m2",
             "q_h1", "q_h2", "q_h3", "q_h4", "q_o", "q_ecc", "q_c")
        + _wit("w_1", "w_2", "w_3", "w_4", "w_5") + _eq("f_r"))

    # 23: Jellyfish PermCheck (five witness wires)
    add(23, "jellyfish_permcheck", "permcheck",
        (pi - p1 * p2
         + alpha * (phi * d[0] * d[1] * d[2] * d[3] * d[4]
                    - n[0] * n[1] * n[2] * n[3] * n[4])) * f_r,
        _aux("pi", "p_1", "p_2", "phi",
             "d_1", "d_2", "d_3", "d_4", "d_5", "n_1", "n_2", "n_3", "n_4", "n_5")
        + _eq("f_r"))

    # OpenCheck: batches five evaluation claims; each opened table m_i is
    # weighted by challenge y_i against its point kernel f_r_i.
    open_expr = Expr.const(0)
    for i in range(1, 6):
        open_expr = open_expr + CH(f"y_{i}") * R(f"m_{i}") * R(f"f_r{i}")
    add("opencheck", "opencheck", "opencheck", open_expr,
        _wit("m_1", "m_2", "m_3", "m_4", "m_5")
        + _eq("f_r1", "f_r2", "f_r3", "f_r4", "f_r5"))

    return {e.gate_id: e for e in entries}


_CATALOG = _build()

ALL_GATE_IDS: tuple[GateId, ...] = tuple(_CATALOG.keys())


def catalog_entry(gate_id: GateId) -> CatalogEntry:
    key: GateId = gate_id
    if isinstance(gate_id, str) and gate_id.isdigit():
        key = int(gate_id)
    if key not in _CATALOG:
        raise UnknownGate(f"no built-in gate {gate_id!r}")
    return _CATALOG[key]


def builtin_gate(gate_id: GateId) -> CompositePoly:
    """The constraint exactly as listed; ids 0..23 plus "opencheck"."""
    return catalog_entry(gate_id).poly
