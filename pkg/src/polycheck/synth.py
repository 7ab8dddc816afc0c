"""Synthetic instances for every built-in gate, plus the per-family proving flow.

Each generator produces tables that satisfy its constraint on every row (or,
for the non-identity gates, a well-formed random instance), seeded and
reproducible. Constraint rows are kept active everywhere: vanilla and
jellyfish instances draw all selectors at random and solve the constant
column, curve-style gates solve one coordinate per row. Tampering helpers
flip a single witness cell, which is the corruption the soundness suites
exercise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .catalog import CatalogEntry, catalog_entry
from .field import P, batch_inverse, inverse, legendre, sqrt
from .mle import Mle
from .permcheck import (
    PermInstance,
    permcheck_prove,
    permcheck_verify,
)
from .sumcheck import (
    OpCounters,
    SumcheckProof,
    Transcript,
    VerifyResult,
    prove_statement,
    verify,
    zerocheck_prove,
    zerocheck_verify,
)


@dataclass
class Instance:
    gate_id: object
    entry: CatalogEntry
    mu: int
    binding: dict[str, Mle]          # non-eq inputs; empty for permchecks
    perm: PermInstance | None = None

    def witness_ids(self) -> list[str]:
        roles = self.entry.poly.roles()
        return [i for i, r in roles.items() if r == "witness" and i in self.binding]


def _rng_for(gate_id, mu: int, seed: int) -> random.Random:
    return random.Random(f"polycheck/{gate_id}/{mu}/{seed}")


def _col(rng, n):
    return [rng.randrange(P) for _ in range(n)]


def _col_nonzero(rng, n):
    return [rng.randrange(1, P) for _ in range(n)]


def _curve_xy(rng, n):
    """Rows of y^2 = x^3 + 5 by rejection sampling on x."""
    xs, ys = [], []
    while len(xs) < n:
        x = rng.randrange(P)
        t = (pow(x, 3, P) + 5) % P
        if legendre(t) == -1:
            continue
        y = sqrt(t)
        if rng.randrange(2):  # pick the root's sign from the stream
            y = (-y) % P
        xs.append(x)
        ys.append(y)
    return xs, ys


def _vanilla_binding(rng, n):
    q_l, q_r, q_o, q_m = (_col(rng, n) for _ in range(4))
    w1, w2, w3 = (_col(rng, n) for _ in range(3))
    q_c = [(-(ql * a + qr * b - qo * c + qm * a * b)) % P
           for ql, qr, qo, qm, a, b, c in zip(q_l, q_r, q_o, q_m, w1, w2, w3)]
    return {"q_l": q_l, "q_r": q_r, "q_o": q_o, "q_m": q_m, "q_c": q_c,
            "w_1": w1, "w_2": w2, "w_3": w3}


def _jellyfish_binding(rng, n):
    names = ["q_1", "q_2", "q_3", "q_4", "q_m1", "q_m2",
             "q_h1", "q_h2", "q_h3", "q_h4", "q_o", "q_ecc"]
    cols = {nm: _col(rng, n) for nm in names}
    w = {f"w_{i}": _col(rng, n) for i in range(1, 6)}
    q_c = []
    for j in range(n):
        acc = 0
        ws = [w[f"w_{i}"][j] for i in range(1, 6)]
        acc += cols["q_1"][j] * ws[0] + cols["q_2"][j] * ws[1]
        acc += cols["q_3"][j] * ws[2] + cols["q_4"][j] * ws[3]
        acc += cols["q_m1"][j] * ws[0] * ws[1] + cols["q_m2"][j] * ws[2] * ws[3]
        acc += cols["q_h1"][j] * pow(ws[0], 5, P) + cols["q_h2"][j] * pow(ws[1], 5, P)
        acc += cols["q_h3"][j] * pow(ws[2], 5, P) + cols["q_h4"][j] * pow(ws[3], 5, P)
        acc -= cols["q_o"][j] * ws[4]
        acc += cols["q_ecc"][j] * ws[0] * ws[1] * ws[2] * ws[3]
        q_c.append((-acc) % P)
    cols["q_c"] = q_c
    cols.update(w)
    return cols


def _halo2_binding(rng, n, gate_id):
    """Active-row satisfying assignments for the curve constraint family."""
    cols = {nm: _col(rng, n) for nm in
            ("x_p", "y_p", "x_q", "y_q", "x_r", "y_r", "lam",
             "alpha", "beta", "gamma", "delta")}
    xp, yp = cols["x_p"], cols["y_p"]
    xq, yq = cols["x_q"], cols["y_q"]
    for j in range(n):  # keep the solved denominators nonzero
        while xq[j] == xp[j]:
            xq[j] = rng.randrange(P)
        while yp[j] == 0 or (yq[j] + yp[j]) % P == 0:
            yp[j] = rng.randrange(P)

    if gate_id == 6:
        inv_d = batch_inverse([pow(a - b, 2, P) for a, b in zip(xp, xq)])
        cols["x_r"] = [((c - d) * (c - d) % P * i - b - a) % P
                       for a, b, c, d, i in zip(xp, xq, yp, yq, inv_d)]
    elif gate_id == 7:
        inv_d = batch_inverse([(a - b) % P for a, b in zip(xp, xq)])
        cols["y_r"] = [((c - d) * (b - e) % P * i - d) % P
                       for a, b, c, d, e, i in
                       zip(xp, xq, yp, yq, cols["x_r"], inv_d)]
    elif gate_id == 8:
        inv_d = batch_inverse([(b - a) % P for a, b in zip(xp, xq)])
        cols["lam"] = [((d - c) * i) % P for c, d, i in zip(yp, yq, inv_d)]
    elif gate_id == 9:
        inv_d = batch_inverse([(2 * v) % P for v in yp])
        cols["lam"] = [(3 * a * a % P) * i % P for a, i in zip(xp, inv_d)]
    elif gate_id in (10, 12):
        cols["x_r"] = [(l * l - a - b) % P for l, a, b in zip(cols["lam"], xp, xq)]
    elif gate_id in (11, 13):
        cols["y_r"] = [(l * (a - r) - c) % P
                       for l, a, r, c in zip(cols["lam"], xp, cols["x_r"], yp)]
    elif gate_id == 14:
        cols["x_r"] = list(xq)
    elif gate_id == 15:
        cols["y_r"] = list(yq)
    elif gate_id == 16:
        cols["x_r"] = list(xp)
    elif gate_id == 17:
        cols["y_r"] = list(yp)
    elif gate_id in (18, 19):
        inv_d = batch_inverse([(d + c) % P for c, d in zip(yp, yq)])
        cols["delta"] = [((1 - (b - a) * al) % P) * i % P
                         for a, b, al, i in zip(xp, xq, cols["alpha"], inv_d)]
    else:
        raise ValueError(f"no curve-family generator for gate {gate_id}")
    sel = {3: "q_point_nonid", 4: "q_point", 5: "q_point",
           6: "q_add_incomplete", 7: "q_add_incomplete"}.get(gate_id, "q_add")
    cols[sel] = [1] * n
    return cols


def _perm_instance(rng, mu: int, k: int) -> PermInstance:
    """Wiring with all cycles of length >= 2 and witnesses constant per cycle."""
    n = 1 << mu
    slots = list(range(k * n))
    rng.shuffle(slots)
    perm = [0] * (k * n)
    flat = [0] * (k * n)
    pos = 0
    while pos < len(slots):
        size = min(rng.randrange(2, 6), len(slots) - pos)
        if len(slots) - pos - size == 1:
            size += 1  # never leave a singleton (fixed point) behind
        cycle = slots[pos : pos + size]
        pos += size
        value = rng.randrange(P)
        for i, slot in enumerate(cycle):
            perm[slot] = cycle[(i + 1) % size]
            flat[slot] = value
    witnesses = [Mle(mu, flat[i * n : (i + 1) * n]) for i in range(k)]
    sigma = [perm[i * n : (i + 1) * n] for i in range(k)]
    return PermInstance(mu, witnesses, sigma)


def synthesize(gate_id, mu: int, seed: int = 0) -> Instance:
    """A satisfying (or, for sum-style gates, random well-formed) instance."""
    entry = catalog_entry(gate_id)
    rng = _rng_for(entry.gate_id, mu, seed)
    n = 1 << mu

    if entry.family == "permcheck":
        k = 3 if entry.gate_id == 21 else 5
        return Instance(entry.gate_id, entry, mu, {}, _perm_instance(rng, mu, k))

    if entry.gate_id == 0:
        q_add = [rng.randrange(2) for _ in range(n)]
        cols = {"q_add": q_add, "q_mul": [1 - v for v in q_add],
                "a": _col(rng, n), "b": _col(rng, n)}
    elif entry.gate_id == 1:
        a, b = _col(rng, n), _col(rng, n)
        cols = {"az": a, "bz": b, "cz": [(x * y) % P for x, y in zip(a, b)]}
    elif entry.gate_id == 2:
        cols = {nm: _col(rng, n) for nm in ("az", "bz", "cz", "z")}
    elif entry.gate_id in (3, 4, 5):
        xs, ys = _curve_xy(rng, n)
        sel = "q_point_nonid" if entry.gate_id == 3 else "q_point"
        cols = {sel: [1] * n, "x": xs, "y": ys}
    elif isinstance(entry.gate_id, int) and 6 <= entry.gate_id <= 19:
        cols = _halo2_binding(rng, n, entry.gate_id)
    elif entry.gate_id == 20:
        cols = _vanilla_binding(rng, n)
    elif entry.gate_id == 22:
        cols = _jellyfish_binding(rng, n)
    elif entry.gate_id == "opencheck":
        cols = {f"m_{i}": _col(rng, n) for i in range(1, 6)}
    else:
        raise ValueError(f"no generator for gate {gate_id!r}")

    binding = {nm: Mle(mu, vals) for nm, vals in cols.items()}
    return Instance(entry.gate_id, entry, mu, binding)


def corrupt_witness(inst: Instance, rng: random.Random) -> tuple[str, int]:
    """Flip one random witness cell in place; returns (table id, index)."""
    if inst.perm is not None:
        i = rng.randrange(inst.perm.k)
        idx = rng.randrange(1 << inst.mu)
        old = inst.perm.witnesses[i].evals[idx]
        inst.perm.witnesses[i].evals[idx] = (old + rng.randrange(1, P)) % P
        return (f"w{i}", idx)
    ids = inst.witness_ids()
    ident = ids[rng.randrange(len(ids))]
    idx = rng.randrange(1 << inst.mu)
    old = inst.binding[ident].evals[idx]
    inst.binding[ident].evals[idx] = (old + rng.randrange(1, P)) % P
    return (ident, idx)


def clone_instance(inst: Instance) -> Instance:
    binding = {k: Mle(v.num_vars, list(v.evals)) for k, v in inst.binding.items()}
    perm = None
    if inst.perm is not None:
        perm = PermInstance(
            inst.perm.num_vars,
            [Mle(w.num_vars, list(w.evals)) for w in inst.perm.witnesses],
            [list(s) for s in inst.perm.sigma],
        )
    return Instance(inst.gate_id, inst.entry, inst.mu, binding, perm)


def prove_instance(inst: Instance, transcript: Transcript,
                   counters: OpCounters | None = None) -> SumcheckProof:
    fam = inst.entry.family
    if fam == "permcheck":
        return permcheck_prove(inst.perm, transcript, counters)
    if fam == "identity":
        return zerocheck_prove(inst.entry.poly, inst.binding, transcript, counters)
    return prove_statement(inst.entry.poly, inst.binding, transcript, counters)


def verify_instance(inst: Instance, proof: SumcheckProof, transcript: Transcript,
                    mode: str = "direct",
                    expected_claim: int | None = None) -> VerifyResult:
    fam = inst.entry.family
    if fam == "permcheck":
        return permcheck_verify(inst.perm, proof, transcript, mode)
    if fam == "identity":
        return zerocheck_verify(inst.entry.poly, proof, transcript, mode, inst.binding)
    if fam == "zerocheck":
        expected_claim = 0
    return verify(inst.entry.poly, proof, transcript, mode, inst.binding,
                  expected_claim=expected_claim)
