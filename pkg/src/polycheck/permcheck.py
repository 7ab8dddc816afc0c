"""Wire-identity auxiliary tables and the grand-product machinery.

The permutation argument encodes each wire slot (wire i, row x) as the label
i*2^mu + x. For challenges beta, gamma the numerator and denominator tables

    N_i[x] = w_i[x] + beta * id_i[x] + gamma
    D_i[x] = w_i[x] + beta * sigma_i[x] + gamma

have equal grand products exactly when the witness is constant on every
sigma-orbit, so the fraction table phi = prod N / prod D multiplies to one
over the cube. The product tree materializes all partial products of phi as
a same-size table pi with left/right child projections p_1, p_2, which is
what the Table-style PermCheck identity consumes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field
from typing import Sequence

from .catalog import builtin_gate
from .field import P, batch_inverse
from .gates import CompositePoly
from .mle import Mle
from .sumcheck import (
    OpCounters,
    SumcheckProof,
    Transcript,
    VerifyResult,
    prove_statement,
    verify,
)


class ZeroDenominator(Exception):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"denominator vanished at index {index}")


class RootNotOne(Exception):
    pass


@dataclass
class PermInstance:
    num_vars: int
    witnesses: list[Mle]                 # k tables (3 vanilla, 5 jellyfish)
    sigma: list[list[int]]               # k label tables, labels in [0, k*2^mu)
    identity: list[list[int]] = dc_field(default=None)  # canonical when omitted
    beta: int | None = None
    gamma: int | None = None

    def __post_init__(self):
        n = 1 << self.num_vars
        k = len(self.witnesses)
        if len(self.sigma) != k:
            raise ValueError("need one sigma table per witness")
        for w in self.witnesses:
            if w.num_vars != self.num_vars:
                raise ValueError("witness tables disagree on num_vars")
        for s in self.sigma:
            if len(s) != n:
                raise ValueError("sigma table has wrong length")
        if self.identity is None:
            self.identity = [[i * n + x for x in range(n)] for i in range(k)]

    @property
    def k(self) -> int:
        return len(self.witnesses)


def build_num_den(inst: PermInstance) -> tuple[list[Mle], list[Mle]]:
    """Numerator/denominator tables for the instance's beta and gamma."""
    if inst.beta is None or inst.gamma is None:
        raise ValueError("instance has no beta/gamma challenges assigned")
    beta, gamma = inst.beta, inst.gamma
    nums, dens = [], []
    for w, ids, sig in zip(inst.witnesses, inst.identity, inst.sigma):
        nums.append(Mle(inst.num_vars,
                        [(v + beta * l + gamma) % P for v, l in zip(w.evals, ids)]))
        dens.append(Mle(inst.num_vars,
                        [(v + beta * l + gamma) % P for v, l in zip(w.evals, sig)]))
    return nums, dens


def build_fraction(nums: Sequence[Mle], dens: Sequence[Mle],
                   batch_size: int | None = None) -> Mle:
    """phi[x] = prod_i N_i[x] * (prod_i D_i[x])^-1, inverted in batches."""
    n = len(nums[0].evals)
    num_prod = [1] * n
    den_prod = [1] * n
    for t in nums:
        num_prod = [(a * b) % P for a, b in zip(num_prod, t.evals)]
    for t in dens:
        den_prod = [(a * b) % P for a, b in zip(den_prod, t.evals)]
    for i, v in enumerate(den_prod):
        if v == 0:
            raise ZeroDenominator(i)
    inv = batch_inverse(den_prod, batch_size)
    return Mle(nums[0].num_vars, [(a * b) % P for a, b in zip(num_prod, inv)])


@dataclass
class ProductTreeMles:
    phi: Mle
    pi: Mle
    p1: Mle
    p2: Mle
    root: int


def _level_offsets(mu: int) -> list[int]:
    """Start index of each internal level 1..mu inside the pi table.

    Level l holds the 2^(mu-l) products of phi over aligned blocks of 2^l.
    Offsets pack levels consecutively; one slot is left over and zeroed.
    This layout constant is the only place the tree-to-cube embedding lives;
    everything downstream goes through the p1/p2 projections.
    """
    offs = [0]
    for l in range(1, mu):
        offs.append(offs[-1] + (1 << (mu - l)))
    return offs


def build_product_tree(phi: Mle) -> ProductTreeMles:
    """Layered pairwise products of phi with child projections.

    pi(x) = p1(x) * p2(x) holds at every cube point by construction, for any
    phi; the root slot carries the full grand product of phi.
    """
    mu = phi.num_vars
    if mu < 1:
        raise ValueError("product tree needs at least one variable")
    n = 1 << mu
    pi = [0] * n
    p1 = [0] * n
    p2 = [0] * n
    offs = _level_offsets(mu)
    prev = phi.evals
    for l in range(1, mu + 1):
        width = 1 << (mu - l)
        base = offs[l - 1]
        cur = [0] * width
        for j in range(width):
            a, b = prev[2 * j], prev[2 * j + 1]
            cur[j] = (a * b) % P
            pi[base + j] = cur[j]
            p1[base + j] = a
            p2[base + j] = b
        prev = cur
    root = prev[0]
    return ProductTreeMles(phi, Mle(mu, pi), Mle(mu, p1), Mle(mu, p2), root)


def _perm_gate(k: int) -> CompositePoly:
    if k == 3:
        return builtin_gate(21)
    if k == 5:
        return builtin_gate(23)
    raise ValueError("permutation gates are defined for k=3 and k=5 wires")


def _derived_binding(inst: PermInstance, batch_size: int | None = None):
    nums, dens = build_num_den(inst)
    phi = build_fraction(nums, dens, batch_size)
    tree = build_product_tree(phi)
    binding = {"pi": tree.pi, "p_1": tree.p1, "p_2": tree.p2, "phi": phi}
    for i, (nm, dm) in enumerate(zip(nums, dens), start=1):
        binding[f"n_{i}"] = nm
        binding[f"d_{i}"] = dm
    return binding, tree


def permcheck_prove(
    inst: PermInstance,
    transcript: Transcript,
    counters: OpCounters | None = None,
    batch_size: int | None = None,
) -> SumcheckProof:
    """Squeeze beta/gamma, build the auxiliary tables, and run the ZeroCheck.

    Raises RootNotOne when the wiring is violated (the honest prover refuses
    to continue; a verifier replay rejects the root independently).
    """
    gate = _perm_gate(inst.k)
    inst.beta = transcript.challenge(b"perm/beta")
    inst.gamma = transcript.challenge(b"perm/gamma")
    binding, tree = _derived_binding(inst, batch_size)
    if tree.root != 1:
        raise RootNotOne(f"grand product is {tree.root}, wiring violated")
    return prove_statement(gate, binding, transcript, counters)


def permcheck_verify(
    inst: PermInstance,
    proof: SumcheckProof,
    transcript: Transcript,
    mode: str = "direct",
    batch_size: int | None = None,
) -> VerifyResult:
    """Replay beta/gamma, re-derive the auxiliary tables, check root and proof.

    Direct mode rebuilds every derived table from the instance, which is the
    testing stand-in for the commitment openings of the real protocol.
    """
    gate = _perm_gate(inst.k)
    inst.beta = transcript.challenge(b"perm/beta")
    inst.gamma = transcript.challenge(b"perm/gamma")
    binding = None
    if mode == "direct":
        binding, tree = _derived_binding(inst, batch_size)
        if tree.root != 1:
            return VerifyResult(False, "grand product root is not one")
    if proof.claim != 0:
        return VerifyResult(False, "permcheck claim must be zero",
                            round_index=0, expected=0, actual=proof.claim)
    return verify(gate, proof, transcript, mode, binding, expected_claim=0)


# ---------------------------------------------------------------------------
# Instance file: header (magic, version, mu, k), k dense witness tables of
# 32-byte elements, then k sigma label tables as u64 arrays.
# ---------------------------------------------------------------------------

_MAGIC = b"PRM1"
_HEADER = struct.Struct("<4sBII")


def perm_instance_to_bytes(inst: PermInstance) -> bytes:
    n = 1 << inst.num_vars
    out = [_HEADER.pack(_MAGIC, 1, inst.num_vars, inst.k)]
    for w in inst.witnesses:
        out.append(b"".join(v.to_bytes(32, "little") for v in w.evals))
    for sig in inst.sigma:
        out.append(struct.pack(f"<{n}Q", *sig))
    return b"".join(out)


def perm_instance_from_bytes(raw: bytes) -> PermInstance:
    magic, version, mu, k = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != 1:
        raise ValueError("bad permutation instance header")
    n = 1 << mu
    pos = _HEADER.size
    wits = []
    for _ in range(k):
        evals = [int.from_bytes(raw[pos + 32 * i : pos + 32 * i + 32], "little")
                 for i in range(n)]
        pos += 32 * n
        wits.append(Mle(mu, evals))
    sigma = []
    for _ in range(k):
        sigma.append(list(struct.unpack_from(f"<{n}Q", raw, pos)))
        pos += 8 * n
    if pos != len(raw):
        raise ValueError("trailing bytes in permutation instance")
    return PermInstance(mu, wits, sigma)


def save_perm_instance(inst: PermInstance, path: str) -> None:
    with open(path, "wb") as f:
        f.write(perm_instance_to_bytes(inst))


def load_perm_instance(path: str) -> PermInstance:
    with open(path, "rb") as f:
        return perm_instance_from_bytes(f.read())
