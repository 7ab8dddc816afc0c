"""Round-based SumCheck prover and verifier over a composite polynomial.

The prover walks one round per variable. In round i it needs s_i evaluated
at the integer points 0..d (d = composite degree): every adjacent table pair
is extended along its line, extensions are multiplied across a term's
factors and accumulated down the table, and term totals are summed with
their coefficients. The round polynomial is absorbed into the transcript,
a challenge r_i is squeezed, and every bound table is folded to half size.

Transcript discipline (fixed here, documented for reproducibility): absorb
the gate hash and mu, squeeze named challenge scalars in sorted name order,
squeeze one mu-vector per eq-role input in declaration order, then per round
absorb s_i and squeeze r_i.

Operation counters report the modular-multiplier work of the accelerator
datapath being modeled: all d+1 extension points per term, per pair, as the
schedule issues them. The Python implementation computes low-degree terms at
fewer points and extrapolates, which changes no output value and is not what
the counters measure.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field as dc_field
from typing import Mapping, Sequence

from .field import P, batch_inverse, from_bytes, inverse, to_bytes
from .gates import CompositePoly, MissingBinding, append_eq_factor, gate_hash
from .mle import DimensionMismatch, Mle, build_eq_mle

HASH_ALGO = "sha256"


class ProofMalformed(Exception):
    pass


class Transcript:
    """Fiat-Shamir transcript: a running SHA-256 state plus an event log.

    Identical absorb sequences yield identical challenge sequences; every
    squeezed challenge is absorbed back so repeated squeezes differ.
    """

    def __init__(self, label: bytes = b""):
        self.state = hashlib.sha256(b"polycheck.fs.v1/" + label).digest()
        self.log: list[tuple[str, bytes]] = []

    def absorb(self, tag: bytes, data: bytes) -> None:
        h = hashlib.sha256()
        h.update(self.state)
        h.update(struct.pack("<I", len(tag)))
        h.update(tag)
        h.update(struct.pack("<I", len(data)))
        h.update(data)
        self.state = h.digest()
        self.log.append(("absorb:" + tag.decode("latin1"), data))

    def absorb_elem(self, tag: bytes, x: int) -> None:
        self.absorb(tag, to_bytes(x))

    def absorb_elems(self, tag: bytes, xs: Sequence[int]) -> None:
        self.absorb(tag, b"".join(to_bytes(x) for x in xs))

    def challenge(self, tag: bytes = b"") -> int:
        digest = hashlib.sha256(self.state + b"/squeeze/" + tag).digest()
        c = int.from_bytes(digest, "little") % P
        self.absorb(b"challenge/" + tag, to_bytes(c))
        return c

    def challenge_vector(self, n: int, tag: bytes = b"") -> list[int]:
        return [self.challenge(tag) for _ in range(n)]


def derive_challenge(transcript: Transcript) -> int:
    """Hash the transcript state down to a field element (and absorb it)."""
    return transcript.challenge()


@dataclass
class RoundPolynomial:
    evals: list[int]  # s_i(0), ..., s_i(d)


_INV_DENOM_CACHE: dict[int, list[int]] = {}


def _lagrange_inv_denoms(d: int) -> list[int]:
    """1 / prod_{m != j} (j - m) for nodes 0..d."""
    if d not in _INV_DENOM_CACHE:
        denoms = []
        for j in range(d + 1):
            acc = 1
            for m in range(d + 1):
                if m != j:
                    acc = (acc * (j - m)) % P
            denoms.append(acc)
        _INV_DENOM_CACHE[d] = batch_inverse(denoms)
    return _INV_DENOM_CACHE[d]


def evaluate_round_poly(rp: RoundPolynomial, r: int) -> int:
    """Interpolate through (0..d, evals) and evaluate at r."""
    k = len(rp.evals)
    d = k - 1
    r %= P
    if r < k:
        return rp.evals[r]
    # prefix[j] = prod_{m<j} (r-m), suffix[j] = prod_{m>j} (r-m)
    prefix = [1] * k
    for j in range(1, k):
        prefix[j] = (prefix[j - 1] * (r - (j - 1))) % P
    suffix = [1] * k
    for j in range(d - 1, -1, -1):
        suffix[j] = (suffix[j + 1] * (r - (j + 1))) % P
    inv_denoms = _lagrange_inv_denoms(d)
    acc = 0
    for j in range(k):
        acc += rp.evals[j] * ((prefix[j] * suffix[j]) % P) % P * inv_denoms[j]
    return acc % P


@dataclass
class OpCounters:
    """Modular-op bookkeeping, one entry per round plus running totals."""

    product_muls: int = 0
    update_muls: int = 0
    coeff_muls: int = 0
    eq_build_muls: int = 0
    extension_adds: int = 0
    per_round: list[dict] = dc_field(default_factory=list)

    @property
    def total_muls(self) -> int:
        return self.product_muls + self.update_muls + self.coeff_muls + self.eq_build_muls


@dataclass
class SumcheckProof:
    gate_hash: bytes
    hash_algo: str
    num_vars: int
    degree: int
    claim: int
    rounds: list[RoundPolynomial]
    final_point: list[int]
    final_evals: dict[str, int]


@dataclass
class VerifyResult:
    accepted: bool
    reason: str = ""
    round_index: int | None = None
    expected: int | None = None
    actual: int | None = None

    def __bool__(self) -> bool:
        return self.accepted


def _extend_scalar_sequence(vals: list[int], k: int) -> list[int]:
    """Extend samples of a degree-(len-1) polynomial at 0..len-1 out to 0..k-1."""
    if len(vals) >= k:
        return vals[:k]
    lead = [list(vals)]
    while len(lead[-1]) > 1:
        prev = lead[-1]
        lead.append([(prev[i + 1] - prev[i]) % P for i in range(len(prev) - 1)])
    tops = [lvl[-1] for lvl in lead]
    out = list(vals)
    while len(out) < k:
        for j in range(len(tops) - 2, -1, -1):
            tops[j] = (tops[j] + tops[j + 1]) % P
        out.append(tops[0])
    return out


def _resolve_coeff(term, scalars: Mapping[str, int]) -> int:
    if term.challenge is None:
        return term.scalar
    if term.challenge not in scalars:
        raise MissingBinding(f"no value for challenge {term.challenge!r}")
    return (term.scalar * scalars[term.challenge]) % P


def prove(
    p: CompositePoly,
    binding: Mapping[str, Mle],
    scalars: Mapping[str, int],
    transcript: Transcript,
    counters: OpCounters | None = None,
) -> SumcheckProof:
    """Run all mu rounds; every input of p must already be bound.

    Most callers want prove_statement(), which also derives challenge
    scalars and eq-role tables from the transcript.
    """
    input_ids = p.input_ids
    for ref in p.inputs:
        if ref.id not in binding:
            raise MissingBinding(f"no table bound for input {ref.id!r}")
    mu = binding[input_ids[0]].num_vars
    for ident in input_ids:
        if binding[ident].num_vars != mu:
            raise DimensionMismatch("bound tables disagree on num_vars")
    if mu < 1:
        raise DimensionMismatch("sumcheck needs at least one variable")

    d = p.degree
    big_k = d + 1
    coeffs = [_resolve_coeff(t, scalars) for t in p.terms]
    used = sorted({f for t in p.terms for f in t.factors})
    # Points each table must be extended to: enough for the largest term
    # that consumes it. Term totals are extrapolated up to d+1 afterwards.
    need = {ident: 2 for ident in used}
    for t in p.terms:
        pts = t.degree + 1
        for f in set(t.factors):
            need[f] = max(need[f], pts)

    tables: dict[str, list[int]] = {i: list(binding[i].evals) for i in input_ids}
    prod_per_pair = sum(t.degree - 1 for t in p.terms) * big_k

    rounds: list[RoundPolynomial] = []
    rs: list[int] = []
    for _rnd in range(mu):
        pairs = len(tables[input_ids[0]]) // 2
        ext: dict[str, list[list[int]]] = {}
        for ident in used:
            tab = tables[ident]
            evens = tab[0::2]
            odds = tab[1::2]
            cols = [evens, odds]
            if need[ident] > 2:
                diffs = [o - e for o, e in zip(odds, evens)]
                cur = odds
                for _ in range(need[ident] - 2):
                    cur = [c + df for c, df in zip(cur, diffs)]
                    cols.append(cur)
            ext[ident] = cols

        s = [0] * big_k
        for term, coeff in zip(p.terms, coeffs):
            if coeff == 0:
                continue
            fs = term.factors
            pts = term.degree + 1
            vals = []
            for k in range(pts):
                if len(fs) == 1:
                    tot = sum(ext[fs[0]][k]) % P
                else:
                    col = ext[fs[0]][k]
                    for f in fs[1:-1]:
                        other = ext[f][k]
                        col = [(x * y) % P for x, y in zip(col, other)]
                    last = ext[fs[-1]][k]
                    tot = sum(x * y for x, y in zip(col, last)) % P
                vals.append((coeff * tot) % P)
            for k, v in enumerate(_extend_scalar_sequence(vals, big_k)):
                s[k] += v
        s = [v % P for v in s]

        rounds.append(RoundPolynomial(s))
        transcript.absorb_elems(b"round", s)
        r = transcript.challenge(b"r")
        rs.append(r)
        for ident in input_ids:
            tab = tables[ident]
            tables[ident] = [
                (tab[2 * j] + r * (tab[2 * j + 1] - tab[2 * j])) % P
                for j in range(pairs)
            ]
        if counters is not None:
            rnd_product = pairs * prod_per_pair
            rnd_update = len(input_ids) * pairs
            rnd_ext = pairs * sum(need[i] - 1 for i in used)
            counters.product_muls += rnd_product
            counters.update_muls += rnd_update
            counters.coeff_muls += len(p.terms) * big_k
            counters.extension_adds += rnd_ext
            counters.per_round.append(
                {"product_muls": rnd_product, "update_muls": rnd_update,
                 "extension_adds": rnd_ext, "pairs": pairs}
            )

    claim = (rounds[0].evals[0] + rounds[0].evals[1]) % P
    final_evals = {ident: tables[ident][0] for ident in input_ids}
    return SumcheckProof(
        gate_hash=gate_hash(p),
        hash_algo=HASH_ALGO,
        num_vars=mu,
        degree=d,
        claim=claim,
        rounds=rounds,
        final_point=rs,
        final_evals=final_evals,
    )


def _eq_closed_form(tau: Sequence[int], point: Sequence[int]) -> int:
    acc = 1
    for t, r in zip(tau, point):
        acc = (acc * (t * r + (1 - t) * (1 - r))) % P
    return acc


def _statement_setup(p: CompositePoly, mu: int, transcript: Transcript):
    """Shared prover/verifier preamble: statement binding and derived values."""
    transcript.absorb(b"gate", gate_hash(p))
    transcript.absorb(b"mu", struct.pack("<I", mu))
    scalars = {name: transcript.challenge(b"scalar/" + name.encode())
               for name in sorted(p.challenges())}
    eq_points = {ident: transcript.challenge_vector(mu, b"eq/" + ident.encode())
                 for ident in p.eq_inputs()}
    return scalars, eq_points


def prove_statement(
    p: CompositePoly,
    binding: Mapping[str, Mle],
    transcript: Transcript,
    counters: OpCounters | None = None,
) -> SumcheckProof:
    """Prove with transcript-derived challenge scalars and eq-role tables.

    ``binding`` covers the non-eq inputs; each eq-role input is built from a
    squeezed challenge vector (the randomized auxiliary table of a
    ZeroCheck, or an opened point's kernel).
    """
    non_eq = [r.id for r in p.inputs if r.role != "eq"]
    for ident in non_eq:
        if ident not in binding:
            raise MissingBinding(f"no table bound for input {ident!r}")
    if not non_eq:
        raise MissingBinding("gate has no bindable inputs")
    mu = binding[non_eq[0]].num_vars
    scalars, eq_points = _statement_setup(p, mu, transcript)
    full = dict(binding)
    for ident, tau in eq_points.items():
        full[ident] = build_eq_mle(tau)
        if counters is not None:
            counters.eq_build_muls += (1 << mu) - 1
    return prove(p, full, scalars, transcript, counters)


def zerocheck_prove(
    p_gate: CompositePoly,
    binding: Mapping[str, Mle],
    transcript: Transcript,
    counters: OpCounters | None = None,
) -> SumcheckProof:
    """Prove that the gate vanishes on the whole cube.

    The gate must not already carry an eq-role factor; a fresh f_r is
    appended to every term and built from squeezed challenges, so gate rows
    that individually violate the constraint cannot cancel in the sum.
    """
    wrapped = append_eq_factor(p_gate)
    return prove_statement(wrapped, binding, transcript, counters)


def verify(
    p: CompositePoly,
    proof: SumcheckProof,
    transcript: Transcript,
    mode: str = "direct",
    binding: Mapping[str, Mle] | None = None,
    expected_claim: int | None = None,
) -> VerifyResult:
    """Replay the transcript and check every round consistency equation.

    direct mode re-evaluates the original (non-eq) tables at the final
    point; trusting mode consumes the prover's final_evals, modeling the
    boundary a polynomial-commitment opening would close.
    """
    if mode not in ("direct", "trusting"):
        raise ValueError("mode must be 'direct' or 'trusting'")
    if mode == "direct" and binding is None:
        raise MissingBinding("direct mode needs the original tables")
    if proof.gate_hash != gate_hash(p):
        return VerifyResult(False, "proof was produced for a different gate")
    mu = proof.num_vars
    d = p.degree
    if proof.degree != d:
        return VerifyResult(False, "degree header mismatch")
    if len(proof.rounds) != mu:
        return VerifyResult(False, "wrong number of rounds")
    for rp in proof.rounds:
        if len(rp.evals) != d + 1:
            return VerifyResult(False, "round polynomial has wrong length")

    scalars, eq_points = _statement_setup(p, mu, transcript)
    if expected_claim is not None and proof.claim != expected_claim % P:
        return VerifyResult(False, "claim differs from the claimed sum",
                            round_index=0, expected=expected_claim % P,
                            actual=proof.claim)

    expected = proof.claim
    rs: list[int] = []
    for i, rp in enumerate(proof.rounds):
        got = (rp.evals[0] + rp.evals[1]) % P
        if got != expected:
            return VerifyResult(False, "round consistency failed",
                                round_index=i + 1, expected=expected, actual=got)
        transcript.absorb_elems(b"round", rp.evals)
        r = transcript.challenge(b"r")
        rs.append(r)
        expected = evaluate_round_poly(rp, r)

    if rs != proof.final_point:
        return VerifyResult(False, "final point does not match transcript")

    final = 0
    for t in p.terms:
        v = _resolve_coeff(t, scalars)
        for f in t.factors:
            if f in eq_points:
                fv = _eq_closed_form(eq_points[f], rs)
            elif mode == "direct":
                fv = binding[f].evaluate(rs)
            else:
                if f not in proof.final_evals:
                    return VerifyResult(False, f"missing final eval for {f!r}")
                fv = proof.final_evals[f]
            v = (v * fv) % P
        final += v
    final %= P
    if final != expected:
        return VerifyResult(False, "final evaluation mismatch",
                            round_index=mu, expected=expected, actual=final)
    return VerifyResult(True, "ok")


def zerocheck_verify(
    p_gate: CompositePoly,
    proof: SumcheckProof,
    transcript: Transcript,
    mode: str = "direct",
    binding: Mapping[str, Mle] | None = None,
) -> VerifyResult:
    wrapped = append_eq_factor(p_gate)
    return verify(wrapped, proof, transcript, mode, binding, expected_claim=0)


# ---------------------------------------------------------------------------
# Proof serialization: header (gate hash, hash algo, mu, degree), claim,
# round evaluations, final point, final evals; elements 32-byte little-endian.
# ---------------------------------------------------------------------------

_PROOF_MAGIC = b"SCPF"
_PROOF_VERSION = 1


def proof_to_bytes(proof: SumcheckProof) -> bytes:
    algo = proof.hash_algo.encode()
    out = [
        _PROOF_MAGIC,
        struct.pack("<B", _PROOF_VERSION),
        struct.pack("<B", len(algo)),
        algo,
        proof.gate_hash,
        struct.pack("<II", proof.num_vars, proof.degree),
        to_bytes(proof.claim),
    ]
    for rp in proof.rounds:
        out.append(b"".join(to_bytes(v) for v in rp.evals))
    out.append(b"".join(to_bytes(v) for v in proof.final_point))
    out.append(struct.pack("<I", len(proof.final_evals)))
    for ident in sorted(proof.final_evals):
        raw = ident.encode()
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(to_bytes(proof.final_evals[ident]))
    return b"".join(out)


def proof_from_bytes(raw: bytes) -> SumcheckProof:
    view = memoryview(raw)
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(view):
            raise ProofMalformed("truncated proof")
        out = bytes(view[pos : pos + n])
        pos += n
        return out

    if take(4) != _PROOF_MAGIC:
        raise ProofMalformed("bad proof magic")
    if take(1)[0] != _PROOF_VERSION:
        raise ProofMalformed("unsupported proof version")
    algo = take(take(1)[0]).decode()
    ghash = take(32)
    mu, deg = struct.unpack("<II", take(8))
    if mu == 0 or mu > 64 or deg > 1024:
        raise ProofMalformed("implausible proof header")
    try:
        claim = from_bytes(take(32))
        rounds = [RoundPolynomial([from_bytes(take(32)) for _ in range(deg + 1)])
                  for _ in range(mu)]
        final_point = [from_bytes(take(32)) for _ in range(mu)]
        (count,) = struct.unpack("<I", take(4))
        if count > 4096:
            raise ProofMalformed("implausible final_evals count")
        final_evals = {}
        for _ in range(count):
            (ln,) = struct.unpack("<H", take(2))
            ident = take(ln).decode()
            final_evals[ident] = from_bytes(take(32))
    except ValueError as exc:
        raise ProofMalformed(str(exc)) from exc
    if pos != len(view):
        raise ProofMalformed("trailing bytes after proof")
    return SumcheckProof(ghash, algo, mu, deg, claim, rounds, final_point, final_evals)
