"""Multilinear extension tables.

An MLE over mu variables is stored as a flat table of 2^mu field elements.
Index bit 0 (the lowest-order bit) is the first variable X_1, so the table
entries 2k and 2k+1 differ only in X_1 and every per-round operation pairs
adjacent entries. Fixing X_1 to a challenge r collapses each pair along the
line through its two values, halving the table.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

from .field import P, from_bytes, to_bytes


class DimensionMismatch(Exception):
    pass


class EmptyTable(Exception):
    pass


@dataclass
class Mle:
    num_vars: int
    evals: list[int]

    def __post_init__(self):
        if len(self.evals) != 1 << self.num_vars:
            raise DimensionMismatch(
                f"table of {len(self.evals)} entries is not 2^{self.num_vars}"
            )

    def __len__(self) -> int:
        return len(self.evals)

    def evaluate(self, point: Sequence[int]) -> int:
        """Evaluate the multilinear extension at an arbitrary field point.

        Folds one variable at a time: f <- f(0,.)*(1-r) + f(1,.)*r.
        """
        if len(point) != self.num_vars:
            raise DimensionMismatch(
                f"point has {len(point)} coordinates, table has {self.num_vars} vars"
            )
        cur = self.evals
        for r in point:
            cur = [(cur[2 * k] + r * (cur[2 * k + 1] - cur[2 * k])) % P
                   for k in range(len(cur) // 2)]
        return cur[0]

    def update(self, r: int) -> "Mle":
        """Fix X_1 = r: out[k] = evals[2k]*(1-r) + evals[2k+1]*r. Halves the table."""
        if self.num_vars == 0:
            raise EmptyTable("cannot update a 0-variable table")
        ev = self.evals
        folded = [(ev[2 * k] + r * (ev[2 * k + 1] - ev[2 * k])) % P
                  for k in range(len(ev) // 2)]
        return Mle(self.num_vars - 1, folded)


@dataclass
class SparseMle:
    num_vars: int
    offsets: list[int]
    values: list[int]

    def __post_init__(self):
        if len(self.offsets) != len(self.values):
            raise DimensionMismatch("offset/value length mismatch")
        n = 1 << self.num_vars
        prev = -1
        for off in self.offsets:
            if not prev < off < n:
                raise DimensionMismatch("offsets must be strictly increasing and < 2^mu")
            prev = off

    def densify(self) -> Mle:
        evals = [0] * (1 << self.num_vars)
        for off, v in zip(self.offsets, self.values):
            evals[off] = v
        return Mle(self.num_vars, evals)


def extend_pair(e0: int, e1: int, d: int) -> list[int]:
    """The line through (0, e0), (1, e1) sampled at the integers 0..d.

    One subtraction for the slope, then d-1 additions: the same
    adder/subtractor chain an extension engine runs per pair.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    diff = (e1 - e0) % P
    out = [e0 % P, e1 % P]
    cur = e1 % P
    for _ in range(d - 1):
        cur = (cur + diff) % P
        out.append(cur)
    return out


def build_eq_mle(challenges: Sequence[int]) -> Mle:
    """Table of eq(b, tau) = prod_i (b_i*tau_i + (1-b_i)*(1-tau_i)) over the cube.

    Built by doubling: one multiplication per pair of output entries.
    Satisfies sum_x eq(x, tau) * g(x) = g(tau) for any multilinear g.
    """
    evals = [1]
    for t in challenges:
        nxt = [0] * (2 * len(evals))
        for i, s in enumerate(evals):
            hi = (s * t) % P
            nxt[2 * i] = (s - hi) % P
            nxt[2 * i + 1] = hi
        evals = nxt
    return Mle(len(challenges), evals)


def sparsify(m: Mle, threshold: float) -> SparseMle | Mle:
    """Convert to sparse storage when the nonzero fraction is <= threshold."""
    nonzero = [(i, v) for i, v in enumerate(m.evals) if v != 0]
    if len(m.evals) and len(nonzero) / len(m.evals) > threshold:
        return m
    return SparseMle(m.num_vars, [i for i, _ in nonzero], [v for _, v in nonzero])


# ---------------------------------------------------------------------------
# File format: header (magic, version, mu, dense|sparse flag, count), then
# 32-byte little-endian elements; sparse tables put a u32 offset array before
# the values.
# ---------------------------------------------------------------------------

_MAGIC = b"MLE1"
_VERSION = 1
_HEADER = struct.Struct("<4sBBIQ")  # magic, version, flag, mu, count


def save_mle(m: Mle | SparseMle, path: str) -> None:
    with open(path, "wb") as f:
        f.write(mle_to_bytes(m))


def load_mle(path: str) -> Mle | SparseMle:
    with open(path, "rb") as f:
        return mle_from_bytes(f.read())


def mle_to_bytes(m: Mle | SparseMle) -> bytes:
    if isinstance(m, Mle):
        head = _HEADER.pack(_MAGIC, _VERSION, 0, m.num_vars, len(m.evals))
        return head + b"".join(to_bytes(v) for v in m.evals)
    head = _HEADER.pack(_MAGIC, _VERSION, 1, m.num_vars, len(m.offsets))
    offs = struct.pack(f"<{len(m.offsets)}I", *m.offsets)
    return head + offs + b"".join(to_bytes(v) for v in m.values)


def mle_from_bytes(raw: bytes) -> Mle | SparseMle:
    if len(raw) < _HEADER.size:
        raise ValueError("truncated MLE header")
    magic, version, flag, mu, count = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("bad MLE file magic/version")
    body = raw[_HEADER.size:]
    if flag == 0:
        if count != 1 << mu:
            raise ValueError("dense count does not match 2^mu")
        if len(body) != 32 * count:
            raise ValueError("truncated MLE body")
        return Mle(mu, [from_bytes(body[32 * i : 32 * i + 32]) for i in range(count)])
    offs_len = 4 * count
    if len(body) != offs_len + 32 * count:
        raise ValueError("truncated sparse MLE body")
    offsets = list(struct.unpack(f"<{count}I", body[:offs_len]))
    vals = [from_bytes(body[offs_len + 32 * i : offs_len + 32 * i + 32]) for i in range(count)]
    return SparseMle(mu, offsets, vals)
