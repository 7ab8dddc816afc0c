"""Arithmetic in the BLS12-381 scalar field.

Field elements are plain Python integers kept canonical in [0, MODULUS).
All protocol values (MLE entries, round polynomial evaluations, challenges)
live in this field. Operations are value-pure and safe to call from
anywhere; there is no shared state.
"""

from __future__ import annotations

from typing import Iterable, Sequence

# 255-bit prime order of the BLS12-381 G1/G2 scalar group.
MODULUS = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001
P = MODULUS

ELEM_BYTES = 32


class ZeroInverse(Exception):
    """Raised when inverting zero. Carries the offending index for batches."""

    def __init__(self, index: int | None = None):
        self.index = index
        msg = "cannot invert zero"
        if index is not None:
            msg += f" (element {index})"
        super().__init__(msg)


def fadd(a: int, b: int) -> int:
    return (a + b) % P


def fsub(a: int, b: int) -> int:
    return (a - b) % P


def fmul(a: int, b: int) -> int:
    return (a * b) % P


def fneg(a: int) -> int:
    return (-a) % P


def fpow(a: int, e: int) -> int:
    return pow(a, e, P)


def inverse(a: int) -> int:
    """Multiplicative inverse mod P; raises ZeroInverse on zero."""
    if a % P == 0:
        raise ZeroInverse()
    return pow(a, P - 2, P)


def batch_inverse(xs: Sequence[int], batch_size: int | None = None) -> list[int]:
    """Elementwise inverses via Montgomery's trick.

    Elements are grouped into batches of ``batch_size``; each batch costs one
    field inversion plus 3*(batch_size-1) multiplications. The result does
    not depend on the batch size (defaults to the full input length, which is
    the software-throughput sweet spot; pass 2 to mirror the two-multiplier
    hardware inverse unit).
    """
    n = len(xs)
    if batch_size is None:
        batch_size = max(2, n)
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2")
    for i, x in enumerate(xs):
        if x % P == 0:
            raise ZeroInverse(i)

    out = [0] * n
    for start in range(0, n, batch_size):
        chunk = xs[start : start + batch_size]
        # prefix[i] = chunk[0] * ... * chunk[i]
        prefix = []
        acc = 1
        for x in chunk:
            acc = (acc * x) % P
            prefix.append(acc)
        inv = inverse(prefix[-1])
        for i in range(len(chunk) - 1, 0, -1):
            out[start + i] = (inv * prefix[i - 1]) % P
            inv = (inv * chunk[i]) % P
        out[start] = inv
    return out


def frand(rng) -> int:
    """Uniform field element from a random.Random-like source."""
    return rng.randrange(P)


def frand_nonzero(rng) -> int:
    return rng.randrange(1, P)


def to_bytes(a: int) -> bytes:
    """Canonical 32-byte little-endian encoding."""
    return (a % P).to_bytes(ELEM_BYTES, "little")


def from_bytes(raw: bytes) -> int:
    if len(raw) != ELEM_BYTES:
        raise ValueError(f"expected {ELEM_BYTES} bytes, got {len(raw)}")
    v = int.from_bytes(raw, "little")
    if v >= P:
        raise ValueError("non-canonical field element encoding")
    return v


def encode_elems(xs: Iterable[int]) -> bytes:
    return b"".join(to_bytes(x) for x in xs)


def decode_elems(raw: bytes) -> list[int]:
    if len(raw) % ELEM_BYTES:
        raise ValueError("byte length not a multiple of 32")
    return [from_bytes(raw[i : i + ELEM_BYTES]) for i in range(0, len(raw), ELEM_BYTES)]


# Square roots are only needed by the synthetic witness generators (curve-style
# identities y^2 = x^3 + 5), but they belong with the rest of the field ops.

def legendre(a: int) -> int:
    """1 if a is a nonzero square, -1 if a nonsquare, 0 if a == 0."""
    a %= P
    if a == 0:
        return 0
    return 1 if pow(a, (P - 1) // 2, P) == 1 else -1


def sqrt(a: int) -> int:
    """Tonelli-Shanks square root; raises ValueError for nonsquares."""
    a %= P
    if a == 0:
        return 0
    if legendre(a) != 1:
        raise ValueError("not a quadratic residue")
    # P - 1 = q * 2^s with q odd (s = 32 for this modulus).
    q, s = P - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    # Any nonsquare works as the initial generator; 5 is one for this prime.
    z = 5
    assert legendre(z) == -1
    m, c = s, pow(z, q, P)
    t, r = pow(a, q, P), pow(a, (q + 1) // 2, P)
    while t != 1:
        t2, i = t, 0
        while t2 != 1:
            t2 = (t2 * t2) % P
            i += 1
        b = pow(c, 1 << (m - i - 1), P)
        m, c = i, (b * b) % P
        t = (t * c) % P
        r = (r * b) % P
    return r
