"""Binary BCH codes and entropy compression through their generator structure.

The same banded k x n generator-coefficient matrix serves two purposes:

* ECC encoding: a k-bit message row-combines the matrix into an n-bit
  codeword (equivalently, carry-less multiplication by the reversed
  generator coefficients).
* Entropy compression: an n-bit raw block is multiplied from the right,
  z = G y, collapsing n physical bits into k whitened bits.  Each output
  bit is the XOR of weight(g) input bits, so an input bias e shrinks to
  e**weight(g) at the output (piling-up argument).

Row i of the matrix holds the generator coefficients highest-degree-first
starting at column i; every row fits exactly because deg(g) = n - k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .gf2 import (
    Gf2Matrix,
    Gf2Poly,
    _gf2_divmod,
    as_bit_array,
    poly_from_octal,
    poly_weight,
)

__all__ = [
    "BchCode",
    "CompressionMatrix",
    "DecodeResult",
    "code_registry",
    "lookup_code",
    "build_compression_matrix",
    "compress_block",
    "compress_stream_matrix",
    "compress_stream_shiftreg",
    "bch_encode",
    "bch_decode",
    "predicted_output_bias",
]

# Standard narrow-sense binary BCH generator polynomials, octal notation,
# for every length 2^m - 1 used here.  k = n - deg(g); minimum distance
# >= 2t + 1.  Sorted by (n, t).
_CODE_TABLE: tuple[tuple[int, int, int, str], ...] = (
    (7, 4, 1, "13"),
    (31, 26, 1, "45"),
    (31, 21, 2, "3551"),
    (31, 16, 3, "107657"),
    (31, 11, 5, "5423325"),
    (63, 57, 1, "103"),
    (63, 51, 2, "12471"),
    (63, 45, 3, "1701317"),
    (63, 39, 4, "166623567"),
    (127, 120, 1, "211"),
    (127, 113, 2, "41567"),
    (127, 106, 3, "11554743"),
    (127, 99, 4, "3447023271"),
)

# Field modulus per length: the t=1 generator of each length is the
# standard primitive polynomial of GF(2^m), reused for syndrome decoding.
_PRIMITIVE = {7: 0o13, 31: 0o45, 63: 0o103, 127: 0o211}


@dataclass(frozen=True)
class BchCode:
    """A (n, k, t) binary BCH code with its generator polynomial."""

    n: int
    k: int
    t: int
    generator_octal: str
    generator: Gf2Poly = field(init=False)

    def __post_init__(self):
        g = poly_from_octal(self.generator_octal)
        if not (0 < self.k < self.n):
            raise ValueError(f"need 0 < k < n, got (n={self.n}, k={self.k})")
        if self.t < 1:
            raise ValueError(f"t must be >= 1, got {self.t}")
        if g.degree != self.n - self.k:
            raise ValueError(
                f"generator degree {g.degree} != n - k = {self.n - self.k} "
                f"for ({self.n},{self.k},{self.t})"
            )
        object.__setattr__(self, "generator", g)

    @property
    def compression_ratio(self) -> float:
        """Output bits per input bit, exactly k/n."""
        return self.k / self.n

    def __str__(self) -> str:
        return f"({self.n},{self.k},{self.t})"


@dataclass(frozen=True, eq=False)
class DecodeResult:
    """Outcome of bch_decode: ok=False means no codeword within distance t."""

    ok: bool
    message: np.ndarray | None
    errors_corrected: int


@dataclass(frozen=True, eq=False)
class CompressionMatrix:
    code: BchCode
    matrix: Gf2Matrix


@lru_cache(maxsize=None)
def _registry() -> tuple[BchCode, ...]:
    return tuple(BchCode(n, k, t, octal) for n, k, t, octal in _CODE_TABLE)


def code_registry() -> list[BchCode]:
    """All shipped codes, sorted by (n, t)."""
    return list(_registry())


def lookup_code(n: int, k: int, t: int) -> BchCode:
    for code in _registry():
        if (code.n, code.k, code.t) == (n, k, t):
            return code
    known = ", ".join(str(c) for c in _registry())
    raise ValueError(f"unknown code ({n},{k},{t}); available: {known}")


def _reversed_generator_mask(code: BchCode) -> int:
    return code.generator.reciprocal().mask


@lru_cache(maxsize=None)
def _matrix_for(code: BchCode) -> Gf2Matrix:
    deg = code.n - code.k
    g = code.generator.mask
    row = [(g >> (deg - j)) & 1 for j in range(deg + 1)]  # highest degree first
    a = np.zeros((code.k, code.n), dtype=np.uint8)
    for i in range(code.k):
        a[i, i : i + deg + 1] = row
    return Gf2Matrix(a)


def build_compression_matrix(code: BchCode) -> CompressionMatrix:
    """The banded k x n matrix shared by the encoder and the compressor."""
    return CompressionMatrix(code, _matrix_for(code))


def compress_block(code: BchCode, block) -> np.ndarray:
    """Compress one n-bit block to k bits: z = G y."""
    y = as_bit_array(block)
    if y.size != code.n:
        raise ValueError(f"block length {y.size} != n = {code.n}")
    m = _matrix_for(code).a
    return ((m @ y) & 1).astype(np.uint8)


def compress_stream_matrix(code: BchCode, bits) -> np.ndarray:
    """Blockwise matrix compression of a bit stream.

    The stream is cut into complete n-bit blocks (a trailing partial block
    is discarded) and each block is multiplied by the banded matrix.
    """
    y = as_bit_array(bits)
    nblocks = y.size // code.n
    if nblocks == 0:
        return np.empty(0, dtype=np.uint8)
    blocks = y[: nblocks * code.n].reshape(nblocks, code.n)
    # uint8 matmul is safe: row sums are bounded by n <= 127 < 256
    z = (blocks @ _matrix_for(code).a.T) & 1
    return np.ascontiguousarray(z.reshape(-1), dtype=np.uint8)


def compress_stream_shiftreg(code: BchCode, bits) -> np.ndarray:
    """Bit-serial compression through a tapped shift register.

    Hardware view of the same banded matrix: raw bits enter a register of
    n-k+1 cells whose taps sit at the generator's nonzero coefficients.
    After the register is primed with n-k bits of a block, every further
    shift emits one output bit (k per block), then the next block starts
    over.  Must agree bit-for-bit with compress_stream_matrix.
    """
    y = as_bit_array(bits)
    n, k = code.n, code.k
    deg = n - k
    taps = code.generator.mask
    regmask = (1 << (deg + 1)) - 1
    nblocks = y.size // n
    out = np.empty(nblocks * k, dtype=np.uint8)
    seq = y[: nblocks * n].tolist()
    w = 0
    for start in range(0, nblocks * n, n):
        reg = 0
        for j in range(n):
            reg = ((reg << 1) | seq[start + j]) & regmask
            if j >= deg:
                out[w] = (reg & taps).bit_count() & 1
                w += 1
    return out


def _int_from_bits(bits: np.ndarray) -> int:
    v = 0
    for i, b in enumerate(bits.tolist()):
        if b:
            v |= 1 << i
    return v


def _bits_from_int(v: int, length: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(length)], dtype=np.uint8)


def bch_encode(code: BchCode, message) -> np.ndarray:
    """Non-systematic encoding: the k-bit message selects rows of the matrix.

    Equivalent to carry-less multiplication of the message polynomial by the
    reversed generator coefficients; returns the n-bit codeword.
    """
    m = as_bit_array(message)
    if m.size != code.k:
        raise ValueError(f"message length {m.size} != k = {code.k}")
    mval = _int_from_bits(m)
    revg = _reversed_generator_mask(code)
    c = 0
    shift = 0
    while mval:
        if mval & 1:
            c ^= revg << shift
        mval >>= 1
        shift += 1
    return _bits_from_int(c, code.n)


class _Field:
    """GF(2^m) arithmetic via exp/log tables over the standard modulus."""

    def __init__(self, m: int, poly: int):
        size = (1 << m) - 1
        exp = np.zeros(2 * size, dtype=np.int64)
        log = np.zeros(size + 1, dtype=np.int64)
        x = 1
        for i in range(size):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x >> m:
                x ^= poly
        if x != 1:
            raise ValueError(f"0o{poly:o} is not primitive for GF(2^{m})")
        exp[size:] = exp[:size]
        self.m = m
        self.size = size
        self.exp = exp
        self.log = log

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in GF(2^m)")
        return int(self.exp[self.size - self.log[a]])


@lru_cache(maxsize=None)
def _field_for(n: int) -> _Field:
    poly = _PRIMITIVE[n]
    return _Field(poly.bit_length() - 1, poly)


def _berlekamp_massey(field: _Field, syndromes: list[int]) -> tuple[list[int], int]:
    """Shortest LFSR (error locator sigma) generating the syndrome sequence."""
    nsyn = len(syndromes)
    c = [1] + [0] * nsyn
    b = [1] + [0] * nsyn
    L = 0
    shift = 1
    bscale = 1
    for i in range(nsyn):
        d = syndromes[i]
        for j in range(1, L + 1):
            d ^= field.mul(c[j], syndromes[i - j])
        if d == 0:
            shift += 1
            continue
        coef = field.mul(d, field.inv(bscale))
        if 2 * L <= i:
            prev = c[:]
            for j in range(nsyn + 1 - shift):
                c[j + shift] ^= field.mul(coef, b[j])
            L = i + 1 - L
            b = prev
            bscale = d
            shift = 1
        else:
            for j in range(nsyn + 1 - shift):
                c[j + shift] ^= field.mul(coef, b[j])
            shift += 1
    return c[: L + 1], L


def _chien_roots(field: _Field, sigma: list[int], n: int) -> np.ndarray:
    """Positions p in [0, n) with sigma(alpha^p) = 0."""
    p = np.arange(n, dtype=np.int64)
    acc = np.zeros(n, dtype=np.int64)
    for j, cj in enumerate(sigma):
        if cj:
            acc ^= field.exp[(int(field.log[cj]) + j * p) % field.size]
    return np.flatnonzero(acc == 0)


def bch_decode(code: BchCode, received) -> DecodeResult:
    """Decode to the nearest codeword within distance t.

    Syndromes are evaluated at alpha^(n-j) for j = 1..2t because the banded
    matrix encodes with the generator coefficients reversed; with that
    convention the Chien roots are the error positions directly.  Returns
    ok=False when no codeword lies within distance t.
    """
    r = as_bit_array(received)
    if r.size != code.n:
        raise ValueError(f"received length {r.size} != n = {code.n}")
    field = _field_for(code.n)
    n = code.n
    ones = np.flatnonzero(r).astype(np.int64)
    syndromes = []
    for j in range(1, 2 * code.t + 1):
        if ones.size:
            idx = (ones * ((n - j) % n)) % n
            s = int(np.bitwise_xor.reduce(field.exp[idx]))
        else:
            s = 0
        syndromes.append(s)

    if not any(syndromes):
        corrected = r
        nerr = 0
    else:
        sigma, L = _berlekamp_massey(field, syndromes)
        if L > code.t or sigma[L] == 0:
            return DecodeResult(False, None, 0)
        roots = _chien_roots(field, sigma, n)
        if roots.size != L:
            return DecodeResult(False, None, 0)
        corrected = r.copy()
        corrected[roots] ^= 1
        nerr = L

    quotient, remainder = _gf2_divmod(_int_from_bits(corrected), _reversed_generator_mask(code))
    if remainder != 0:
        return DecodeResult(False, None, 0)
    return DecodeResult(True, _bits_from_int(quotient, code.k), nerr)


def predicted_output_bias(code: BchCode, input_bias: float) -> float:
    """Piling-up prediction: output bias e**weight(g) for input bias e.

    Bias e means P(1) = (1 + e) / 2; every output bit XORs weight(g)
    independent input bits, so the deviation from 1/2 is e**w / 2.
    """
    if not 0.0 <= input_bias <= 1.0:
        raise ValueError(f"input bias must lie in [0, 1], got {input_bias}")
    return float(input_bias) ** poly_weight(code.generator)
