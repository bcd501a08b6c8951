"""GF(2) polynomial and matrix primitives.

Polynomials over GF(2) are stored as Python integers: bit i of the integer
is the coefficient of x^i.  Addition is XOR, multiplication is carry-less,
reduction is long division by shifted XORs.  Octal notation follows the
classic coding-table convention: the octal digits, read in binary, give the
coefficients from the highest degree down, so "45" -> 100101 -> x^5+x^2+1.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Gf2Poly",
    "Gf2Matrix",
    "poly_from_octal",
    "poly_to_octal",
    "poly_weight",
    "poly_mul_mod",
    "matvec",
    "as_bit_array",
]


def _clmul(a: int, b: int) -> int:
    """Carry-less (GF(2)) product of two coefficient masks."""
    r = 0
    shift = 0
    while b:
        if b & 1:
            r ^= a << shift
        b >>= 1
        shift += 1
    return r


def _gf2_divmod(a: int, m: int) -> tuple[int, int]:
    """Quotient and remainder of a / m over GF(2).

    Parameters
    ----------
    a, m : int
        Coefficient masks; m must be nonzero.
    """
    dm = m.bit_length() - 1
    q = 0
    while a.bit_length() - 1 >= dm and a:
        shift = a.bit_length() - 1 - dm
        q |= 1 << shift
        a ^= m << shift
    return q, a


def _gf2_mod(a: int, m: int) -> int:
    return _gf2_divmod(a, m)[1]


class Gf2Poly:
    """Polynomial over GF(2).

    Wraps an integer mask; treat instances as immutable.  Comparisons and
    hashing go through the mask, so polynomials work as dict keys.
    """

    __slots__ = ("mask",)

    def __init__(self, mask: int):
        if not isinstance(mask, int) or mask < 0:
            raise ValueError(f"polynomial mask must be a non-negative integer, got {mask!r}")
        self.mask = mask

    @property
    def degree(self) -> int:
        # degree of the zero polynomial is taken as 0 (coefficient there is 0)
        return max(self.mask.bit_length() - 1, 0)

    @property
    def is_zero(self) -> bool:
        return self.mask == 0

    @property
    def coefficients(self) -> tuple[int, ...]:
        """Coefficients from degree 0 upward; (0,) for the zero polynomial."""
        if self.mask == 0:
            return (0,)
        return tuple((self.mask >> i) & 1 for i in range(self.degree + 1))

    @property
    def weight(self) -> int:
        return self.mask.bit_count()

    def reciprocal(self) -> "Gf2Poly":
        """Coefficient order reversed within degree+1 positions."""
        d = self.degree
        r = 0
        for i in range(d + 1):
            if (self.mask >> i) & 1:
                r |= 1 << (d - i)
        return Gf2Poly(r)

    def __eq__(self, other) -> bool:
        return isinstance(other, Gf2Poly) and self.mask == other.mask

    def __hash__(self) -> int:
        return hash(("Gf2Poly", self.mask))

    def __repr__(self) -> str:
        if self.mask == 0:
            return "Gf2Poly(0)"
        terms = []
        for i in range(self.degree, -1, -1):
            if (self.mask >> i) & 1:
                terms.append("1" if i == 0 else ("x" if i == 1 else f"x^{i}"))
        return f"Gf2Poly({' + '.join(terms)})"


def poly_from_octal(octal_digits: str) -> Gf2Poly:
    """Parse a generator polynomial from coding-table octal notation.

    "45" -> binary 100101 -> x^5 + x^2 + 1.
    """
    if not isinstance(octal_digits, str) or not octal_digits:
        raise ValueError("octal polynomial string must be non-empty")
    if any(c not in "01234567" for c in octal_digits):
        raise ValueError(f"invalid octal polynomial {octal_digits!r}: digits must be 0-7")
    return Gf2Poly(int(octal_digits, 8))


def poly_to_octal(p: Gf2Poly) -> str:
    return format(p.mask, "o")


def poly_weight(p: Gf2Poly) -> int:
    """Number of nonzero coefficients."""
    return p.weight


def poly_mul_mod(a: Gf2Poly, b: Gf2Poly, m: Gf2Poly) -> Gf2Poly:
    """a * b mod m over GF(2)."""
    if m.is_zero:
        raise ValueError("zero modulus in poly_mul_mod")
    return Gf2Poly(_gf2_mod(_clmul(a.mask, b.mask), m.mask))


def as_bit_array(bits) -> np.ndarray:
    """Normalize a bit sequence (iterable / text / ndarray) to a uint8 array of 0/1."""
    if isinstance(bits, str):
        bits = [c for c in bits if not c.isspace()]
        if any(c not in "01" for c in bits):
            raise ValueError("bit string may contain only 0, 1 and whitespace")
        a = np.array([ord(c) - ord("0") for c in bits], dtype=np.uint8)
        return a
    a = np.asarray(bits)
    if a.dtype != np.uint8:
        a = a.astype(np.uint8)
    if a.ndim != 1:
        raise ValueError(f"bit sequence must be one-dimensional, got shape {a.shape}")
    if a.size and a.max() > 1:
        raise ValueError("bit sequence entries must be 0 or 1")
    return a


class Gf2Matrix:
    """Dense matrix over GF(2); entries live in a read-only numpy uint8 array."""

    __slots__ = ("a",)

    def __init__(self, entries):
        a = np.ascontiguousarray(entries, dtype=np.uint8)
        if a.ndim != 2:
            raise ValueError(f"matrix entries must be two-dimensional, got shape {a.shape}")
        if a.size and a.max() > 1:
            raise ValueError("matrix entries must be 0 or 1")
        a.setflags(write=False)
        self.a = a

    @property
    def rows(self) -> int:
        return self.a.shape[0]

    @property
    def cols(self) -> int:
        return self.a.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, Gf2Matrix) and self.a.shape == other.a.shape and bool(
            np.array_equal(self.a, other.a)
        )

    def __hash__(self):
        return hash(("Gf2Matrix", self.a.shape, self.a.tobytes()))

    def __repr__(self) -> str:
        return f"Gf2Matrix({self.rows}x{self.cols})"


def matvec(M: Gf2Matrix, v) -> np.ndarray:
    """Matrix-vector product over GF(2): y[i] = XOR_j M[i,j] & v[j]."""
    vv = as_bit_array(v)
    if vv.size != M.cols:
        raise ValueError(f"vector length {vv.size} does not match matrix columns {M.cols}")
    # accumulate in int64 so arbitrary widths stay exact, then reduce mod 2
    y = M.a.astype(np.int64) @ vv.astype(np.int64)
    return (y & 1).astype(np.uint8)
