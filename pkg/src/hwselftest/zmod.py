"""Arithmetic in the prime field Z_d.

Elements are plain Python integers wrapped with their modulus.  Heavy
numerical code elsewhere works on reduced ints directly; the wrappers here
are the checked public surface.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .errors import NotPrime, UnsupportedDim, ZeroInverse, DimensionMismatch

MAX_D = 1000


def is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeDim:
    """An odd prime dimension d >= 3."""

    d: int

    def __post_init__(self):
        d = self.d
        if isinstance(d, bool) or not isinstance(d, int):
            try:
                d = int(d)
            except (TypeError, ValueError):
                raise NotPrime(f"d must be an odd prime, got {self.d!r}") from None
            if d != self.d:
                raise NotPrime(f"d must be an odd prime, got {self.d!r}")
            object.__setattr__(self, "d", d)
        if not is_odd_prime(d):
            raise NotPrime(f"d must be an odd prime, got {d}")
        if d > MAX_D:
            raise UnsupportedDim(f"d={d} exceeds the supported range (<= {MAX_D})")

    def __int__(self):
        return self.d

    def __index__(self):
        return self.d

    def __call__(self, value: int) -> "FieldElem":
        return FieldElem(value, self)


DimLike = Union[PrimeDim, int]


def as_dim(d: DimLike) -> PrimeDim:
    return d if isinstance(d, PrimeDim) else PrimeDim(d)


@dataclass(frozen=True)
class FieldElem:
    """An element of Z_d, always stored reduced into [0, d)."""

    value: int
    dim: PrimeDim

    def __post_init__(self):
        dim = as_dim(self.dim)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "value", int(self.value) % dim.d)

    @property
    def d(self) -> int:
        return self.dim.d

    def _other(self, other) -> int:
        if isinstance(other, FieldElem):
            if other.dim.d != self.dim.d:
                raise DimensionMismatch(
                    f"cannot combine elements of Z_{self.dim.d} and Z_{other.dim.d}")
            return other.value
        if isinstance(other, int) and not isinstance(other, bool):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElem(self.value + o, self.dim)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElem(self.value - o, self.dim)

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElem(o - self.value, self.dim)

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElem(self.value * o, self.dim)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElem(-self.value, self.dim)

    def __pow__(self, e: int):
        if e < 0:
            return inv(self) ** (-e)
        return FieldElem(pow(self.value, e, self.dim.d), self.dim)

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return self * inv(FieldElem(o, self.dim))

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"FieldElem({self.value} mod {self.dim.d})"


def elem(value, d: DimLike) -> FieldElem:
    """Coerce an int or FieldElem into Z_d."""
    if isinstance(value, FieldElem):
        if value.dim.d != int(d):
            raise DimensionMismatch(f"element of Z_{value.dim.d} used where Z_{int(d)} expected")
        return value
    return FieldElem(int(value), as_dim(d))


def inv(a: FieldElem) -> FieldElem:
    """Multiplicative inverse; raises ZeroInverse for 0."""
    if a.value == 0:
        raise ZeroInverse(f"0 has no inverse in Z_{a.dim.d}")
    return FieldElem(pow(a.value, -1, a.dim.d), a.dim)


def legendre(a: FieldElem) -> int:
    """Legendre symbol (a|d) via Euler's criterion."""
    if a.value == 0:
        return 0
    r = pow(a.value, (a.dim.d - 1) // 2, a.dim.d)
    return 1 if r == 1 else -1


@lru_cache(maxsize=None)
def half(d: int) -> int:
    """The field element 2^{-1} as a reduced int."""
    return pow(2, -1, d)


@lru_cache(maxsize=None)
def canonical_nu_table(d: int) -> tuple:
    """Values 12^{-1}(k - 3k^2 + 2k^3) mod d for k = 0..d-1."""
    if d == 3:
        raise UnsupportedDim("the canonical cubic needs 12 invertible, so d > 3")
    as_dim(d)
    i12 = pow(12, -1, d)
    return tuple((i12 * (k - 3 * k * k + 2 * k ** 3)) % d for k in range(d))


def canonical_nu(k: FieldElem) -> FieldElem:
    return FieldElem(canonical_nu_table(k.dim.d)[k.value], k.dim)


def poly_degree_on_field(values, d: int) -> int:
    """Degree of the unique polynomial of degree < d taking these values.

    Uses cyclic forward differences: a function of degree m has constant,
    nonzero m-th difference (m! is a unit for m < d), so the first order at
    which every difference vanishes is degree + 1.  Returns -1 for the zero
    function.
    """
    v = [int(x) % d for x in values]
    if len(v) != d:
        raise DimensionMismatch(f"expected {d} values, got {len(v)}")
    for order in range(d + 1):
        if all(x == 0 for x in v):
            return order - 1
        v = [(v[(i + 1) % d] - v[i]) % d for i in range(d)]
    return d - 1


def fits_quadratic(values, d: int) -> bool:
    """Interpolate a degree-2 polynomial through k = 0, 1, 2 and test all d points."""
    v = [int(x) % d for x in values]
    i2 = half(d)
    # Newton form through 0, 1, 2
    c0 = v[0]
    c1 = (v[1] - v[0]) % d
    c2 = ((v[2] - 2 * v[1] + v[0]) * i2) % d
    return all((c0 + c1 * k + c2 * k * (k - 1)) % d == v[k] for k in range(d))
