"""Dense Heisenberg-Weyl operators, Bell states and characteristic functions.

Conventions: omega = exp(2 pi i / d), X|k> = |k+1>, Z|k> = omega^k |k>,
T_(x,z) = omega^{2^{-1} x z} X^x Z^z.  Bipartite vectors of length d*d are
indexed row-major, |j>|k> -> j*d + k, so a vector reshapes to a d x d matrix
Psi with (M x N)psi <-> M Psi N^T.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, InvalidNu, UnsupportedDim
from .nuspec import CubicNu, NuSpec, QutritPhases
from .zmod import DimLike, FieldElem, PrimeDim, as_dim, elem, half, legendre


@dataclass(frozen=True)
class PhaseIndex:
    """u = (x, z) in Z_d^2."""

    x: FieldElem
    z: FieldElem

    def __post_init__(self):
        if self.x.dim.d != self.z.dim.d:
            raise DimensionMismatch("x and z live in different fields")

    @classmethod
    def of(cls, d: DimLike, x, z) -> "PhaseIndex":
        return cls(elem(x, d), elem(z, d))

    @property
    def d(self) -> int:
        return self.x.dim.d

    def __iter__(self):
        yield self.x.value
        yield self.z.value


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def roots(d: int) -> np.ndarray:
    """omega^e for e = 0..d-1; index with exponents reduced mod d."""
    return _frozen(np.exp(2j * np.pi * np.arange(d) / d))


def omega_pow(d: int, e: int) -> complex:
    return complex(roots(d)[e % d])


def shift_x(d: DimLike) -> np.ndarray:
    d = as_dim(d).d
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def clock_z(d: DimLike) -> np.ndarray:
    d = as_dim(d).d
    return np.diag(roots(d)).astype(complex)


@lru_cache(maxsize=None)
def _hw(d: int, x: int, z: int) -> np.ndarray:
    x %= d
    z %= d
    # X^x Z^z |k> = omega^{zk} |k + x>
    m = np.zeros((d, d), dtype=complex)
    k = np.arange(d)
    m[(k + x) % d, k] = roots(d)[(z * k) % d]
    return _frozen(omega_pow(d, half(d) * x * z) * m)


def hw(d: int, x: int, z: int) -> np.ndarray:
    """T_(x,z) from plain ints (read-only cached array)."""
    return _hw(d, x % d, z % d)


def displacement(u: PhaseIndex) -> np.ndarray:
    return hw(u.d, u.x.value, u.z.value).copy()


def fourier(d: DimLike) -> np.ndarray:
    d = as_dim(d).d
    jk = np.outer(np.arange(d), np.arange(d)) % d
    return roots(d)[jk] / np.sqrt(d)


def magic_unitary(nu: NuSpec) -> np.ndarray:
    """U_nu = diag(omega^{nu_k})."""
    if isinstance(nu, QutritPhases) or nu.d == 3:
        raise UnsupportedDim("U_nu is defined through a cubic; d = 3 uses qutrit_rotation")
    return np.diag(roots(nu.d)[list(nu.values)])


def qutrit_rotation(nu: QutritPhases) -> np.ndarray:
    """Diagonal rotation that makes A_j = B_j = T_(1,j) optimal for B_3."""
    return np.diag(np.exp(1j * nu.rotation_phases()))


def bell_state(d: DimLike) -> np.ndarray:
    d = as_dim(d).d
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * (d + 1)] = 1 / np.sqrt(d)
    return psi


def rotated_bell_state(nu: NuSpec) -> np.ndarray:
    """(U x 1)|Phi+> with U = U_nu for d > 3 and the qutrit rotation for d = 3.

    For d = 3 this is not the plain Bell state: with ideal operators
    T_(1,j) the plain Bell state only reaches 2 sqrt(3) cos(pi/18) on B_3, and
    the diagonal rotation from ``QutritPhases.rotation_phases`` is what
    attains 6.
    """
    d = nu.d
    psi = bell_state(d)
    psi[np.arange(d) * (d + 1)] *= np.exp(1j * nu.rotation_phases())
    return psi


def _as_state(state, d: int | None = None) -> tuple[np.ndarray, int]:
    v = np.asarray(state, dtype=complex).ravel()
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size or (d is not None and n != d):
        raise DimensionMismatch(f"state of length {v.size} is not d^2 for d={d}")
    return v, n


def char_function(state, u: PhaseIndex, v: PhaseIndex) -> complex:
    """<state| T_u^dag x T_v^dag |state>."""
    if u.d != v.d:
        raise DimensionMismatch("u and v from different fields")
    d = u.d
    psi, _ = _as_state(state, d)
    P = psi.reshape(d, d)
    Tu, Tv = hw(d, *u), hw(d, *v)
    return complex(np.vdot(P, Tu.conj().T @ P @ Tv.conj()))


def char_table(state, d: int) -> np.ndarray:
    """chi[x1, z1, x2, z2] for all d^4 index pairs by direct trace."""
    psi, _ = _as_state(state, d)
    P = psi.reshape(d, d)
    chi = np.empty((d, d, d, d), dtype=complex)
    left = {(x, z): hw(d, x, z).conj().T @ P for x in range(d) for z in range(d)}
    for (x2, z2) in left:
        R = hw(d, x2, z2).conj()
        for (x1, z1), L in left.items():
            chi[x1, z1, x2, z2] = np.vdot(P, L @ R)
    return chi


def gauss_eps(d: int) -> complex:
    """epsilon_d = 1 for d = 1 mod 4 and i for d = 3 mod 4."""
    return 1.0 if d % 4 == 1 else 1j


def char_closed_form(nu: CubicNu, u: PhaseIndex, v: PhaseIndex) -> complex:
    """Closed form of chi on (U_nu x 1)|Phi+> for a cubic nu.

    chi vanishes unless x1 = x2 =: x.  With a = 2^{-1} x and Z = z1 + z2,
    nu(s+a) - nu(s-a) - Zs = alpha s^2 + beta s + c with alpha = 6 a c3,
    beta = 4 a c2 - Z, c = 2 a^3 c3 + 2 a c1, and the quadratic Gauss sum gives
        chi = eps_d / sqrt(d) * (alpha|d) * omega^{c - beta^2 (4 alpha)^{-1}}.
    For the canonical cubic alpha = 2^{-1} x.  At x = 0 the sum is evaluated
    directly (it is the Kronecker delta of Z).
    """
    if isinstance(nu, QutritPhases) or nu.d == 3:
        raise UnsupportedDim("closed form needs d > 3")
    d = nu.d
    if u.d != d or v.d != d:
        raise DimensionMismatch("indices do not match nu's dimension")
    x1, z1 = u
    x2, z2 = v
    if x1 != x2:
        return 0j
    Z = (z1 + z2) % d
    if x1 == 0:
        return 1.0 + 0j if Z == 0 else 0j
    c = list(nu.coeffs) + [0] * max(0, 4 - len(nu.coeffs))
    if any(ci % d for ci in c[4:]):
        raise InvalidNu("closed form is implemented for polynomials of degree <= 3")
    c0, c1, c2, c3 = c[:4]
    a = (half(d) * x1) % d
    alpha = (6 * a * c3) % d
    if alpha == 0:
        raise InvalidNu("cubic coefficient vanishes; no Gauss-sum closed form")
    beta = (4 * a * c2 - Z) % d
    const = (2 * a ** 3 * c3 + 2 * a * c1) % d
    expo = (const - beta * beta * pow(4 * alpha, -1, d)) % d
    leg = legendre(FieldElem(alpha, PrimeDim(d)))
    return complex(gauss_eps(d) / np.sqrt(d) * leg * roots(d)[expo])


def kron_apply(M: np.ndarray, N: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """(M x N) psi without forming the Kronecker product."""
    P = psi.reshape(M.shape[1], N.shape[1])
    return (M @ P @ N.T).ravel()
