"""Bell operators, their coefficient tables and the sum-of-squares witnesses.

Every Bell operator here has the form

    B = sum_{n != 0} sum_{j,k} K[n, j, k] A_j^n x B_k^n,

For d > 3, K[n, j, k] = g(j, k, n) is the characteristic function of the
rotated Bell state at (T_(n,nj), T_(n,nk)):

    g(j, k, n) = (1/d) sum_s omega^{-n(j+k)s + nu(s + 2^{-1}n) - nu(s - 2^{-1}n)}.

For d = 3, K[1, j, k] = exp(i phi_{j,k}) / sqrt(3) and K[2] = conj(K[1]),
which is the "+ h.c." half.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import UnsupportedDim, ZeroN
from .hw_algebra import char_table, hw, rotated_bell_state, roots
from .nuspec import NuSpec, QutritPhases, check_nu
from .zmod import DimLike, as_dim, elem, half


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BellCoeffs:
    """K[n, j, k] for n in Z_d (row n = 0 is identically zero)."""

    d: int
    table: np.ndarray

    def G(self, n: int) -> np.ndarray:
        return self.table[n % self.d]


@lru_cache(maxsize=64)
def bell_coefficients(nu: NuSpec) -> BellCoeffs:
    d = nu.d
    K = np.zeros((d, d, d), dtype=complex)
    if isinstance(nu, QutritPhases):
        K[1] = np.exp(1j * nu.phase_table()) / np.sqrt(3)
        K[2] = K[1].conj()
        return BellCoeffs(d, _frozen(K))
    vals = np.asarray(nu.values)
    h = half(d)
    s = np.arange(d)
    jk = (s[:, None] + s[None, :]) % d
    for n in range(1, d):
        dnu = vals[(s + h * n) % d] - vals[(s - h * n) % d]
        # gm[m] = g for j + k = m
        expo = (-n * np.outer(s, s) + dnu[None, :]) % d
        gm = roots(d)[expo].sum(axis=1) / d
        K[n] = gm[jk]
    return BellCoeffs(d, _frozen(K))


def g_coeff(j, k, n, nu: NuSpec) -> complex:
    """g(j, k, n) for d > 3."""
    if isinstance(nu, QutritPhases):
        raise UnsupportedDim("g is defined for d > 3")
    d = nu.d
    j, k, n = (elem(t, d).value for t in (j, k, n))
    if n == 0:
        raise ZeroN("g(j, k, n) needs n != 0")
    return complex(bell_coefficients(nu).table[n, j, k])


def g_unitarity(nu: NuSpec) -> float:
    """max_n || G_n G_n^dag - I ||_max."""
    K = bell_coefficients(nu).table
    d = nu.d
    eye = np.eye(d)
    return max(float(np.max(np.abs(K[n] @ K[n].conj().T - eye))) for n in range(1, d))


def gamma_nu(nu: NuSpec) -> float:
    """sup of ||P_{n,j}|| = ||sum_k K[n,j,k] B_k^n|| over unitary families.

    The triangle inequality gives sum_k |K[n,j,k]| and scalar unitaries
    aligned with the phases of K attain it, so this is the exact supremum.
    """
    K = bell_coefficients(nu).table
    return float(np.abs(K[1:]).sum(axis=2).max())


def op_powers(ops: Sequence[np.ndarray], d: int) -> np.ndarray:
    """pw[i, n] = ops[i]^n for n = 0..d-1."""
    ops = [np.asarray(o, dtype=complex) for o in ops]
    D = ops[0].shape[0]
    pw = np.empty((len(ops), d, D, D), dtype=complex)
    for i, o in enumerate(ops):
        pw[i, 0] = np.eye(D)
        for n in range(1, d):
            pw[i, n] = pw[i, n - 1] @ o
    return pw


def ideal_ops(d: int) -> list:
    return [hw(d, 1, j) for j in range(d)]


def p_operators(coeffs: BellCoeffs, B_pw: np.ndarray) -> np.ndarray:
    """P[n, j] = sum_k K[n, j, k] B_k^n."""
    return np.einsum("njk,knab->njab", coeffs.table, B_pw)


def bell_operator(nu: NuSpec, A_ops, B_ops) -> np.ndarray:
    """The Bell operator for arbitrary observable families, as a dense matrix."""
    d = nu.d
    K = bell_coefficients(nu)
    Apw, Bpw = op_powers(A_ops, d), op_powers(B_ops, d)
    P = p_operators(K, Bpw)
    DA, DB = Apw.shape[-1], Bpw.shape[-1]
    out = np.zeros((DA * DB, DA * DB), dtype=complex)
    for n in range(1, d):
        for j in range(d):
            out += np.kron(Apw[j, n], P[n, j])
    return out


def s_operator(d: DimLike) -> np.ndarray:
    """S = sum_{j != 0} T_(0,j) x T_(0,-j)."""
    d = as_dim(d).d
    return sum(np.kron(hw(d, 0, j), hw(d, 0, -j)) for j in range(1, d))


@dataclass(frozen=True)
class BellOperatorSet:
    d: int
    nu: NuSpec
    B_d: np.ndarray
    S: np.ndarray
    B_full: np.ndarray
    coeffs: BellCoeffs
    phases: Optional[np.ndarray] = None


def build_bell(d: DimLike, nu: NuSpec) -> BellOperatorSet:
    """Ideal-representation Bell operators with A_j = B_j = T_(1,j)."""
    d = as_dim(d).d
    check_nu(d, nu)
    ops = ideal_ops(d)
    Bd = bell_operator(nu, ops, ops)
    S = s_operator(d)
    full = np.eye(d * d) + S + Bd
    phases = nu.phase_table() if isinstance(nu, QutritPhases) else None
    return BellOperatorSet(d, nu, _frozen(Bd), _frozen(S), _frozen(full),
                           bell_coefficients(nu), phases)


def build_full_bell_from_chi(d: DimLike, nu: NuSpec) -> np.ndarray:
    """sum_{u,v} chi_{u,v} T_u x T_v over all d^4 pairs, chi by direct trace."""
    d = as_dim(d).d
    if d == 3:
        raise UnsupportedDim("the characteristic-function construction needs d > 3")
    check_nu(d, nu)
    chi = char_table(rotated_bell_state(nu), d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for x1, z1, x2, z2 in itertools.product(range(d), repeat=4):
        out += chi[x1, z1, x2, z2] * np.kron(hw(d, x1, z1), hw(d, x2, z2))
    return out


class SopoTerm(NamedTuple):
    n: int
    j: int
    C: np.ndarray
    D: np.ndarray


def sopo_ops(d: DimLike, nu: NuSpec, A_ops=None, B_ops=None, ns=None) -> list:
    """C_{n,j} and D_{n,j} on H_A x H_B for n = 1..(d-1)/2.

    C_{n,j} = A_j^n - sum_k conj(K[n,j,k]) (B_k^n)^dag
    D_{n,j} = B_j^n - sum_k conj(K[n,k,j]) (A_k^n)^dag
    Defaults to the ideal operators T_(1,j).  ``ns`` overrides the n range.
    """
    d = as_dim(d).d
    check_nu(d, nu)
    A_ops = ideal_ops(d) if A_ops is None else A_ops
    B_ops = ideal_ops(d) if B_ops is None else B_ops
    K = bell_coefficients(nu).table
    Apw, Bpw = op_powers(A_ops, d), op_powers(B_ops, d)
    IA, IB = np.eye(Apw.shape[-1]), np.eye(Bpw.shape[-1])
    Bdag = Bpw.conj().swapaxes(-1, -2)
    Adag = Apw.conj().swapaxes(-1, -2)
    ns = range(1, (d - 1) // 2 + 1) if ns is None else ns
    out = []
    for n in ns:
        for j in range(d):
            cb = np.einsum("k,kab->ab", K[n, j].conj(), Bdag[:, n])
            da = np.einsum("k,kab->ab", K[n, :, j].conj(), Adag[:, n])
            C = np.kron(Apw[j, n], IB) - np.kron(IA, cb)
            D = np.kron(IA, Bpw[j, n]) - np.kron(da, IB)
            out.append(SopoTerm(n, j, C, D))
    return out


def sopo_residual(d: DimLike, nu: NuSpec, A_ops=None, B_ops=None) -> tuple:
    """Max-entry norms of d(d-1) I - B - sum C^dag C and of the D analog."""
    d = as_dim(d).d
    A_ops = ideal_ops(d) if A_ops is None else A_ops
    B_ops = ideal_ops(d) if B_ops is None else B_ops
    B = bell_operator(nu, A_ops, B_ops)
    target = d * (d - 1) * np.eye(B.shape[0]) - B
    sc = sum(t.C.conj().T @ t.C for t in sopo_ops(d, nu, A_ops, B_ops))
    sd = sum(t.D.conj().T @ t.D for t in sopo_ops(d, nu, A_ops, B_ops))
    return float(np.max(np.abs(target - sc))), float(np.max(np.abs(target - sd)))


def folding_check(d: DimLike, nu: NuSpec, trials: Optional[int] = None, seed: int = 0) -> float:
    """Max violation of the quadratic folding identity

        g(j,k,n+n') = sum_r g(j,k+n'r,n) g(j,k-nr,n') omega^{2^{-1} n n'(n+n') r}

    over all tuples with n, n', n+n' != 0, or over ``trials`` random tuples.
    """
    d = as_dim(d).d
    if d == 3:
        raise UnsupportedDim("folding identity is stated for d > 3")
    check_nu(d, nu)
    K = bell_coefficients(nu).table
    h = half(d)
    r = np.arange(d)
    if trials is None:
        tuples = [(j, k, n, m) for j, k in itertools.product(range(d), repeat=2)
                  for n in range(1, d) for m in range(1, d) if (n + m) % d]
    else:
        rng = np.random.default_rng(seed)
        tuples = []
        while len(tuples) < trials:
            j, k, n, m = (int(t) for t in rng.integers(0, d, 4))
            if n and m and (n + m) % d:
                tuples.append((j, k, n, m))
    worst = 0.0
    for j, k, n, m in tuples:
        lhs = K[(n + m) % d, j, k]
        rhs = np.sum(K[n, j, (k + m * r) % d] * K[m, j, (k - n * r) % d]
                     * roots(d)[(h * n * m * (n + m) * r) % d])
        worst = max(worst, abs(lhs - rhs))
    return float(worst)


def diagonal_projection_norm(B: np.ndarray, d: int) -> float:
    """Frobenius norm of the component of B along span{Z^a x Z^b}."""
    tot = 0.0
    for a in range(d):
        for b in range(d):
            Zab = np.kron(hw(d, 0, a), hw(d, 0, b))
            c = np.trace(Zab.conj().T @ B) / (d * d)
            tot += abs(c) ** 2
    return math.sqrt(tot) * d


def max_eigenvalue(B: np.ndarray) -> float:
    H = (B + B.conj().T) / 2
    return float(np.linalg.eigvalsh(H)[-1])


def qutrit_phase_solve(orientation: int = 1) -> QutritPhases:
    """Solve 1 - sqrt(3) e^{3 i phi1} = omega^o and phi1 - phi2 = +-2pi/3.

    e^{3 i phi1} = (1 - omega^o)/sqrt(3) is unimodular, so phi1 is a third
    of its argument (principal branch); the result is exact in units of pi.
    """
    w = cmath.exp(2j * math.pi * orientation / 3)
    z = (1 - w) / math.sqrt(3)
    arg = Fraction(cmath.phase(z) / math.pi).limit_denominator(72)
    phi1 = arg / 3
    phi2 = phi1 - (Fraction(2, 3) if orientation == 1 else Fraction(-2, 3))
    nu = QutritPhases(phi1, phi2, orientation)
    w_err = abs(1 - math.sqrt(3) * cmath.exp(3j * nu.phi1) - w)
    if w_err > 1e-12:
        raise ArithmeticError(f"qutrit phase constraint off by {w_err:.3g}")
    return nu
