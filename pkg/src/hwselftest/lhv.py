"""Classical (local deterministic) bounds of the Bell operators.

A deterministic point assigns outcome exponents a_j, b_k in Z_d, and
A_j^n x B_k^n becomes omega^{n(a_j + b_k)}.  For fixed a the value splits
into independent per-k terms, so Bob's best response is exact and cheap.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bell_op import bell_coefficients
from .errors import InfeasibleMethod, SpecMismatch
from .hw_algebra import roots
from .nuspec import NuSpec, check_nu
from .zmod import DimLike, as_dim

METHODS = ("exhaustive", "best_response_exhaustive", "sampled")
TIE_TOL = 1e-12
MAX_POINTS = 10 ** 8
BLOCK = 1 << 17


@dataclass(frozen=True)
class Assignment:
    a: tuple
    b: tuple
    d: int

    def __post_init__(self):
        for name in ("a", "b"):
            v = tuple(int(x) for x in getattr(self, name))
            if len(v) != self.d or any(not 0 <= x < self.d for x in v):
                raise ValueError(f"{name} must hold {self.d} entries in [0, {self.d})")
            object.__setattr__(self, name, v)

    def shifted(self, c: int) -> "Assignment":
        """a_j + c, b_k - c: leaves every correlator unchanged."""
        d = self.d
        return Assignment(tuple((x + c) % d for x in self.a), tuple((x - c) % d for x in self.b), d)


@dataclass(frozen=True)
class LhvCertificate:
    d: int
    nu_id: str
    best_value: float
    best_assignment: Assignment
    method: str
    assignments_examined: int
    quantum_value: float
    gap: float

    @property
    def exhaustive(self) -> bool:
        return self.method != "sampled"

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "nu_id": self.nu_id,
            "best_value": self.best_value,
            "best_assignment": {"a": list(self.best_assignment.a), "b": list(self.best_assignment.b)},
            "method": self.method,
            "assignments_examined": self.assignments_examined,
            "quantum_value": self.quantum_value,
            "gap": self.gap,
        }


CSV_HEADER = ("d", "method", "best_value", "quantum_value", "gap", "assignments_examined", "seed")


def csv_row(cert: LhvCertificate, seed: Optional[int]) -> list:
    return [cert.d, cert.method, cert.best_value, cert.quantum_value, cert.gap,
            cert.assignments_examined, "" if seed is None else seed]


def lhv_terms(assign: Assignment, nu: NuSpec) -> np.ndarray:
    d = nu.d
    K = bell_coefficients(nu).table
    a, b = np.array(assign.a), np.array(assign.b)
    n = np.arange(d)[:, None, None]
    return K * roots(d)[(n * (a[None, :, None] + b[None, None, :])) % d]


def lhv_value(assign: Assignment, nu: NuSpec) -> float:
    """Re sum_{n != 0} sum_{j,k} K[n,j,k] omega^{n(a_j + b_k)}, compensated sum."""
    if assign.d != nu.d:
        raise SpecMismatch("assignment and phases have different d")
    t = lhv_terms(assign, nu).ravel()
    imag = math.fsum(t.imag)
    if abs(imag) > 1e-10:
        raise ArithmeticError(f"deterministic value has imaginary part {imag:.3g}")
    return math.fsum(t.real)


def _threads() -> int:
    env = os.environ.get("SELFTEST_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _digits(idx: np.ndarray, d: int) -> np.ndarray:
    """Lexicographic enumeration: index -> base-d digits, most significant first."""
    pw = d ** np.arange(d - 1, -1, -1)
    return (idx[:, None] // pw[None, :]) % d


def _bob_table(K: np.ndarray, A: np.ndarray) -> np.ndarray:
    """V[m, k, b] = Re sum_{n,j} K[n,j,k] omega^{n(a_j + b)} for each row a of A."""
    d = K.shape[0]
    w = roots(d)
    n = np.arange(d)
    E = w[(n[None, :, None] * A[:, None, :]) % d]          # (M, n, j)
    F = np.matmul(E.transpose(1, 0, 2), K)                  # (n, M, k)
    W = w[np.outer(n, n) % d]                               # (n, b)
    return np.matmul(F.transpose(1, 2, 0), W).real


def _first_max(v: np.ndarray) -> int:
    return int(np.flatnonzero(v >= v.max() - TIE_TOL)[0])


def _block_best_response(K, start, stop):
    d = K.shape[0]
    A = _digits(np.arange(start, stop), d)
    V = _bob_table(K, A)
    best_b = np.argmax(V >= V.max(axis=2, keepdims=True) - TIE_TOL, axis=2)
    vals = np.take_along_axis(V, best_b[..., None], axis=2)[..., 0].sum(axis=1)
    i = _first_max(vals)
    return float(vals[i]), tuple(A[i]), tuple(best_b[i])


def _block_exhaustive(K, start, stop):
    d = K.shape[0]
    A = _digits(np.arange(start, stop), d)
    V = _bob_table(K, A)
    # total[m, b_0..b_{d-1}] built by broadcasting, flattened lexicographically in b
    tot = np.zeros((len(A),) + (1,) * d)
    for k in range(d):
        shape = [len(A)] + [1] * d
        shape[1 + k] = d
        tot = tot + V[:, k, :].reshape(shape)
    flat = tot.reshape(len(A), -1).ravel()
    i = _first_max(flat)
    m, bi = divmod(i, d ** d)
    return float(flat[i]), tuple(A[m]), tuple(_digits(np.array([bi]), d)[0])


def _enumerate(K, worker, per_a: int):
    d = K.shape[0]
    total = d ** d
    step = max(1, BLOCK // per_a)
    blocks = [(s, min(s + step, total)) for s in range(0, total, step)]
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        results = list(ex.map(lambda se: worker(K, *se), blocks))
    # fixed block order + first-within-tolerance keeps the lexicographic tie-break
    gmax = max(r[0] for r in results)
    for r in results:
        if r[0] >= gmax - TIE_TOL:
            return r
    raise AssertionError("unreachable")


def _best_response_a(K, b):
    """Alice's exact best response to Bob's b (same decomposition, roles swapped)."""
    return _bob_table(K.transpose(0, 2, 1), b[None, :])[0]


def _local_search(K, rng, starts: int):
    d = K.shape[0]
    best = (-math.inf, None, None)
    examined = 0
    for _ in range(starts):
        a = rng.integers(0, d, d)
        val = -math.inf
        while True:
            V = _bob_table(K, a[None, :])[0]
            b = np.array([_first_max(V[k]) for k in range(d)])
            U = _best_response_a(K, b)
            a_new = np.array([_first_max(U[j]) for j in range(d)])
            new = float(U[np.arange(d), a_new].sum())
            examined += 2 * d * d
            if new <= val + TIE_TOL:
                break
            a, val = a_new, new
        cand = (val, tuple(a), tuple(b))
        if cand[0] > best[0] + TIE_TOL or (abs(cand[0] - best[0]) <= TIE_TOL and cand[1:] < best[1:]):
            best = cand
    return best, examined


def default_method(d: int) -> str:
    if d == 3:
        return "exhaustive"
    if d ** d <= MAX_POINTS:
        return "best_response_exhaustive"
    return "sampled"


def lhv_bound(d: DimLike, nu: NuSpec, method: Optional[str] = None, seed: int = 0,
              starts: int = 64) -> LhvCertificate:
    """Classical maximum of the Bell operator B_d (B_3 for d = 3).

    ``exhaustive`` scans all d^{2d} points, ``best_response_exhaustive``
    scans Alice's d^d points with Bob's exact best response (both exact),
    ``sampled`` runs seeded multi-start alternating best responses and gives
    a lower bound only.
    """
    d = as_dim(d).d
    check_nu(d, nu)
    method = default_method(d) if method is None else method
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    K = np.ascontiguousarray(bell_coefficients(nu).table)
    if method == "exhaustive":
        if d ** (2 * d) > MAX_POINTS:
            raise InfeasibleMethod(f"exhaustive search over {d}^{2 * d} points is infeasible")
        _, a, b = _enumerate(K, _block_exhaustive, d ** d)
        examined = d ** (2 * d)
    elif method == "best_response_exhaustive":
        if d ** d > MAX_POINTS:
            raise InfeasibleMethod(f"best-response search over {d}^{d} points is infeasible")
        _, a, b = _enumerate(K, _block_best_response, d * d)
        examined = d ** d
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        (_, a, b), examined = _local_search(K, rng, starts)
    assign = Assignment(a, b, d)
    best = lhv_value(assign, nu)
    q = float(d * (d - 1))
    return LhvCertificate(d, nu.ident, best, assign, method, int(examined), q, q - best)


def full_lhv_bound(cert: LhvCertificate) -> float:
    """Classical bound of 1 + S + B_d: S has its own Z-basis settings and
    reaches d - 1 classically, so the bound is best_value + d."""
    return cert.best_value + cert.d
