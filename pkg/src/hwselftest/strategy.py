"""Quantum strategies, their Bell values, seeded noise and robustness residuals."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .bell_op import bell_coefficients, gamma_nu, ideal_ops, op_powers, p_operators
from .errors import (ConventionUnresolvable, DimensionMismatch, InvalidStrategy,
                     SpecMismatch, WrongDim)
from .hw_algebra import roots, rotated_bell_state
from .nuspec import NuSpec, QutritPhases, check_nu, default_nu
from .zmod import DimLike, as_dim, half

log = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
ORDER_TOL = 1e-9
NORM_TOL = 1e-10
FLAG_TOL = 1e-9
QUTRIT_C = math.sqrt(3) + 2
NOISE_KINDS = ("state_perturbation", "observable_conjugation", "both")


def _frozen_copy(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Strategy:
    """State psi on H_A x H_B and order-d unitary families A_j, B_k.

    ``convention`` records how Bob's operators relate to the ideal
    representation ("standard" or "bob_conjugated").
    """

    d: int
    psi: np.ndarray
    A: tuple
    B: tuple
    convention: str = "standard"

    def __post_init__(self):
        d = as_dim(self.d).d
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "A", tuple(_frozen_copy(a) for a in self.A))
        object.__setattr__(self, "B", tuple(_frozen_copy(b) for b in self.B))
        object.__setattr__(self, "psi", _frozen_copy(self.psi).ravel())
        for name, ops in (("A", self.A), ("B", self.B)):
            if len(ops) != d:
                raise InvalidStrategy(f"{name} needs {d} observables, got {len(ops)}")
            D = ops[0].shape[0]
            for i, o in enumerate(ops):
                if o.shape != (D, D):
                    raise DimensionMismatch(f"{name}[{i}] has shape {o.shape}, expected {(D, D)}")
                if np.max(np.abs(o.conj().T @ o - np.eye(D))) > UNITARY_TOL:
                    raise InvalidStrategy(f"{name}[{i}] is not unitary")
                if np.max(np.abs(np.linalg.matrix_power(o, d) - np.eye(D))) > ORDER_TOL:
                    raise InvalidStrategy(f"{name}[{i}]^{d} != I")
        if self.psi.size != self.dim_A * self.dim_B:
            raise DimensionMismatch(
                f"psi has length {self.psi.size}, expected {self.dim_A}*{self.dim_B}")
        if abs(np.linalg.norm(self.psi) - 1) > NORM_TOL:
            raise InvalidStrategy("psi is not normalized")

    @property
    def dim_A(self) -> int:
        return self.A[0].shape[0]

    @property
    def dim_B(self) -> int:
        return self.B[0].shape[0]

    @property
    def Psi(self) -> np.ndarray:
        """psi as a dim_A x dim_B matrix."""
        return self.psi.reshape(self.dim_A, self.dim_B)

    # JSON: {"d", "psi": [[re, im], ...], "A": [[[re, im], ...], ...], "B": ...}
    def to_json(self) -> dict:
        pair = lambda z: [float(z.real), float(z.imag)]
        return {
            "d": self.d,
            "psi": [pair(z) for z in self.psi],
            "A": [[pair(z) for z in a.ravel()] for a in self.A],
            "B": [[pair(z) for z in b.ravel()] for b in self.B],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Strategy":
        try:
            d = int(obj["d"])
            psi = _complex_list(obj["psi"])
            A = [_square(_complex_list(a)) for a in obj["A"]]
            B = [_square(_complex_list(b)) for b in obj["B"]]
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidStrategy(f"malformed strategy JSON: {e}") from None
        return cls(d, psi, tuple(A), tuple(B))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "Strategy":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidStrategy(f"cannot read strategy file {path}: {e}") from None
        return cls.from_json(obj)


def _complex_list(pairs) -> np.ndarray:
    a = np.asarray(pairs, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError("expected a list of [re, im] pairs")
    return a[:, 0] + 1j * a[:, 1]


def _square(flat: np.ndarray) -> np.ndarray:
    n = int(round(math.sqrt(flat.size)))
    if n * n != flat.size:
        raise ValueError(f"operator with {flat.size} entries is not square")
    return flat.reshape(n, n)


def bell_expectation(s: Strategy, nu: NuSpec) -> complex:
    """<psi| B |psi> for the strategy's own observables, as a complex number."""
    if s.d != nu.d:
        raise SpecMismatch(f"strategy has d={s.d}, phases have d={nu.d}")
    d = s.d
    Apw, Bpw = op_powers(s.A, d), op_powers(s.B, d)
    P = p_operators(bell_coefficients(nu), Bpw)
    Psi = s.Psi
    # <psi|(M x N)|psi> = sum conj(Psi) * (M Psi N^T)
    tot = 0j
    for n in range(1, d):
        X = np.einsum("jab,bc,jdc->jad", Apw[:, n], Psi, P[n])
        tot += np.vdot(np.broadcast_to(Psi, X.shape), X)
    return complex(tot)


def bell_value(s: Strategy, nu: NuSpec) -> float:
    val = bell_expectation(s, nu)
    if abs(val.imag) > 1e-9:
        log.warning("Bell value has imaginary part %.3g", val.imag)
    return float(val.real)


def tsirelson(d: int) -> float:
    return float(d * (d - 1))


def ideal_strategy(d: DimLike, nu: Optional[NuSpec] = None) -> Strategy:
    """psi = rotated Bell state, A_j = B_j = T_(1,j).

    If the value misses d(d-1), Bob's operators are complex-conjugated and
    the convention is recorded; if neither works the phases are rejected.
    """
    d = as_dim(d).d
    nu = default_nu(d) if nu is None else nu
    check_nu(d, nu)
    psi = rotated_bell_state(nu)
    ops = ideal_ops(d)
    s = Strategy(d, psi, tuple(ops), tuple(ops))
    if abs(bell_value(s, nu) - tsirelson(d)) <= 1e-6:
        return s
    s = Strategy(d, psi, tuple(ops), tuple(o.conj() for o in ops), "bob_conjugated")
    if abs(bell_value(s, nu) - tsirelson(d)) <= 1e-6:
        return s
    raise ConventionUnresolvable(f"ideal operators do not reach {d * (d - 1)} for {nu.ident}")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "both"
    magnitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
        if not (self.magnitude >= 0 and math.isfinite(self.magnitude)):
            raise ValueError("noise magnitude must be finite and >= 0")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


def random_hermitian(rng: np.random.Generator, D: int, norm: float) -> np.ndarray:
    G = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    H = (G + G.conj().T) / 2
    return H * (norm / np.linalg.norm(H, 2))


def expi_hermitian(H: np.ndarray) -> np.ndarray:
    """exp(iH) through the eigendecomposition of a Hermitian H."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * w)) @ V.conj().T


def perturb(s: Strategy, noise: NoiseSpec) -> Strategy:
    """Seeded perturbation of a strategy.

    All draws come from numpy's PCG64 generator seeded with ``noise.seed``,
    in the fixed order A_0..A_{d-1}, B_0..B_{d-1}, then the state.
    Observables become e^{iH} O e^{-iH} with ||H|| = magnitude; the state
    becomes normalize(psi + magnitude * eta) with eta a random unit vector.
    """
    if noise.magnitude == 0:
        return s
    rng = np.random.Generator(np.random.PCG64(int(noise.seed)))
    A, B, psi = s.A, s.B, s.psi
    if noise.kind in ("observable_conjugation", "both"):
        def conj(op):
            U = expi_hermitian(random_hermitian(rng, op.shape[0], noise.magnitude))
            return U @ op @ U.conj().T
        A = tuple(conj(a) for a in A)
        B = tuple(conj(b) for b in B)
    if noise.kind in ("state_perturbation", "both"):
        eta = rng.standard_normal(psi.size) + 1j * rng.standard_normal(psi.size)
        eta /= np.linalg.norm(eta)
        psi = psi + noise.magnitude * eta
        psi = psi / np.linalg.norm(psi)
    return Strategy(s.d, psi, A, B, s.convention)


def _left_state(s: Strategy, party: str) -> np.ndarray:
    # (M x 1)psi <-> M Psi, (1 x M)psi <-> (M Psi^T)^T; norms agree
    return s.Psi if party == "A" else s.Psi.T


def _party_ops(s: Strategy, party: str):
    return s.A if party == "A" else s.B


@dataclass
class ResidualReport:
    """Self-testing residuals of a strategy.

    ``gamma`` is gamma(nu), the supremum of ||P_{n,j}|| over all unitary
    families, which is what enters the bounds; ``p_norm_max`` is the
    largest ||P_{n,j}|| for this strategy's operators.
    """

    d: int
    epsilon: float
    bell_value: float
    bell_imag: float
    c_norms: dict
    d_norms: dict
    pair_residuals: dict
    commutation_residuals: dict
    gamma: float
    p_norm_max: float
    thresholds: dict
    bound_checks: dict

    @property
    def max_c_norm(self) -> float:
        return max(max(self.c_norms.values()), max(self.d_norms.values()))

    @property
    def all_ok(self) -> bool:
        return all(self.bound_checks.values())

    def to_dict(self) -> dict:
        def recs(dct, keys):
            return [dict(zip(keys, k), value=v) for k, v in dct.items()]
        return {
            "d": self.d,
            "epsilon": self.epsilon,
            "bell_value": self.bell_value,
            "bell_imag": self.bell_imag,
            "gamma": self.gamma,
            "p_norm_max": self.p_norm_max,
            "max_c_norm": self.max_c_norm,
            "c_norms": recs(self.c_norms, ("n", "j")),
            "d_norms": recs(self.d_norms, ("n", "j")),
            "max_pair_residual": {p: max(v.values(), default=0.0) for p, v in self.pair_residuals.items()},
            "max_commutation_residual": {p: max(v.values(), default=0.0)
                                         for p, v in self.commutation_residuals.items()},
            "thresholds": self.thresholds,
            "bound_checks": self.bound_checks,
        }


def c_norms(s: Strategy, nu: NuSpec) -> tuple[dict, dict]:
    """||C_{n,j} psi|| and ||D_{n,j} psi|| for every n != 0 and j."""
    d = s.d
    K = bell_coefficients(nu).table
    Apw, Bpw = op_powers(s.A, d), op_powers(s.B, d)
    Psi = s.Psi
    cn, dn = {}, {}
    for n in range(1, d):
        for j in range(d):
            cb = np.einsum("k,kab->ab", K[n, j].conj(), Bpw[:, n].conj().swapaxes(-1, -2))
            vec = Apw[j, n] @ Psi - Psi @ cb.T
            cn[(n, j)] = float(np.linalg.norm(vec))
            da = np.einsum("k,kab->ab", K[n, :, j].conj(), Apw[:, n].conj().swapaxes(-1, -2))
            vec = Psi @ Bpw[j, n].T - da @ Psi
            dn[(n, j)] = float(np.linalg.norm(vec))
    return cn, dn


def twisted_residuals(s: Strategy, party: str) -> tuple[dict, dict]:
    """Twisted-relation residuals for one party, keyed (k, l, n, n').

    pair: ||(O_k^n O_l^{n'} - omega^{2^{-1} n n'(k-l)} O_m^{n+n'}) psi||,
          m = (n+n')^{-1}(nk + n'l)
    comm: ||(O_k^n O_l^{n'} - omega^{n n'(k-l)} O_l^{n'} O_k^n) psi||
    """
    d = s.d
    pw = op_powers(_party_ops(s, party), d)
    X = _left_state(s, party)
    h = half(d)
    w = roots(d)
    k = np.arange(d)
    pair, comm = {}, {}
    for n in range(1, d):
        Yn = pw[:, n] @ X
        for m_ in range(1, d):
            t = (n + m_) % d
            if t == 0:
                continue
            Ym = pw[:, m_] @ X
            KL = np.einsum("kab,lbx->klax", pw[:, n], Ym)   # O_k^n O_l^m X
            LK = np.einsum("lab,kbx->klax", pw[:, m_], Yn)  # O_l^m O_k^n X
            tinv = pow(t, -1, d)
            idx = (tinv * (n * k[:, None] + m_ * k[None, :])) % d
            target = (pw[:, t] @ X)[idx]
            kl = (k[:, None] - k[None, :]) % d
            ph_pair = w[(h * n * m_ * kl) % d][..., None, None]
            ph_comm = w[(n * m_ * kl) % d][..., None, None]
            rp = np.linalg.norm(KL - ph_pair * target, axis=(2, 3))
            rc = np.linalg.norm(KL - ph_comm * LK, axis=(2, 3))
            for a in range(d):
                for b in range(d):
                    pair[(a, b, n, m_)] = float(rp[a, b])
                    comm[(a, b, n, m_)] = float(rc[a, b])
    return pair, comm


def p_norm_max(s: Strategy, nu: NuSpec) -> float:
    P = p_operators(bell_coefficients(nu), op_powers(s.B, s.d))
    return float(max(np.linalg.norm(P[n, j], 2) for n in range(1, s.d) for j in range(s.d)))


def residuals(s: Strategy, nu: NuSpec) -> ResidualReport:
    """epsilon, C/D norms, twisted-relation residuals for both parties and bound flags.

    Bounds with e = sqrt(max(epsilon, 0)) and gamma = gamma(nu):
      ||C_{n,j} psi||, ||D_{n,j} psi|| <= e
      pair residual                    <= sqrt(d) e (gamma + 2)
      commutator residual              <= 2 sqrt(d) e (gamma + 2)
    The twisted relations are only part of the d > 3 argument; for d = 3
    they are left empty (see ``qutrit_q_elements``).
    """
    d = s.d
    check_nu(d, nu)
    val = bell_expectation(s, nu)
    eps = tsirelson(d) - val.real
    e = math.sqrt(max(eps, 0.0))
    cn, dn = c_norms(s, nu)
    gam = gamma_nu(nu)
    thr = {"c_norm": e, "pair": math.sqrt(d) * e * (gam + 2),
           "commutator": 2 * math.sqrt(d) * e * (gam + 2)}
    pair, comm = {}, {}
    checks = {"epsilon_nonnegative": eps >= -1e-9,
              "c_norm": max(max(cn.values()), max(dn.values())) <= thr["c_norm"] + FLAG_TOL}
    if d > 3:
        for party in ("A", "B"):
            pair[party], comm[party] = twisted_residuals(s, party)
            checks[f"pair_{party}"] = max(pair[party].values()) <= thr["pair"] + FLAG_TOL
            checks[f"commutator_{party}"] = max(comm[party].values()) <= thr["commutator"] + FLAG_TOL
    return ResidualReport(d, float(eps), float(val.real), float(val.imag), cn, dn, pair, comm,
                          gam, p_norm_max(s, nu), thr, checks)


def qutrit_regime_limit() -> float:
    """The qutrit robustness statement assumes epsilon < (72(sqrt3 + 2))^-2."""
    return (72 * QUTRIT_C) ** -2


@dataclass
class QutritReport:
    """Qutrit residuals for d = 3, per party.

    Q = O_0 O_1 O_0^2 O_1^2, Q' = O_1 O_2 O_1^2 O_2^2, Q'' = O_2 O_0 O_2^2 O_0^2.
    ``k_star`` is the k in {1, 2} minimising ||(Q - omega^k) psi||; for
    T_(1,j) observables Q = omega^{-1}, i.e. k_star = 2.
    """

    epsilon: float
    in_regime: bool
    k_star: dict
    residuals: dict
    thresholds: dict
    bound_checks: dict

    @property
    def all_ok(self) -> bool:
        return all(self.bound_checks.values())

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "in_regime": self.in_regime, "k_star": self.k_star,
                "residuals": self.residuals, "thresholds": self.thresholds,
                "bound_checks": self.bound_checks}


def qutrit_q_elements(s: Strategy, nu: Optional[QutritPhases] = None) -> QutritReport:
    if s.d != 3:
        raise WrongDim("commutation elements Q are defined for d = 3")
    nu = default_nu(3) if nu is None else nu
    eps = tsirelson(3) - bell_value(s, nu)
    e = math.sqrt(max(eps, 0.0))
    c = QUTRIT_C
    w = roots(3)
    thr = {"anticommutator": 3 * e * c, "q_eigen": 36 * e * c, "q_cube": 36 * e * c,
           "q_pairwise": 9 * e * c, "q_commutator": 12 * e * c, "q_plus_qdag": 6 * e * c,
           "twisted": 9 * e * c}
    res, kstar, checks = {}, {}, {}
    for party in ("A", "B"):
        O = [np.asarray(o) for o in _party_ops(s, party)]
        X = _left_state(s, party)
        I = np.eye(O[0].shape[0])
        nrm = lambda M: float(np.linalg.norm(M @ X))
        sq = [o @ o for o in O]
        r = {}
        r["anticommutator"] = max(
            max(nrm(sq[a] @ sq[b] + sq[b] @ sq[a] + O[c_]),
                nrm(O[a] @ O[b] + O[b] @ O[a] + sq[c_]))
            for a, b, c_ in ((0, 1, 2), (1, 2, 0), (2, 0, 1)))
        Qs = [O[a] @ O[b] @ sq[a] @ sq[b] for a, b in ((0, 1), (1, 2), (2, 0))]
        dist = {k: nrm(Qs[0] - w[k] * I) for k in (1, 2)}
        ks = min(dist, key=lambda k: (dist[k], k))
        kstar[party] = ks
        r["q_eigen"] = dist[ks]
        r["q_cube"] = nrm(Qs[0] @ Qs[0] @ Qs[0] - I)
        r["q_pairwise"] = max(nrm(Qs[a] - Qs[b]) for a, b in ((0, 1), (1, 2), (0, 2)))
        r["q_commutator"] = max(nrm(o @ Qs[0] - Qs[0] @ o) for o in O)
        r["q_plus_qdag"] = nrm(Qs[0] + Qs[0].conj().T + I)
        r["twisted"] = max(nrm(O[a] @ O[(a + 1) % 3] - w[ks] * O[(a + 1) % 3] @ O[a])
                           for a in range(3))
        res[party] = r
        for name, v in r.items():
            checks[f"{name}_{party}"] = v <= thr[name] + FLAG_TOL
    return QutritReport(float(eps), eps < qutrit_regime_limit(), kstar, res, thr, checks)


def block_embedded_strategy(d: DimLike, nu: Optional[NuSpec] = None, extra: int = 1,
                            seed: int = 0) -> Strategy:
    """Ideal strategy embedded in dimension (1 + extra) d per party.

    Observables are T_(1,j) (+) W_j with W_j random order-d unitaries on the
    complement; the state is the ideal one inside the T-blocks.
    """
    d = as_dim(d).d
    nu = default_nu(d) if nu is None else nu
    base = ideal_strategy(d, nu)
    rng = np.random.Generator(np.random.PCG64(seed))
    m = extra * d

    def block(op):
        G = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        V, _ = np.linalg.qr(G)
        W = (V * roots(d)[rng.integers(0, d, m)]) @ V.conj().T
        out = np.zeros((d + m, d + m), dtype=complex)
        out[:d, :d] = op
        out[d:, d:] = W
        return out

    A = tuple(block(a) for a in base.A)
    B = tuple(block(b) for b in base.B)
    Psi = np.zeros((d + m, d + m), dtype=complex)
    Psi[:d, :d] = base.Psi
    return Strategy(d, Psi.ravel(), A, B, base.convention)


def tensor_junk(s: Strategy, junk: np.ndarray, da: int, db: int) -> Strategy:
    """Append a junk state on C^da x C^db: A_j -> A_j x 1, B_k -> B_k x 1."""
    J = np.asarray(junk, dtype=complex).reshape(da, db)
    Psi = np.einsum("xy,pq->xpyq", s.Psi, J).reshape(s.dim_A * da, s.dim_B * db)
    A = tuple(np.kron(a, np.eye(da)) for a in s.A)
    B = tuple(np.kron(b, np.eye(db)) for b in s.B)
    return Strategy(s.d, Psi.ravel(), A, B, s.convention)
