"""Swap-type extraction isometries and the robustness report.

For one party with observables O_0..O_{d-1} on H (dimension D) the circuit is
ancilla |0> -> F -> controlled-G_c -> F^dag -> controlled-(O_0^c)^dag, with
G_c = omega^{k c} O_0^dag O_c.  Here k is the phase convention, -2^{-1} by
default, fixed by demanding an exact swap on ideal observables.  The map
sends H to C^d x H, ordered (ancilla x physical), row-major.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .bell_op import ideal_ops, op_powers
from .errors import NonUnitaryOps, OutOfRegime
from .hw_algebra import fourier, hw, roots, rotated_bell_state
from .nuspec import NuSpec, check_nu
from .strategy import (QUTRIT_C, Strategy, bell_expectation, qutrit_regime_limit,
                       tsirelson)
from .zmod import DimLike, as_dim, half

TOL = 1e-9


def theorem_bound(d: DimLike, epsilon: float) -> tuple[float, float]:
    """(mu_d, delta) with delta = sqrt(eps) d(d-1)(mu_d (4 + 1/d) + 1).

    mu_d = sqrt(d)(sqrt(d) + 2) for d > 3 and mu_3 = 9(sqrt(3) + 2).  For
    d = 3 an OutOfRegime warning is issued when eps >= (72(sqrt3+2))^-2,
    but the numbers are still returned.
    """
    d = as_dim(d).d
    if epsilon < -TOL:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    eps = max(float(epsilon), 0.0)
    if d == 3:
        mu = 9 * QUTRIT_C
        if not eps < qutrit_regime_limit():
            warnings.warn(f"epsilon={eps:.3g} is outside the qutrit regime "
                          f"(< {qutrit_regime_limit():.6g})", OutOfRegime, stacklevel=2)
    else:
        mu = math.sqrt(d) * (math.sqrt(d) + 2)
    delta = math.sqrt(eps) * d * (d - 1) * (mu * (4 + 1 / d) + 1)
    return mu, delta


def in_regime(d: int, epsilon: float) -> bool:
    return d != 3 or epsilon < qutrit_regime_limit()


PHASE_CANDIDATES = {"omega^(-2^-1)": lambda d: -half(d), "omega^(-2)": lambda d: -2}


def build_isometry(party_ops: Sequence[np.ndarray], dim: Optional[int] = None,
                   phase: Optional[str] = None) -> np.ndarray:
    """The (d D) x D matrix of the extraction circuit for one party."""
    ops = [np.asarray(o, dtype=complex) for o in party_ops]
    d = as_dim(len(ops)).d
    D = ops[0].shape[0] if dim is None else dim
    for o in ops:
        if o.shape != (D, D) or np.max(np.abs(o.conj().T @ o - np.eye(D))) > 1e-9:
            raise NonUnitaryOps("isometry needs unitary observables of a common dimension")
    phase = resolve_phase_convention(d) if phase is None else phase
    kexp = PHASE_CANDIDATES[phase](d)
    w = roots(d)
    pw = op_powers(ops, d)
    O0dag = ops[0].conj().T
    I = np.eye(D)
    F = np.kron(fourier(d), I)
    Fdag = F.conj().T
    CG = np.zeros((d * D, d * D), dtype=complex)
    CA = np.zeros((d * D, d * D), dtype=complex)
    for c in range(d):
        sl = slice(c * D, (c + 1) * D)
        CG[sl, sl] = w[(kexp * c) % d] * O0dag @ ops[c]
        CA[sl, sl] = pw[0, c].conj().T
    embed = np.zeros((d * D, D), dtype=complex)
    embed[:D, :] = I                       # |0>_ancilla x 1
    return CA @ Fdag @ CG @ F @ embed


@lru_cache(maxsize=None)
def resolve_phase_convention(d: int) -> str:
    """Pick the candidate phase for which ideal observables give the exact swap."""
    ops = ideal_ops(d)
    swap = np.zeros((d * d, d))
    swap[np.arange(d) * d, np.arange(d)] = 1      # |k> -> |k>_anc |0>
    for name in PHASE_CANDIDATES:
        V = build_isometry(ops, d, phase=name)
        if np.max(np.abs(V - swap)) <= 1e-10:
            return name
    raise ArithmeticError(f"no phase convention gives an exact swap for d={d}")


@dataclass
class IsometryReport:
    d: int
    epsilon: float
    state_distance: float
    op_distances: dict
    delta_bound: float
    mu: float
    bound_satisfied: bool
    aux_norm: float
    phase_convention: str
    in_regime: bool
    provenance: dict = field(default_factory=dict)

    @property
    def max_op_distance(self) -> float:
        return max(max(v.values()) for v in self.op_distances.values())

    @property
    def ratio(self) -> float:
        if self.delta_bound == 0:
            return 0.0 if self.state_distance <= TOL else math.inf
        return self.state_distance / self.delta_bound

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "epsilon": self.epsilon,
            "state_distance": self.state_distance,
            "op_distances": {p: [{"u": u, "v": v, "value": x} for (u, v), x in dd.items()]
                             for p, dd in self.op_distances.items()},
            "max_op_distance": self.max_op_distance,
            "delta_bound": self.delta_bound,
            "mu": self.mu,
            "bound_satisfied": self.bound_satisfied,
            "aux_norm": self.aux_norm,
            "phase_convention": self.phase_convention,
            "in_regime": self.in_regime,
            "provenance": self.provenance,
        }


def aux_state(s: Strategy) -> np.ndarray:
    """|aux> = d^{-1/2} sum_t omega^{-2^{-1} t} (1 x B_0^dag B_t)|psi>, unnormalized."""
    d = s.d
    h = half(d)
    B0dag = s.B[0].conj().T
    acc = np.zeros_like(s.Psi)
    for t in range(d):
        acc = acc + roots(d)[(-h * t) % d] * s.Psi @ (B0dag @ s.B[t]).T
    return acc / math.sqrt(d)


def _apply(VA, VB, Psi):
    return VA @ Psi @ VB.T


def _phase_fit(out: np.ndarray, tgt: np.ndarray) -> tuple[float, complex]:
    """min over theta of ||out - e^{i theta} tgt|| and the optimal e^{i theta}."""
    ov = np.vdot(tgt, out)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    # the direct norm avoids the cancellation in |out|^2 + |tgt|^2 - 2|ov|
    return float(np.linalg.norm(out - ph * tgt)), ph


def extract(s: Strategy, nu: NuSpec, provenance: Optional[dict] = None) -> IsometryReport:
    """Apply V_A x V_B and compare with (target state) x |aux>.

    The state distance is minimised over one global phase; the operator
    distances reuse that phase.  bound_satisfied requires the state distance
    and every operator distance to be <= delta(eps).
    """
    d = s.d
    check_nu(d, nu)
    phase = resolve_phase_convention(d)
    VA = build_isometry(s.A, phase=phase)
    VB = build_isometry(s.B, phase=phase)
    DA, DB = s.dim_A, s.dim_B
    target = rotated_bell_state(nu).reshape(d, d)
    aux = aux_state(s)

    def expected(Ta, Tb):
        t = Ta @ target @ Tb.T                        # (anc_A, anc_B)
        full = np.einsum("ab,pq->apbq", t, aux)        # (anc_A, phys_A, anc_B, phys_B)
        return full.reshape(d * DA, d * DB)

    out = _apply(VA, VB, s.Psi)
    I = np.eye(d)
    state_dist, ph = _phase_fit(out, expected(I, I))
    b_ref = [o.conj() for o in ideal_ops(d)] if s.convention == "bob_conjugated" else ideal_ops(d)
    Apw, Bpw = op_powers(s.A, d), op_powers(s.B, d)
    ops_d = {"A": {}, "B": {}}
    for u in range(d):
        for v in range(1, d):
            T = hw(d, v, v * u)
            oa = _apply(VA, VB, Apw[u, v] @ s.Psi)
            ops_d["A"][(u, v)] = float(np.linalg.norm(oa - ph * expected(T, I)))
            Tb = np.linalg.matrix_power(b_ref[u], v)
            ob = _apply(VA, VB, s.Psi @ Bpw[u, v].T)
            ops_d["B"][(u, v)] = float(np.linalg.norm(ob - ph * expected(I, Tb)))
    eps = tsirelson(d) - bell_expectation(s, nu).real
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfRegime)
        mu, delta = theorem_bound(d, max(eps, 0.0))
    worst = max(state_dist, max(max(x.values()) for x in ops_d.values()))
    return IsometryReport(d, float(eps), state_dist, ops_d, delta, mu,
                          bool(worst <= delta + TOL), float(np.linalg.norm(aux)), phase,
                          in_regime(d, eps), dict(provenance or {}))
