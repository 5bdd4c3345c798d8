"""Phase data for the non-classical rotation: a cubic over Z_d, or qutrit phases."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import InvalidNu, UnsupportedDim, SpecMismatch
from .zmod import as_dim, canonical_nu_table, fits_quadratic, poly_degree_on_field

QUTRIT_TOL = 1e-9


@dataclass(frozen=True)
class CubicNu:
    """nu(k) = sum_i coeffs[i] k^i over Z_d, for d > 3.

    The function must not agree with any polynomial of degree <= 2; such
    phases give classical correlations.  ``allow_degenerate=True`` skips that
    check and exists only for negative controls.
    """

    d: int
    coeffs: tuple
    allow_degenerate: bool = field(default=False, compare=False)
    values: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = as_dim(self.d).d
        object.__setattr__(self, "d", d)
        if d == 3:
            raise UnsupportedDim("cubic phases need d > 3; use QutritPhases for d = 3")
        c = tuple(int(x) % d for x in self.coeffs)
        if not c:
            c = (0,)
        object.__setattr__(self, "coeffs", c)
        vals = tuple(sum(ci * pow(k, i, d) for i, ci in enumerate(c)) % d for k in range(d))
        object.__setattr__(self, "values", vals)
        if not self.allow_degenerate and fits_quadratic(vals, d):
            raise InvalidNu(
                f"nu has degree {poly_degree_on_field(vals, d)} over Z_{d}; "
                "degree <= 2 phases are classical")

    @classmethod
    def canonical(cls, d: int) -> "CubicNu":
        d = as_dim(d).d
        i12 = pow(12, -1, d)
        nu = cls(d, (0, i12, -3 * i12, 2 * i12))
        assert nu.values == canonical_nu_table(d)
        return nu

    @property
    def degree(self) -> int:
        return poly_degree_on_field(self.values, self.d)

    @property
    def ident(self) -> str:
        if self.values == canonical_nu_table(self.d):
            return "canonical"
        return "cubic:" + ",".join(str(c) for c in self.coeffs)

    def rotation_phases(self) -> np.ndarray:
        """Angles theta_k with U = diag(exp(i theta_k)) = diag(omega^{nu_k})."""
        return 2 * np.pi * np.asarray(self.values, dtype=float) / self.d


def _phase_over_pi(z: complex) -> Fraction:
    f = Fraction(cmath.phase(z) / math.pi).limit_denominator(720)
    if abs(float(f) * math.pi - cmath.phase(z)) > 1e-12:
        raise InvalidNu("phase is not a small rational multiple of pi")
    return f


@dataclass(frozen=True)
class QutritPhases:
    """(phi1, phi2) for d = 3, stored as multiples of pi.

    Coupling table: phi_{j,k} = phi2 when j + k = 1 mod 3, else phi1.
    ``orientation`` selects omega (1) or omega^2 (2) on the right of the
    phase constraint.
    """

    phi1_over_pi: Union[Fraction, float]
    phi2_over_pi: Union[Fraction, float]
    orientation: int = 1

    d = 3

    def __post_init__(self):
        if self.orientation not in (1, 2):
            raise InvalidNu("orientation must be 1 or 2")
        w = cmath.exp(2j * math.pi * self.orientation / 3)
        sign = 1 if self.orientation == 1 else -1
        diff = (float(self.phi1_over_pi) - float(self.phi2_over_pi) - sign * 2 / 3) % 2.0
        if min(diff, 2.0 - diff) * math.pi > QUTRIT_TOL:
            raise InvalidNu("phi1 - phi2 must equal the orientation's 2pi/3 step (mod 2pi)")
        if abs(1 - math.sqrt(3) * cmath.exp(3j * self.phi1) - w) > QUTRIT_TOL:
            raise InvalidNu("phi1 violates 1 - sqrt(3) exp(3 i phi1) = omega^orientation")

    @property
    def phi1(self) -> float:
        return float(self.phi1_over_pi) * math.pi

    @property
    def phi2(self) -> float:
        return float(self.phi2_over_pi) * math.pi

    @classmethod
    def from_radians(cls, phi1: float, phi2: float, orientation: int = 1) -> "QutritPhases":
        return cls(phi1 / math.pi, phi2 / math.pi, orientation)

    @property
    def ident(self) -> str:
        return f"qutrit:phi1={self.phi1_over_pi}pi,phi2={self.phi2_over_pi}pi,orientation={self.orientation}"

    def phase_table(self) -> np.ndarray:
        """phi_{j,k} as a 3x3 real array."""
        jk = (np.arange(3)[:, None] + np.arange(3)[None, :]) % 3
        return np.where(jk == 1, self.phi2, self.phi1)

    def rotation_phases(self) -> np.ndarray:
        """Angles theta_k of the local diagonal rotation that reaches B_3 = 6.

        With A_j = B_j = T_(1,j) the optimum needs
        <T_(1,j) x T_(1,k)> = exp(-i phi_{j,k}) / sqrt(3).  On
        diag(e^{i theta}) x 1 |Phi>, writing Delta_s = theta_{s+2} - theta_{s+1},
        that forces exp(-i Delta_s) = 3^{-1/2} sum_m omega^{-ms} exp(-i phi(m)),
        where phi(m) is the table entry for j + k = m.
        """
        w = np.exp(2j * np.pi / 3)
        phi_m = np.array([self.phi1, self.phi2, self.phi1])
        e = np.array([sum(w ** (-m * s) * np.exp(-1j * phi_m[m]) for m in range(3))
                      for s in range(3)]) / np.sqrt(3)
        if np.max(np.abs(np.abs(e) - 1)) > 1e-9:
            raise InvalidNu("these qutrit phases admit no optimal local rotation of the Bell state")
        delta = -np.angle(e)
        if abs(np.exp(1j * delta.sum()) - 1) > 1e-9:
            raise InvalidNu("rotation phases are inconsistent around the cycle")
        theta = np.zeros(3)
        theta[1] = delta[2]
        theta[2] = theta[1] + delta[0]
        return np.mod(theta, 2 * np.pi)


NuSpec = Union[CubicNu, QutritPhases]


def check_nu(d: int, nu: NuSpec) -> None:
    """Raise SpecMismatch unless nu is the right kind of phase data for d."""
    if d == 3 and not isinstance(nu, QutritPhases):
        raise SpecMismatch("d = 3 needs QutritPhases")
    if d > 3 and not (isinstance(nu, CubicNu) and nu.d == d):
        raise SpecMismatch(f"d = {d} needs a CubicNu over Z_{d}")


def default_nu(d: int) -> NuSpec:
    """Canonical cubic for d > 3, the solved qutrit phases for d = 3."""
    d = as_dim(d).d
    if d == 3:
        from .bell_op import qutrit_phase_solve
        return qutrit_phase_solve()
    return CubicNu.canonical(d)
