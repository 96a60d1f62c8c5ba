"""The one-particle model wave function near the source and its current.

The short-distance model is

    psi(x) = [c_minus r^(-1-B) + s_minus r^(-1/2+delta)] f^-(omega)
           + [c_plus  r^(-1+B) + s_plus  r^(-1/2+delta)] f^+(omega),

multiplied by a C^1 cutoff chi(r) that is 1 on r <= r_cut/2 and 0 beyond
r_cut, with omega = x/r.  The optional s_-/s_+ amplitudes inject error
terms strictly smaller than r^(-1/2) (delta = 0.1 fixed) to exercise the
robustness of the asymptotic extractors; they default to zero.

Everything the dynamics needs follows from the pointwise overlaps of the
boundary spinors: with X = conj(A) C for radial amplitudes A (along f^-)
and C (along f^+),

    j_r          = (1+q)/pi * 2 B Im[X]
    j_theta      = 0
    j_phi        = -(1+q)/pi * sgn * (q(|A|^2+|C|^2) + 2 Re[X]) sin(theta)
    rho          = (1+q)/pi * (|A|^2 + 2 q Re[X] + |C|^2)

with sgn = sgn(m_tilde kappa_tilde).  For the pure model (s = 0) this
gives the exact expansion coefficients frozen in CurrentCoeffs, e.g.
r^2 j_r = C_r = 2(1+q) B Im[conj(c_minus) c_plus]/pi exactly below
r_cut/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, OriginError, ZeroDensity
from .params import PhysParams
from .spinor_basis import SpherePoint, f_boundary, to_spherical

#: The injected error terms scale as r^(-1/2 + SUBLEADING_DELTA).
SUBLEADING_DELTA = 0.1


@dataclass(frozen=True)
class ModelWavefunction:
    """Frozen-coefficient model wave function on the punctured ball."""

    params: PhysParams
    c_minus: complex
    c_plus: complex
    r_cut: float
    subleading_amp: tuple[complex, complex] = (0j, 0j)

    def __post_init__(self):
        if not self.r_cut > 0.0:
            raise DomainError(f"r_cut must be positive, got {self.r_cut!r}")
        object.__setattr__(self, "c_minus", complex(self.c_minus))
        object.__setattr__(self, "c_plus", complex(self.c_plus))
        s_minus, s_plus = self.subleading_amp
        object.__setattr__(
            self, "subleading_amp", (complex(s_minus), complex(s_plus))
        )

    @property
    def has_subleading(self) -> bool:
        return self.subleading_amp != (0j, 0j)


@dataclass(frozen=True)
class ModelFamily:
    """Static part of the model shared by all coefficient values.

    Maps track coefficients (c_minus(t), c_plus(t)) to concrete
    ModelWavefunction instances; `frozen` selects strictly frozen
    coefficients per flight segment instead of the quasi-static per-step
    refresh.
    """

    params: PhysParams
    r_cut: float
    subleading_amp: tuple[complex, complex] = (0j, 0j)
    frozen: bool = False

    def at(self, c_minus: complex, c_plus: complex) -> ModelWavefunction:
        return ModelWavefunction(
            self.params, c_minus, c_plus, self.r_cut, self.subleading_amp
        )


@dataclass(frozen=True)
class CurrentCoeffs:
    """Closed-form expansion coefficients of current and density.

    j_r = C_r r^-2;  j_phi/sin(theta) = Cphi_leading r^(-2-2B)
    + Cphi_mid r^-2 + Cphi_sub r^(-2+2B);  rho = rho_leading r^(-2-2B)
    + rho_mid r^-2 + (|c_plus|^2 (1+q)/pi) r^(-2+2B).
    """

    C_r: float
    Cphi_leading: float
    Cphi_mid: float
    Cphi_sub: float
    rho_leading: float
    rho_mid: float


def current_coeffs(params: PhysParams, c_minus: complex, c_plus: complex) -> CurrentCoeffs:
    """Exact expansion coefficients for the pure (subleading = 0) model."""
    q, B = params.q, params.B
    sgn = params.sign_mk
    w = (1.0 + q) / math.pi
    x = np.conj(complex(c_minus)) * complex(c_plus)
    return CurrentCoeffs(
        C_r=2.0 * w * B * x.imag,
        Cphi_leading=-q * w * abs(c_minus) ** 2 * sgn,
        Cphi_mid=-2.0 * w * x.real * sgn,
        Cphi_sub=-q * w * abs(c_plus) ** 2 * sgn,
        rho_leading=abs(c_minus) ** 2 * w,
        rho_mid=2.0 * x.real * q * w,
    )


# =====================================================================
# pointwise evaluation
# =====================================================================

def cutoff(r: float, r_cut: float) -> float:
    """C^1 cubic bridge: 1 on r <= r_cut/2, 0 on r >= r_cut."""
    if r <= 0.5 * r_cut:
        return 1.0
    if r >= r_cut:
        return 0.0
    u = (r - 0.5 * r_cut) / (0.5 * r_cut)
    return 1.0 - u * u * (3.0 - 2.0 * u)


def reduced_amplitudes(model: ModelWavefunction, r: float) -> tuple[complex, complex]:
    """Radial amplitudes along f^- and f^+ with the common factor
    chi(r) r^(-1-B) removed: (c_minus + s_minus r^(1/2+B+delta),
    c_plus r^(2B) + s_plus r^(1/2+B+delta)).

    Keeping the reduced form avoids overflow at tiny radii; the common
    factor cancels from every velocity ratio.
    """
    B = model.params.B
    s_minus, s_plus = model.subleading_amp
    a_hat = model.c_minus
    c_hat = model.c_plus * r ** (2.0 * B)
    if model.has_subleading:
        bump = r ** (0.5 + B + SUBLEADING_DELTA)
        a_hat = a_hat + s_minus * bump
        c_hat = c_hat + s_plus * bump
    return a_hat, c_hat


def radial_amplitudes(model: ModelWavefunction, r: float) -> tuple[complex, complex]:
    """Full radial amplitudes (A, C) of psi = A f^- + C f^+ at radius r."""
    if r <= 0.0:
        raise OriginError("radius must be positive")
    a_hat, c_hat = reduced_amplitudes(model, r)
    common = cutoff(r, model.r_cut) * r ** (-1.0 - model.params.B)
    return common * a_hat, common * c_hat


def eval_psi1(model: ModelWavefunction, x) -> np.ndarray:
    """Model wave function at the Cartesian point x (four components)."""
    r, theta, phi = to_spherical(x)
    if r == 0.0:
        raise OriginError("psi is evaluated on the punctured ball, not at x = 0")
    a, c = radial_amplitudes(model, r)
    point = SpherePoint(theta, phi)
    p = model.params
    return a * f_boundary(-1, p.m_tilde, p.kappa_tilde, point, p) + c * f_boundary(
        +1, p.m_tilde, p.kappa_tilde, point, p
    )


def span_currents(
    params: PhysParams, a_minus: complex, a_plus: complex
) -> tuple[float, float, float]:
    """(j_r, j_phi / sin(theta), rho) for a spinor A f^- + C f^+.

    The bilinear route: assembled from the closed-form boundary-spinor
    overlaps, valid for any radial amplitudes (with or without the
    injected subleading terms, with or without the cutoff factor).
    """
    q, B = params.q, params.B
    w = (1.0 + q) / math.pi
    x = a_minus.conjugate() * a_plus
    mod2 = (
        a_minus.real * a_minus.real + a_minus.imag * a_minus.imag
        + a_plus.real * a_plus.real + a_plus.imag * a_plus.imag
    )
    j_r = 2.0 * w * B * x.imag
    j_phi_over_sin = -w * params.sign_mk * (q * mod2 + 2.0 * x.real)
    rho = w * (mod2 + 2.0 * q * x.real)
    return j_r, j_phi_over_sin, rho


def current_exact(model: ModelWavefunction, x) -> np.ndarray:
    """Current (j_r, j_theta, j_phi): spinor contraction psi^dag alpha_k psi."""
    from .spinor_basis import alpha_component  # local to keep import cycle-free

    r, theta, phi = to_spherical(x)
    if r == 0.0:
        raise OriginError("current is defined on the punctured ball only")
    psi = eval_psi1(model, x)
    point = SpherePoint(theta, phi)
    return np.array(
        [
            np.vdot(psi, alpha_component(k, point) @ psi).real
            for k in ("r", "theta", "phi")
        ]
    )


def density_exact(model: ModelWavefunction, x) -> float:
    """Probability density |psi(x)|^2."""
    psi = eval_psi1(model, x)
    return float(np.vdot(psi, psi).real)


def velocity_field(model: ModelWavefunction, x) -> np.ndarray:
    """Raw guiding field (j_r/rho, j_theta/rho, j_phi/rho) at x.

    Defined on the inner region r < r_cut/2 where the short-distance
    model is trusted.  The trajectory module divides by (1, r, r sin
    theta) to get coordinate velocities.
    """
    r, _, _ = to_spherical(x)
    if r == 0.0:
        raise OriginError("velocity undefined at the source")
    if r >= 0.5 * model.r_cut:
        raise DomainError(
            f"velocity_field is defined on the inner region r < r_cut/2, got r = {r!r}"
        )
    j = current_exact(model, x)
    rho = density_exact(model, x)
    if not rho > 0.0:
        raise ZeroDensity(f"rho = {rho!r} at x = {x!r}")
    return j / rho


# =====================================================================
# radial mass profile (used by the ensemble sampler and the tests)
# =====================================================================

def radial_mass_profile(
    model: ModelWavefunction, n: int = 4097
) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative radial mass M(s) = integral of 4 pi r^2 rho dr on a grid
    of the substituted variable s = r^(1-2B), from 0 to r_cut^(1-2B).

    In s the integrand is bounded (the r^(-2B) singularity is exactly
    absorbed by the substitution), so the trapezoid rule converges fast.
    """
    p = model.params
    one = 1.0 - 2.0 * p.B
    s_grid = np.linspace(0.0, model.r_cut ** one, n)
    integrand = np.empty(n)
    w = 4.0 * (1.0 + p.q) / one
    for i, s in enumerate(s_grid):
        if s == 0.0:
            # limit: only |c_minus|^2 survives in the reduced bilinear
            integrand[i] = w * abs(model.c_minus) ** 2
            continue
        r = s ** (1.0 / one)
        a_hat, c_hat = reduced_amplitudes(model, r)
        x = a_hat.conjugate() * c_hat
        chi = cutoff(r, model.r_cut)
        integrand[i] = w * chi * chi * (
            abs(a_hat) ** 2 + 2.0 * p.q * x.real + abs(c_hat) ** 2
        )
    cum = np.concatenate(
        ([0.0], np.cumsum(np.diff(s_grid) * 0.5 * (integrand[1:] + integrand[:-1])))
    )
    return s_grid, cum


def particle_sector_mass(model: ModelWavefunction, n: int = 4097) -> float:
    """Total mass of |psi|^2 over the ball of radius r_cut."""
    return float(radial_mass_profile(model, n)[1][-1])
