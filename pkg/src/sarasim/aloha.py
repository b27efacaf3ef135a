"""Closed-form ALOHA results for Poisson networks with Rayleigh fading.

Success probability, area spectral efficiency, the optimal common transmit
probability and the density-independent maximum, plus an independent numeric
argmax used to validate the closed form.  The success-probability formula is
the infinite-plane expression, so Monte Carlo comparisons should run on a
torus with noise negligible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AlohaParams",
    "rho",
    "success_probability",
    "ase_curve",
    "optimal_phi",
    "max_ase",
    "argmax_phi_numeric",
]


@dataclass(frozen=True)
class AlohaParams:
    """Density (per m^2), link distance (m), linear SINR threshold, exponent."""

    lam: float
    r_t: float
    beta: float
    alpha: float = 4.0

    def __post_init__(self) -> None:
        if self.lam <= 0 or self.r_t <= 0 or self.beta <= 0:
            raise ValueError(
                f"density, link distance and threshold must be positive, got "
                f"lam={self.lam}, r_t={self.r_t}, beta={self.beta}"
            )
        if self.alpha <= 2:
            raise ValueError(f"pathloss exponent must exceed 2, got {self.alpha}")

    @property
    def outage_coeff(self) -> float:
        """lam-free part of the outage exponent: r_t^2 beta^(2/alpha) rho(alpha)."""
        return self.r_t**2 * self.beta ** (2.0 / self.alpha) * rho(self.alpha)


def rho(alpha: float) -> float:
    """2 pi^2 / alpha * csc(2 pi / alpha); finite and positive for alpha > 2."""
    if alpha <= 2:
        raise ValueError(f"pathloss exponent must exceed 2, got {alpha}")
    return 2.0 * math.pi**2 / alpha / math.sin(2.0 * math.pi / alpha)


def success_probability(p: AlohaParams, phi):
    """exp(-lam * phi * r_t^2 * beta^(2/alpha) * rho(alpha)) for phi in [0, 1]."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0) or np.any(phi > 1):
        raise ValueError("transmit probability must lie in [0, 1]")
    out = np.exp(-p.lam * phi * p.outage_coeff)
    return float(out) if out.ndim == 0 else out


def ase_curve(p: AlohaParams, phi):
    """Area spectral efficiency lam * phi * log2(1 + beta) * p_s, bits/s/Hz/m^2."""
    phi = np.asarray(phi, dtype=float)
    out = p.lam * phi * math.log2(1.0 + p.beta) * success_probability(p, phi)
    return float(out) if out.ndim == 0 else out


def optimal_phi(p: AlohaParams) -> float:
    """ASE-maximising common transmit probability, clamped to 1 at low density."""
    return min(1.0, 1.0 / (p.lam * p.outage_coeff))


def max_ase(p: AlohaParams) -> float:
    """Maximum ASE; independent of density while the optimum is unclamped."""
    if 1.0 / (p.lam * p.outage_coeff) > 1.0:
        return ase_curve(p, 1.0)
    return math.exp(-1.0) * math.log2(1.0 + p.beta) / p.outage_coeff


def argmax_phi_numeric(p: AlohaParams, tol: float = 1e-10) -> float:
    """Golden-section argmax of the ASE curve over [0, 1].

    Independent of the closed form; the curve is unimodal (x * exp(-c x)),
    and when the interior optimum exceeds 1 the search converges to the
    boundary.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = ase_curve(p, c)
    fd = ase_curve(p, d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = ase_curve(p, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = ase_curve(p, d)
    return 0.5 * (a + b)
