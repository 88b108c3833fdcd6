"""Equilibration temperature of product states via exact diagonalization.

The Gibbs energy is matched to the product-state energy by bisection in beta
(the thermal energy is strictly decreasing, so the root is unique). The map
uses periodic blocks by default: bulk temperatures are already converged at
L ~ 10 with periodic boundaries (the L=8 and L=10 extremes agree to ~5e-4),
while open chains of ED-tractable sizes carry O(1/L) edge corrections.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailureError
from .evolution import dense_hamiltonian
from .pauli import BlochAngles

ED_LIMIT = 12
BETA_BRACKET = 20.0
BETA_BRACKET_MAX = 640.0
_BISECTION_ITERS = 80
_ZERO_ENERGY_SNAP = 1e-12


@dataclass
class TemperaturePoint:
    angles: BlochAngles
    beta: float
    temperature: float
    energy_density: float


def product_state_energy(angles, p, periodic=False):
    """<H> in the product state; closed form from single-site expectations."""
    bonds = p.L if periodic else p.L - 1
    ct = math.cos(angles.theta)
    return (
        -p.J * bonds * ct * ct
        - p.g * p.L * math.sin(angles.theta) * math.cos(angles.phi)
        - p.h * p.L * ct
    )


def spectrum(p, periodic=True):
    """Eigenvalues of the chain Hamiltonian (ascending)."""
    return np.linalg.eigvalsh(dense_hamiltonian(p, periodic=periodic, ed_limit=ED_LIMIT))


def thermal_energy_from_spectrum(evals, beta):
    """Tr(H e^{-beta H}) / Tr(e^{-beta H}), stabilized against overflow.

    Works on scalar or array beta (vectorized over a trailing grid axis).
    """
    beta = np.asarray(beta, dtype=float)
    x = -beta[..., None] * evals
    x -= x.max(axis=-1, keepdims=True)
    w = np.exp(x)
    e = (w * evals).sum(axis=-1) / w.sum(axis=-1)
    return e if e.ndim else float(e)


def thermal_energy(beta, p, periodic=True):
    return thermal_energy_from_spectrum(spectrum(p, periodic), beta)


def _solve_beta_grid(evals, targets, L):
    """Vectorized bisection; returns beta array matching ``targets``."""
    targets = np.asarray(targets, dtype=float)
    e_min, e_max = float(evals[0]), float(evals[-1])
    if np.any(targets <= e_min) or np.any(targets >= e_max):
        raise NumericalFailureError("target energy outside the spectral range")
    lo = np.full(targets.shape, -BETA_BRACKET)
    hi = np.full(targets.shape, BETA_BRACKET)
    # widen adaptively: E is decreasing, so the root needs E(lo) >= target >= E(hi)
    bracket = BETA_BRACKET
    while bracket <= BETA_BRACKET_MAX:
        bad_lo = thermal_energy_from_spectrum(evals, lo) < targets
        bad_hi = thermal_energy_from_spectrum(evals, hi) > targets
        if not (bad_lo.any() or bad_hi.any()):
            break
        bracket *= 2.0
        lo[bad_lo] *= 2.0
        hi[bad_hi] *= 2.0
    for _ in range(_BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        high_side = thermal_energy_from_spectrum(evals, mid) > targets
        lo = np.where(high_side, mid, lo)
        hi = np.where(high_side, hi, mid)
    beta = 0.5 * (lo + hi)
    # exact zero on the E_PS = 0 locus (infinite temperature)
    beta[np.abs(targets) < _ZERO_ENERGY_SNAP * L] = 0.0
    resid = np.abs(thermal_energy_from_spectrum(evals, beta) - targets)
    if np.any(resid > 1e-9 * L):
        raise NumericalFailureError(
            f"bisection residual {resid.max():.3e} exceeds 1e-9*L"
        )
    return beta


def solve_beta(angles, p, periodic=True, evals=None):
    """Equilibration point for one product state."""
    if evals is None:
        evals = spectrum(p, periodic)
    e_ps = product_state_energy(angles, p, periodic=periodic)
    beta = float(_solve_beta_grid(evals, np.array([e_ps]), p.L)[0])
    temperature = math.inf if beta == 0.0 else 1.0 / beta
    return TemperaturePoint(angles, beta, temperature, e_ps / p.L)


def bloch_map(dtheta_deg, dphi_deg, p, periodic=True, chunk=4096):
    """Full (theta, phi) grid over [0, pi] x [0, 2 pi); returns TemperaturePoints.

    The spectrum is diagonalized once and shared across grid points; the
    bisection runs vectorized in chunks.
    """
    if dtheta_deg <= 0 or dphi_deg <= 0:
        raise InvalidInputError("angular steps must be positive")
    n_theta = int(round(180.0 / dtheta_deg))
    n_phi = int(round(360.0 / dphi_deg))
    if abs(n_theta * dtheta_deg - 180.0) > 1e-9 or abs(n_phi * dphi_deg - 360.0) > 1e-9:
        raise InvalidInputError("angular steps must divide 180 and 360 degrees")
    thetas = [i * dtheta_deg for i in range(n_theta + 1)]
    phis = [j * dphi_deg for j in range(n_phi)]
    evals = spectrum(p, periodic)
    grid = [(t, f) for t in thetas for f in phis]
    points = []
    for start in range(0, len(grid), chunk):
        block = grid[start : start + chunk]
        angs = [BlochAngles.from_degrees(t, f) for t, f in block]
        targets = np.array(
            [product_state_energy(a, p, periodic=periodic) for a in angs]
        )
        betas = _solve_beta_grid(evals, targets, p.L)
        for a, b, e in zip(angs, betas, targets):
            temperature = math.inf if b == 0.0 else 1.0 / b
            points.append(TemperaturePoint(a, float(b), temperature, e / p.L))
    return points
