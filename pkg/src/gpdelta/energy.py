"""Discrete energy, energy-space metrics, gradient, and distance to soliton orbits.

The discretization is chosen so that the gradient of the discrete energy is
exactly the tridiagonal operator action minus the nonlinearity (see
energy_gradient); tests check this against finite differences of energy_gamma
rather than trusting the algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, GridSpec, apply_hgamma, build_hgamma, trapezoid_weights
from .solitons import StateKind, StationaryState, eval_state

__all__ = [
    "EnergyBreakdown",
    "OrbitDistanceResult",
    "energy_gamma",
    "extrapolated_energy",
    "abs_E",
    "d0",
    "dinfty",
    "nonlinear_F",
    "energy_gradient",
    "orbit_distance",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    point: float
    potential: float
    total: float


@dataclass(frozen=True)
class OrbitDistanceResult:
    distance: float
    best_phase: float
    target: StationaryState


def energy_gamma(u: Field, gamma: float) -> EnergyBreakdown:
    """Trapezoid energy: (1/2)||u'||^2 + (gamma/2)|u(0)|^2 + (1/4)||1-|u|^2||^2.

    The kinetic term uses consecutive-node differences, so it is the exact
    counterpart of the tridiagonal operator; the potential term uses trapezoid
    weights. Both are second-order accurate away from the origin kink of the
    profiles; use extrapolated_energy when 1e-6 absolute accuracy is needed.
    """
    v = u.values
    h = u.grid.h
    kinetic = float(np.sum(np.abs(np.diff(v)) ** 2) / (2.0 * h))
    point = 0.5 * gamma * float(np.abs(v[u.grid.M]) ** 2)
    w = trapezoid_weights(u.grid)
    potential = 0.25 * float(np.sum(w * (1.0 - np.abs(v) ** 2) ** 2))
    return EnergyBreakdown(kinetic, point, potential, kinetic + point + potential)


def extrapolated_energy(u: Field, gamma: float) -> float:
    """Two-level Richardson value (4 E_h - E_2h) / 3.

    The profiles of interest have a derivative kink at the origin node, which
    leaves a clean h^2 term in the trapezoid energy; since the origin is a
    node of both grids the h^2 term cancels exactly and the O(h^4) remainder
    is far below 1e-6 at production resolution.
    """
    g = u.grid
    if g.M % 2:
        raise ValueError("need an even node count per half line to coarsen by 2")
    coarse = Field(GridSpec(g.L, g.M // 2), u.values[::2])
    e_h = energy_gamma(u, gamma).total
    e_2h = energy_gamma(coarse, gamma).total
    return (4.0 * e_h - e_2h) / 3.0


def abs_E(u: Field) -> float:
    """Energy-space magnitude sqrt(E_0(u)); the point term is excluded."""
    return math.sqrt(energy_gamma(u, 0.0).total)


def _deriv_sq_norm(values: np.ndarray, h: float) -> float:
    return float(np.sum(np.abs(np.diff(values)) ** 2) / h)


def _modulus_gap_norm(u: Field, v: Field) -> float:
    # |u|^2 - |v|^2 = Re((u-v) conj(u+v)) avoids cancellation when both
    # moduli are near 1 but the fields differ by a phase.
    gap = ((u.values - v.values) * np.conj(u.values + v.values)).real
    return float(np.sqrt(np.sum(trapezoid_weights(u.grid) * gap**2)))


def d0(u: Field, v: Field) -> float:
    """||u'-v'|| + |u(0)-v(0)| + || |u|^2-|v|^2 ||, all on the grid."""
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    deriv = math.sqrt(_deriv_sq_norm(u.values - v.values, u.grid.h))
    origin = abs(u.values[u.grid.M] - v.values[v.grid.M])
    return deriv + origin + _modulus_gap_norm(u, v)


def dinfty(u: Field, v: Field) -> float:
    """Like d0 but with the sup norm of u - v as the middle term."""
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    deriv = math.sqrt(_deriv_sq_norm(u.values - v.values, u.grid.h))
    sup = float(np.max(np.abs(u.values - v.values)))
    return deriv + sup + _modulus_gap_norm(u, v)


def nonlinear_F(u: Field) -> Field:
    return Field(u.grid, (1.0 - np.abs(u.values) ** 2) * u.values)


def energy_gradient(u: Field, gamma: float) -> Field:
    """Gradient of energy_gamma in the rescaled real inner product.

    With the kinetic term built from consecutive differences, the potential
    from trapezoid weights and the point term lumped, the chain rule gives
    exactly H_gamma u - (1-|u|^2) u at every interior node; weights cancel.
    Boundary components are forced to zero (the boundary is clamped wherever
    the gradient is consumed).
    """
    out = apply_hgamma(build_hgamma(u.grid, gamma), u).values
    out -= nonlinear_F(u).values
    out[0] = out[-1] = 0.0
    return Field(u.grid, out)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def orbit_distance(u: Field, kind: StateKind, gamma: float) -> OrbitDistanceResult:
    """min over theta of d0(u, e^{i theta} s) for the requested soliton family.

    The modulus term of d0 is phase independent and the other two reduce to
    a - 2 Re(e^{-i theta} b) expressions, so the scan over theta costs O(1)
    per angle after one O(N) precomputation. A 64-point scan brackets the
    minimum of the (smooth, possibly two-welled) angle profile and golden
    section refines it below 1e-8.
    """
    target0 = StationaryState(kind, gamma)
    s = eval_state(target0, u.grid)
    h = u.grid.h
    mid = u.grid.M

    du, ds = np.diff(u.values), np.diff(s.values)
    deriv_const = (np.sum(np.abs(du) ** 2) + np.sum(np.abs(ds) ** 2)) / h
    deriv_cross = complex(np.sum(du * np.conj(ds))) / h
    origin_const = abs(u.values[mid]) ** 2 + abs(s.values[mid]) ** 2
    origin_cross = u.values[mid] * np.conj(s.values[mid])
    modulus = _modulus_gap_norm(u, s)  # phase free

    def dist(theta: float) -> float:
        ph = np.exp(-1j * theta)
        t1 = math.sqrt(max(deriv_const - 2.0 * (ph * deriv_cross).real, 0.0))
        t2 = math.sqrt(max(origin_const - 2.0 * (ph * origin_cross).real, 0.0))
        return t1 + t2 + modulus

    thetas = np.linspace(-math.pi, math.pi, 65)[:-1]
    values = np.array([dist(t) for t in thetas])
    step = thetas[1] - thetas[0]
    a = thetas[np.argmin(values)] - step
    b = a + 2.0 * step
    c, d = b - _INVPHI * (b - a), a + _INVPHI * (b - a)
    fc, fd = dist(c), dist(d)
    while b - a > 1e-8:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = dist(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = dist(d)
    theta = 0.5 * (a + b)
    theta = math.atan2(math.sin(theta), math.cos(theta))
    return OrbitDistanceResult(dist(theta), theta, StationaryState(kind, gamma, theta))
