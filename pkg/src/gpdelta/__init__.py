"""Numerical laboratory for the 1D Gross-Pitaevskii equation with a point defect.

The equation is i u_t + u_xx - gamma delta(x) u + (1 - |u|^2) u = 0 with
|u| -> 1 at both infinities. The subpackages cover the explicit propagator
kernels of the defect, Crank-Nicolson time stepping, the closed-form black
soliton family, gradient-flow energy minimization, and the spectral
quantities that decide orbital stability versus linear instability.
"""

__version__ = "0.1.0"
