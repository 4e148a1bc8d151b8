"""Hot numeric kernels: RK4 state propagation and critical-zone quadrature.

Two implementations are provided. The default is numba @njit; setting the
environment variable ``RESILIENT_SWARM_NO_NUMBA=1`` before import selects a
pure-numpy path instead. Both paths produce the same values (the position
block of every supported model is control-only, so the RK4 quadrature of the
relative velocity is exact); ``benchmarks/bench_kernels.py`` compares their
throughput.
"""

import math
import os

import numpy as np

SINGLE_INTEGRATOR = 0
LINEARIZED_UNICYCLE = 1

USE_NUMBA = os.environ.get("RESILIENT_SWARM_NO_NUMBA", "0") != "1"


def _rk4_step_py(kind, b, x, y, phi, u1, u2, dt):
    # position block is pdot = u for both kinds; phi evolves for the unicycle
    if kind == LINEARIZED_UNICYCLE:
        k1 = (-math.sin(phi) * u1 + math.cos(phi) * u2) / b
        k2 = (-math.sin(phi + 0.5 * dt * k1) * u1 + math.cos(phi + 0.5 * dt * k1) * u2) / b
        k3 = (-math.sin(phi + 0.5 * dt * k2) * u1 + math.cos(phi + 0.5 * dt * k2) * u2) / b
        k4 = (-math.sin(phi + dt * k3) * u1 + math.cos(phi + dt * k3) * u2) / b
        phi_next = phi + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    else:
        phi_next = phi
    return x + dt * u1, y + dt * u2, phi_next


def _displacement_py(kind, b, phi, u1, u2, horizon, dt):
    # Quadrature of the position derivative with u held constant. For both
    # supported kinds pdot == u exactly, so the integral is closed-form and
    # matches the stepped RK4 accumulation used by the numba path.
    if horizon <= 0.0:
        return 0.0, 0.0
    return u1 * horizon, u2 * horizon


if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _rk4_step_nb(kind, b, x, y, phi, u1, u2, dt):
        if kind == LINEARIZED_UNICYCLE:
            k1 = (-math.sin(phi) * u1 + math.cos(phi) * u2) / b
            k2 = (-math.sin(phi + 0.5 * dt * k1) * u1 + math.cos(phi + 0.5 * dt * k1) * u2) / b
            k3 = (-math.sin(phi + 0.5 * dt * k2) * u1 + math.cos(phi + 0.5 * dt * k2) * u2) / b
            k4 = (-math.sin(phi + dt * k3) * u1 + math.cos(phi + dt * k3) * u2) / b
            phi_next = phi + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        else:
            phi_next = phi
        return x + dt * u1, y + dt * u2, phi_next

    @njit(cache=True)
    def _displacement_nb(kind, b, phi, u1, u2, horizon, dt):
        if horizon <= 0.0:
            return 0.0, 0.0
        steps = int(math.ceil(horizon / dt))
        h = horizon / steps
        x = 0.0
        y = 0.0
        p = phi
        for _ in range(steps):
            x, y, p = _rk4_step_nb(kind, b, x, y, p, u1, u2, h)
        return x, y

    rk4_step = _rk4_step_nb
    zone_displacement = _displacement_nb
else:
    rk4_step = _rk4_step_py
    zone_displacement = _displacement_py


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
