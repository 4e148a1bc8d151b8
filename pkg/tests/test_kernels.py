import subprocess
import sys

import numpy as np
import pytest

from resilient_swarm import _kernels


def test_backend_name_matches_flag():
    assert _kernels.backend_name() == ("numba" if _kernels.USE_NUMBA else "numpy")


def test_env_flag_selects_numpy_backend():
    code = ("import resilient_swarm._kernels as k; "
            "print(k.backend_name())")
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"RESILIENT_SWARM_NO_NUMBA": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True, text=True, cwd="/root/pkg")
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "numpy"


def test_rk4_paths_agree():
    rng = np.random.default_rng(61)
    for _ in range(200):
        kind = int(rng.integers(0, 2))
        b = float(rng.uniform(0.05, 1.0))
        args = (kind, b, *rng.normal(size=3), *rng.uniform(-0.5, 0.5, size=2),
                float(rng.uniform(0.01, 0.1)))
        active = _kernels.rk4_step(*args)
        ref = _kernels._rk4_step_py(*args)
        assert np.allclose(active, ref, atol=1e-12)


def test_displacement_paths_agree():
    # single-integrator displacement is exact u * horizon on both paths; the
    # unicycle position block is also control-only so they still agree
    rng = np.random.default_rng(67)
    for _ in range(200):
        kind = int(rng.integers(0, 2))
        b = float(rng.uniform(0.05, 1.0))
        args = (kind, b, float(rng.normal()), *rng.uniform(-0.5, 0.5, size=2),
                float(rng.uniform(0.0, 3.0)), 0.05)
        active = _kernels.zone_displacement(*args)
        ref = _kernels._displacement_py(*args)
        assert np.allclose(active, ref, atol=1e-9)


def test_displacement_zero_horizon():
    assert _kernels.zone_displacement(0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.05) == (0.0, 0.0)


def test_rk4_single_integrator_exact():
    x, y, phi = _kernels.rk4_step(_kernels.SINGLE_INTEGRATOR, 1.0,
                                  1.0, 2.0, 0.3, 0.5, -0.5, 0.1)
    assert x == pytest.approx(1.05)
    assert y == pytest.approx(1.95)
    assert phi == 0.3
