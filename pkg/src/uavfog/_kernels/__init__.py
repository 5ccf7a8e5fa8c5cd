"""Kernel backend selection.

The compiled extension (``_core``) is preferred when importable; the
pure-Python reference (``pyref``) is the fallback. Both implement the same
contract with bit-identical results. Set ``UAVFOG_BACKEND=python`` or
``UAVFOG_BACKEND=cython`` to force a backend (benchmarks use this).
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import pyref

try:
    from . import _core
except ImportError:          # extension not built: pure-Python lane
    _core = None

_FORCED = os.environ.get("UAVFOG_BACKEND", "").strip().lower()
if _FORCED in ("python", "py", "pure"):
    _impl = pyref
elif _FORCED in ("cython", "c", "compiled"):
    if _core is None:
        raise ImportError(
            "UAVFOG_BACKEND=cython requested but uavfog._kernels._core is "
            "not built (pip install -e . --no-build-isolation)")
    _impl = _core
else:
    _impl = _core if _core is not None else pyref

BACKEND = _impl.BACKEND
construct_path = _impl.construct_path
simulate_path = _impl.simulate_path
mamdani_adjust = _impl.mamdani_adjust

# construct_path statuses
COMPLETE = pyref.COMPLETE
STUCK = pyref.STUCK
BUDGET = pyref.BUDGET
# simulate_path statuses
DONE = pyref.DONE
TIMEOUT = pyref.TIMEOUT
UNSTABLE = pyref.UNSTABLE

N_FLIGHT_PARAMS = 40


def available_backends():
    out = {"python": pyref}
    if _core is not None:
        out["cython"] = _core
    return out


def pack_flight_params(cfg) -> np.ndarray:
    """Pack a ScenarioConfig into the flight-kernel parameter vector."""
    omega_cap = cfg.motor_speed_ceiling()
    u1_max = 4.0 * cfg.thrust_coeff * omega_cap * omega_cap
    capture_r = cfg.capture_radius_frac * cfg.cell_size
    return np.array([
        cfg.uav_mass,                    # 0
        cfg.gravity,                     # 1
        cfg.arm_length_m,                # 2
        cfg.inertia_x,                   # 3
        cfg.inertia_y,                   # 4
        cfg.inertia_z,                   # 5
        cfg.thrust_coeff,                # 6
        cfg.torque_coeff,                # 7
        cfg.motor_voltage,               # 8
        cfg.motor_resistance,            # 9
        cfg.motor_potential,             # 10
        cfg.slot_len,                    # 11
        float(cfg.rk4_substeps),         # 12
        capture_r,                       # 13
        capture_r,                       # 14 final waypoint radius
        cfg.cruise_frac * cfg.v_max,     # 15
        cfg.accel_max,                   # 16
        cfg.v_max,                       # 17
        cfg.z_max,                       # 18
        cfg.pid_z_kp,                    # 19
        cfg.pid_z_ki,                    # 20
        cfg.pid_z_kd,                    # 21
        cfg.pid_att_kp,                  # 22
        cfg.pid_att_ki,                  # 23
        cfg.pid_att_kd,                  # 24
        cfg.pid_yaw_kp,                  # 25
        cfg.pid_yaw_ki,                  # 26
        cfg.pid_yaw_kd,                  # 27
        cfg.pid_vel_kp,                  # 28
        cfg.fuzzy_e_scale,               # 29
        cfg.fuzzy_ec_scale,              # 30
        omega_cap,                       # 31
        u1_max,                          # 32
        math.sin(0.45),                  # 33 pitch reference limit
        cfg.accel_max,                   # 34 vertical accel command limit
        0.6 * cfg.accel_max,             # 35 braking accel near final target
        capture_r,                       # 36 yaw-reference hold radius
        10.0,                            # 37 altitude integrator clamp
        1.0,                             # 38 attitude integrator clamp
        1.0,                             # 39 yaw integrator clamp
    ])
