"""Attitude control: classical and fuzzy PID, plus flight-profile drivers.

The fuzzy controller adjusts the yaw-loop PID gains each control tick from
the scaled yaw error E and error rate EC through a 7x7 Mamdani rule table
with triangular memberships and centroid defuzzification over integer
singletons. The closed-loop tracking itself runs in the selected kernel
backend; this module owns the rule table, the reference implementations
of the fuzzy operations, and profile synthesis for the open-loop case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .quadrotor import movement_energy

LABELS = ("NB", "NM", "NS", "ZO", "PS", "PM", "PB")
LABEL_VALUE = {"NB": -3, "NM": -2, "NS": -1, "ZO": 0, "PS": 1, "PM": 2, "PB": 3}

# rows: E from NB to PB; columns: EC from NB to PB; cell: dkp/dki/dkd
_RULES = """
PB/NB/PS PB/NB/NS PM/NM/NB PM/NM/NB PS/NS/NB ZO/ZO/NM ZO/ZO/PS
PB/NB/PS PB/NB/NS PM/NM/NB PS/NS/NM PS/NS/NM ZO/ZO/NS NS/PS/ZO
PM/NB/ZO PM/NM/NS PM/NS/NM PS/NS/NM ZO/ZO/NS NS/PM/NS NS/PM/ZO
PM/NM/ZO PM/NM/NS PS/NS/NS ZO/ZO/NS NS/PS/NS NM/PM/NS NM/PM/ZO
PS/NM/ZO PS/NS/ZO ZO/ZO/ZO NS/PS/ZO NS/PS/ZO NM/PM/ZO NM/PB/ZO
PS/ZO/PB ZO/ZO/PM NS/PS/PM NM/PS/PM NM/PM/PS NM/PB/PS NB/PB/PB
ZO/ZO/PB ZO/ZO/PM NM/PS/PM NM/PM/PM NM/PM/PS NB/PB/PS NB/PB/PB
"""


def _parse_rules() -> np.ndarray:
    rows = [r.split() for r in _RULES.strip().splitlines()]
    table = np.zeros((7, 7, 3))
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            table[i, j] = [LABEL_VALUE[lbl] for lbl in cell.split("/")]
    return table


RULE_TABLE = _parse_rules()
RULE_TABLE_FLAT = np.ascontiguousarray(RULE_TABLE.reshape(-1))

UNIVERSE_CENTERS = np.arange(-6.0, 7.0, 2.0)   # NB..PB membership centers


class TrackingTimeout(RuntimeError):
    """Closed-loop tracking failed to reach the target; carries the trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass
class PidGains:
    kp: float
    ki: float
    kd: float
    integral: float = 0.0
    prev_error: float = 0.0

    def reset(self):
        self.integral = 0.0
        self.prev_error = 0.0


def pid_step(gains: PidGains, error: float, dt: float) -> float:
    """One discrete PID update: u = kp*e + ki*sum(e dt) + kd*(e - e_prev)/dt."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    gains.integral += error * dt
    u = (gains.kp * error + gains.ki * gains.integral
         + gains.kd * (error - gains.prev_error) / dt)
    gains.prev_error = error
    return u


def fuzzify(value: float) -> np.ndarray:
    """Triangular memberships over the seven labels of the [-6, 6] universe.

    Values outside the universe saturate to the nearest edge, adjacent
    memberships sum to one between centers.
    """
    x = min(max(float(value), -6.0), 6.0)
    mu = 1.0 - np.abs(x - UNIVERSE_CENTERS) / 2.0
    return np.maximum(mu, 0.0)


def fuzzy_adjust(e_universe: float, ec_universe: float):
    """Mamdani min-activation over all 49 rules, centroid defuzzification.

    Crisp inputs at label centers reproduce the rule table exactly.
    Returns (dkp, dki, dkd), each within [-3, 3].
    """
    mu_e = fuzzify(e_universe)
    mu_ec = fuzzify(ec_universe)
    weight = np.minimum(mu_e[:, None], mu_ec[None, :])
    wsum = weight.sum()
    if wsum <= 0.0:
        return (0.0, 0.0, 0.0)
    out = (weight[:, :, None] * RULE_TABLE).sum(axis=(0, 1)) / wsum
    return (float(out[0]), float(out[1]), float(out[2]))


def fuzzy_pid_gains(base: PidGains, delta) -> PidGains:
    """Componentwise gain adjustment: k_fuzzy = k + dk."""
    dkp, dki, dkd = delta
    return PidGains(kp=base.kp + dkp, ki=base.ki + dki, kd=base.kd + dkd,
                    integral=base.integral, prev_error=base.prev_error)


# ----------------------------------------------------------------------
# flight profiles

@dataclass
class FlightProfile:
    """Per-slot flight record consumed by the cost model."""
    positions: np.ndarray       # (n_slots, 3), m
    omegas: np.ndarray          # (n_slots, 4), r/min
    energy_per_slot: np.ndarray  # (n_slots,), J
    flight_slots: int           # slots actually spent flying
    controller: str             # "nominal", "classical", or "fuzzy"
    waypoint_slots: np.ndarray = None   # capture slot per waypoint

    @property
    def total_energy(self) -> float:
        return float(self.energy_per_slot.sum())

    def extended(self, n_slots: int, cfg) -> "FlightProfile":
        """Pad with parked hover at the final position up to n_slots."""
        cur = len(self.energy_per_slot)
        if n_slots <= cur:
            return self
        pad = hover_profile(self.positions[-1] if cur else np.zeros(3),
                            n_slots - cur, cfg)
        return FlightProfile(
            positions=np.vstack([self.positions, pad.positions]),
            omegas=np.vstack([self.omegas, pad.omegas]),
            energy_per_slot=np.concatenate([self.energy_per_slot,
                                            pad.energy_per_slot]),
            flight_slots=self.flight_slots,
            controller=self.controller,
            waypoint_slots=self.waypoint_slots,
        )


def hover_profile(position, n_slots: int, cfg) -> FlightProfile:
    """Stationary hover: rotors balance gravity, position fixed."""
    w_h = cfg.hover_speed()
    omegas = np.full((n_slots, 4), w_h)
    per_slot, _ = movement_energy(omegas, cfg.motor_voltage,
                                  cfg.motor_resistance, cfg.motor_potential,
                                  cfg.slot_len)
    return FlightProfile(
        positions=np.tile(np.asarray(position, dtype=float), (n_slots, 1)),
        omegas=omegas,
        energy_per_slot=per_slot,
        flight_slots=0,
        controller="nominal",
    )


def nominal_profile(waypoints, cfg) -> FlightProfile:
    """Open-loop profile: constant speed along the polyline, hover rotors.

    Used when no attitude controller is engaged; the UAV is assumed to
    creep along the planned path at a conservative fraction of v_max with
    rotors at the hover operating point.
    """
    wpts = np.asarray(waypoints, dtype=float)
    if len(wpts) < 2:
        return hover_profile(wpts[0] if len(wpts) else np.zeros(3), 1, cfg)
    seg = np.diff(wpts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg_len)])
    total_len = arc[-1]
    speed = cfg.nominal_speed_frac * cfg.v_max
    n_slots = max(1, int(math.ceil(total_len / speed / cfg.slot_len)))
    s_at = np.minimum(np.arange(1, n_slots + 1) * cfg.slot_len * speed,
                      total_len)
    positions = np.empty((n_slots, 3))
    for axis in range(3):
        positions[:, axis] = np.interp(s_at, arc, wpts[:, axis])
    w_h = cfg.hover_speed()
    omegas = np.full((n_slots, 4), w_h)
    per_slot, _ = movement_energy(omegas, cfg.motor_voltage,
                                  cfg.motor_resistance, cfg.motor_potential,
                                  cfg.slot_len)
    wpt_slots = np.searchsorted(s_at, arc[1:], side="left").astype(np.int32)
    return FlightProfile(positions=positions, omegas=omegas,
                         energy_per_slot=per_slot, flight_slots=n_slots,
                         controller="nominal",
                         waypoint_slots=np.concatenate([[0], wpt_slots]))


def _run_kernel(state0_vec, wpts, cfg, controller, max_ticks,
                params_override=None):
    params = (_kernels.pack_flight_params(cfg) if params_override is None
              else params_override)
    omega_trace = np.zeros((max_ticks, 4))
    pos_trace = np.zeros((max_ticks, 3))
    att_trace = np.zeros((max_ticks, 3))
    wpt_ticks = np.full(len(wpts), -1, dtype=np.int32)
    state0 = np.ascontiguousarray(np.asarray(state0_vec, dtype=float))
    status, n_ticks, energy = _kernels.simulate_path(
        state0, wpts, params, RULE_TABLE_FLAT,
        1 if controller == "fuzzy" else 0,
        max_ticks, omega_trace, pos_trace, att_trace, wpt_ticks)
    return status, n_ticks, energy, omega_trace, pos_trace, att_trace, wpt_ticks


def track_path(state0_vec, waypoints, cfg, controller: str = "fuzzy",
               max_ticks: int = None) -> FlightProfile:
    """Closed-loop flight over the waypoint polyline via the kernel backend.

    ``controller`` selects classical PID ("classical") or the fuzzy-adjusted
    yaw loop ("fuzzy"). Raises TrackingTimeout on non-convergence or
    instability, with the partial position trace attached.
    """
    if controller not in ("classical", "fuzzy"):
        raise ValueError(f"unknown controller kind {controller!r}")
    wpts = np.ascontiguousarray(np.asarray(waypoints, dtype=float))
    if wpts.ndim != 2 or wpts.shape[1] != 3:
        raise ValueError(f"waypoints must be (n, 3), got {wpts.shape}")
    if max_ticks is None:
        max_ticks = int(cfg.flight_timeout_s / cfg.slot_len)
    status, n_ticks, _energy, omega_trace, pos_trace, _att, wpt_ticks = \
        _run_kernel(state0_vec, wpts, cfg, controller, max_ticks)
    if status == _kernels.TIMEOUT:
        raise TrackingTimeout(
            f"{controller} tracking timed out after {n_ticks} ticks",
            trace=pos_trace[:n_ticks])
    if status == _kernels.UNSTABLE:
        raise TrackingTimeout(
            f"{controller} tracking went unstable at tick {n_ticks}",
            trace=pos_trace[:n_ticks])
    omegas = omega_trace[:n_ticks].copy()
    if n_ticks:
        per_slot, _ = movement_energy(omegas, cfg.motor_voltage,
                                      cfg.motor_resistance,
                                      cfg.motor_potential, cfg.slot_len)
    else:
        per_slot = np.zeros(0)
    return FlightProfile(positions=pos_trace[:n_ticks].copy(), omegas=omegas,
                         energy_per_slot=per_slot, flight_slots=n_ticks,
                         controller=controller, waypoint_slots=wpt_ticks)


def track_segment(state0_vec, target, cfg, controller: str = "fuzzy",
                  max_ticks: int = None):
    """Single waypoint-to-waypoint tracking.

    Returns (position trace, rotor trace, segment energy J, segment time s).
    """
    profile = track_path(state0_vec, np.asarray(target, dtype=float)[None, :],
                         cfg, controller=controller, max_ticks=max_ticks)
    return (profile.positions, profile.omegas, profile.total_energy,
            profile.flight_slots * cfg.slot_len)


def yaw_step_settle_time(cfg, step_rad: float = 1.0,
                         controller: str = "fuzzy",
                         duration_s: float = 40.0,
                         band_frac: float = 0.02) -> float:
    """Settle time (s) of a pure yaw step under the selected controller.

    The UAV holds position (cruise speed forced to zero) while the yaw
    reference jumps by ``step_rad``; settling means the yaw error stays
    inside ``band_frac`` of the step for the rest of the run. Returns the
    full duration when the loop never settles.
    """
    n_ticks = int(duration_s / cfg.slot_len)
    params = _kernels.pack_flight_params(cfg).copy()
    params[15] = 0.0      # cruise speed: yaw-only maneuver
    target = np.array([[math.cos(step_rad) * 1e6, math.sin(step_rad) * 1e6,
                        100.0]])
    state0 = np.zeros(12)
    state0[2] = 100.0
    _status, n_run, _e, _om, _pos, att_trace, _wt = _run_kernel(
        state0, target, cfg, controller, n_ticks, params_override=params)
    psi = att_trace[:n_run, 2]
    err = np.abs(psi - step_rad)
    band = band_frac * abs(step_rad)
    outside = np.nonzero(err > band)[0]
    if len(outside) == 0:
        return 0.0
    last_outside = int(outside[-1])
    if last_outside == n_run - 1:
        return duration_s
    return (last_outside + 1) * cfg.slot_len
