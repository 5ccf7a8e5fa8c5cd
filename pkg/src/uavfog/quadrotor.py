"""Rigid-body quadrotor model.

Control inputs from rotor speeds, Newton-Euler state propagation with a
fixed-step RK4 integrator, body-to-earth rotation, propeller/air-density
coefficient models, structural feasibility, and motor movement energy.

Rotor speeds are kept in r/min throughout so that thrust F_i = C_T * w_i^2
with the tabulated coefficient units is self-consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

HALF_PI = math.pi / 2.0


class DomainError(ValueError):
    """Input outside the physical domain of the model."""


class InstabilityError(RuntimeError):
    """Attitude left the bounded Euler-angle region; carries the state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class MotorModelError(ValueError):
    """Rotor speed drives the motor-current model negative (w*P_m > V_m)."""


class PropellerError(ValueError):
    """Degenerate or inconsistent propeller geometry."""


# ----------------------------------------------------------------------
# domain types

@dataclass
class UavState:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    phi: float = 0.0          # roll, rad
    theta: float = 0.0        # pitch, rad
    psi: float = 0.0          # yaw, rad
    phi_rate: float = 0.0
    theta_rate: float = 0.0
    psi_rate: float = 0.0
    omega: tuple = (0.0, 0.0, 0.0, 0.0)   # rotor speeds, r/min
    battery_wh: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.vx, self.vy, self.vz,
                         self.phi, self.theta, self.psi,
                         self.phi_rate, self.theta_rate, self.psi_rate])

    @classmethod
    def from_array(cls, arr, omega=(0.0, 0.0, 0.0, 0.0), battery_wh=0.0):
        return cls(*(float(v) for v in arr), omega=tuple(omega),
                   battery_wh=battery_wh)

    @property
    def speed(self) -> float:
        return math.sqrt(self.vx ** 2 + self.vy ** 2 + self.vz ** 2)

    def euler_bounded(self) -> bool:
        return (abs(self.phi) < HALF_PI and abs(self.theta) < HALF_PI
                and abs(self.psi) < math.pi)


@dataclass(frozen=True)
class ControlInput:
    u1: float   # total thrust channel, >= 0
    u2: float   # roll channel
    u3: float   # pitch channel
    u4: float   # yaw channel

    def __post_init__(self):
        if self.u1 < 0:
            raise DomainError(f"u1 must be non-negative, got {self.u1}")


def _default_q_gamma(mount_angle: float):
    return math.sin(mount_angle)


@dataclass(frozen=True)
class PropellerSpec:
    n_blades: int = 2
    radius_mm: float = 512.0
    hub_mm: float = 375.0
    width_mm: float = 250.0
    thickness_mm: float = 7.5
    mount_angle: float = 0.6      # rad
    q_gamma: object = None        # callable(mount_angle) -> blade-angle factor

    def __post_init__(self):
        if self.n_blades not in (2, 3, 4):
            raise PropellerError(f"n_blades must be 2, 3 or 4, got {self.n_blades}")
        if not (self.radius_mm > self.hub_mm > 0):
            raise PropellerError(
                f"need radius > hub > 0, got R={self.radius_mm}, r0={self.hub_mm}")
        if self.width_mm <= 0 or self.thickness_mm <= 0:
            raise PropellerError("blade width and thickness must be positive")

    def blade_angle_factor(self) -> float:
        fn = self.q_gamma if self.q_gamma is not None else _default_q_gamma
        return fn(self.mount_angle)


# ----------------------------------------------------------------------
# operations

def control_inputs(omega, c_t: float, c_m: float) -> ControlInput:
    """Control quantities from the four rotor speeds.

    u1 = C_T*(w1^2+w2^2+w3^2+w4^2), u2 = C_T*(-w2^2+w4^2),
    u3 = C_T*(-w1^2+w3^2),          u4 = C_M*(-w1^2+w2^2-w3^2+w4^2).
    """
    w1, w2, w3, w4 = omega
    if min(w1, w2, w3, w4) < 0:
        raise DomainError(f"rotor speeds must be non-negative, got {omega}")
    s1, s2, s3, s4 = w1 * w1, w2 * w2, w3 * w3, w4 * w4
    return ControlInput(
        u1=c_t * (s1 + s2 + s3 + s4),
        u2=c_t * (-s2 + s4),
        u3=c_t * (-s1 + s3),
        u4=c_m * (-s1 + s2 - s3 + s4),
    )


def rotor_speeds_from_control(u: ControlInput, c_t: float, c_m: float,
                              omega_cap: float = float("inf")):
    """Invert the control-quantity block for the squared speeds.

    The linear system is solved exactly, then squared speeds are clamped to
    [0, omega_cap^2]; the caller should recompute the effective control
    input from the returned speeds when clamping may have engaged.
    """
    q1 = u.u1 / (4.0 * c_t)
    q3 = u.u3 / (2.0 * c_t)
    q2 = u.u2 / (2.0 * c_t)
    q4 = u.u4 / (4.0 * c_m)
    cap = omega_cap * omega_cap
    w1 = min(max(q1 - q3 - q4, 0.0), cap)
    w2 = min(max(q1 - q2 + q4, 0.0), cap)
    w3 = min(max(q1 + q3 - q4, 0.0), cap)
    w4 = min(max(q1 + q2 + q4, 0.0), cap)
    return (math.sqrt(w1), math.sqrt(w2), math.sqrt(w3), math.sqrt(w4))


def rotation_body_to_earth(phi: float, theta: float, psi: float) -> np.ndarray:
    """Body-to-earth rotation matrix (yaw-pitch-roll), orthonormal with det +1."""
    if not (abs(phi) < HALF_PI and abs(theta) < HALF_PI and abs(psi) <= math.pi):
        raise DomainError(
            f"Euler angles out of bounds: phi={phi}, theta={theta}, psi={psi}")
    cph, sph = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cps, sps = math.cos(psi), math.sin(psi)
    return np.array([
        [cth * cps, sph * sth * cps - cph * sps, cph * sth * cps + sph * sps],
        [cth * sps, sph * sth * sps + cph * cps, cph * sth * sps - sph * cps],
        [-sth, sph * cth, cph * cth],
    ])


def dynamics_derivative(state, u1, u2, u3, u4, mass, gravity, arm,
                        ix, iy, iz):
    """Time derivative of [x y z vx vy vz phi theta psi dphi dtheta dpsi].

    Nonlinear Newton-Euler equations; the translational block couples thrust
    through the attitude, the rotational block carries the gyroscopic
    inertia-difference terms.
    """
    vx, vy, vz = state[3], state[4], state[5]
    phi, theta, psi = state[6], state[7], state[8]
    dphi, dtheta, dpsi = state[9], state[10], state[11]
    sph, cph = math.sin(phi), math.cos(phi)
    sth = math.sin(theta)
    cth = math.cos(theta)
    sps, cps = math.sin(psi), math.cos(psi)
    ax = u1 / mass * (sph * sps + cph * sth * cps)
    ay = u1 / mass * (-sph * sps + cph * sth * sps)
    az = u1 / mass * (cph * cth) - gravity
    aphi = (arm * u2 - dtheta * dpsi * (iz - iy)) / ix
    atheta = (arm * u3 - dphi * dpsi * (ix - iz)) / iy
    apsi = (u4 - dphi * dtheta * (iy - ix)) / iz
    return (vx, vy, vz, ax, ay, az, dphi, dtheta, dpsi, aphi, atheta, apsi)


def _rk4(state, u1, u2, u3, u4, dt, mass, gravity, arm, ix, iy, iz):
    k1 = dynamics_derivative(state, u1, u2, u3, u4, mass, gravity, arm, ix, iy, iz)
    s2 = tuple(state[i] + 0.5 * dt * k1[i] for i in range(12))
    k2 = dynamics_derivative(s2, u1, u2, u3, u4, mass, gravity, arm, ix, iy, iz)
    s3 = tuple(state[i] + 0.5 * dt * k2[i] for i in range(12))
    k3 = dynamics_derivative(s3, u1, u2, u3, u4, mass, gravity, arm, ix, iy, iz)
    s4 = tuple(state[i] + dt * k3[i] for i in range(12))
    k4 = dynamics_derivative(s4, u1, u2, u3, u4, mass, gravity, arm, ix, iy, iz)
    return tuple(state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                 for i in range(12))


def step_dynamics(state: UavState, u: ControlInput, params, dt: float,
                  substeps: int = 1, v_max: float = None,
                  z_max: float = None) -> UavState:
    """Propagate the state by dt with fixed-step RK4.

    ``params`` supplies uav_mass, gravity, arm_length_m, inertia_x/y/z
    (any object with those attributes, e.g. a ScenarioConfig). Raises
    InstabilityError when the attitude leaves the bounded Euler region,
    DomainError when the returned state violates a supplied speed or
    altitude limit.
    """
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if not state.euler_bounded():
        raise InstabilityError("initial attitude outside Euler bounds", state)
    vec = tuple(state.as_array())
    h = dt / substeps
    for _ in range(substeps):
        vec = _rk4(vec, u.u1, u.u2, u.u3, u.u4, h,
                   params.uav_mass, params.gravity, params.arm_length_m,
                   params.inertia_x, params.inertia_y, params.inertia_z)
    out = UavState.from_array(vec, omega=state.omega,
                              battery_wh=state.battery_wh)
    if not out.euler_bounded():
        raise InstabilityError(
            f"attitude diverged: phi={out.phi:.3f}, theta={out.theta:.3f}, "
            f"psi={out.psi:.3f}", out)
    if v_max is not None and out.speed > v_max:
        raise DomainError(f"speed {out.speed:.2f} exceeds v_max={v_max} (C1)")
    if z_max is not None and not (0.0 <= out.z <= z_max):
        raise DomainError(f"altitude {out.z:.2f} outside [0, {z_max}] (C2)")
    return out


def air_density(t_kelvin: float, gas_pressure: float = 101325.0,
                gas_molweight: float = 0.029,
                gas_constant: float = 8.314) -> float:
    """Ideal-gas air density rho_a = P_g * M_g / (R_g * T), kg/m^3."""
    if t_kelvin <= 0:
        raise DomainError(f"temperature must be positive, got {t_kelvin} K")
    return gas_pressure * gas_molweight / (gas_constant * t_kelvin)


def torque_and_thrust_coeffs(spec: PropellerSpec, rho_a: float,
                             scale: float = 1.0):
    """Propeller torque and thrust coefficients from blade geometry.

    C_M = (1/2pi)^2 * rho_a * (2R)^5 / (N_B * integral(P_t^4 P_w Q_gamma dr)),
    C_T = C_M / (2R). Lengths enter in meters; the blade integral is
    evaluated numerically over r in [r0, R]. ``scale`` calibrates the
    dimensional stand-ins onto the tabulated coefficient values.
    """
    if rho_a <= 0:
        raise DomainError(f"air density must be positive, got {rho_a}")
    r_m = spec.radius_mm / 1000.0
    r0_m = spec.hub_mm / 1000.0
    p_t = spec.thickness_mm / 1000.0
    p_w = spec.width_mm / 1000.0
    q_g = spec.blade_angle_factor()
    integrand = p_t ** 4 * p_w * q_g
    blade_integral, _ = quad(lambda r: integrand, r0_m, r_m)
    if blade_integral <= 1e-300:
        raise PropellerError(
            f"degenerate blade integral ({blade_integral}) for spec {spec}")
    c_m = scale * (1.0 / (2.0 * math.pi)) ** 2 * rho_a * (2.0 * r_m) ** 5 \
        / (spec.n_blades * blade_integral)
    c_t = c_m / (2.0 * r_m)
    return c_m, c_t


def calibrate_coefficient_scale(spec: PropellerSpec, rho_a: float,
                                target_c_m: float) -> float:
    """Scale factor that maps the geometry model onto a tabulated C_M."""
    raw_c_m, _ = torque_and_thrust_coeffs(spec, rho_a, scale=1.0)
    return target_c_m / raw_c_m


def motor_current(omega_i: float, motor_voltage: float,
                  motor_resistance: float, motor_potential: float) -> float:
    """DC motor current I_i = (V_m - w_i * P_m) / R_m, amps."""
    current = (motor_voltage - omega_i * motor_potential) / motor_resistance
    if current < 0:
        raise MotorModelError(
            f"rotor speed {omega_i} r/min drives current negative "
            f"(w*P_m={omega_i * motor_potential:.3f} > V_m={motor_voltage})")
    return current


def movement_energy(omega_trace, motor_voltage: float, motor_resistance: float,
                    motor_potential: float, slot_len: float):
    """Per-slot and total movement energy over a rotor-speed trace.

    ``omega_trace`` has shape (n_slots, 4); each slot contributes
    sum_i (V_m - w_i * P_m) / R_m * L, joules.
    """
    trace = np.asarray(omega_trace, dtype=float)
    if trace.ndim != 2 or trace.shape[1] != 4:
        raise DomainError(f"omega trace must be (n, 4), got {trace.shape}")
    drops = motor_voltage - trace * motor_potential
    if np.any(drops < 0):
        bad = int(np.argwhere(drops < 0)[0][0])
        raise MotorModelError(
            f"slot {bad}: rotor speed exceeds V_m/P_m motor ceiling")
    per_slot = drops.sum(axis=1) / motor_resistance * slot_len
    return per_slot, float(per_slot.sum())


@dataclass(frozen=True)
class StructureResult:
    ok: bool
    reason: str = ""   # "", "collision", or "underpowered"


def check_structure(radius_mm: float, arm_mm: float) -> StructureResult:
    """Airframe feasibility: l/3 <= R <= (sqrt(2)/2) l.

    Radii above the upper bound risk propeller collision; radii below a
    third of the arm cannot lift the airframe.
    """
    if radius_mm <= 0 or arm_mm <= 0:
        raise DomainError("radius and arm length must be positive")
    tol = 1e-9 * arm_mm
    if radius_mm > math.sqrt(2.0) / 2.0 * arm_mm + tol:
        return StructureResult(False, "collision")
    if radius_mm < arm_mm / 3.0 - tol:
        return StructureResult(False, "underpowered")
    return StructureResult(True)
