"""Scenario configuration: every physical, link, and algorithmic constant.

The canonical on-disk format is flat ``key = value`` text (one pair per
line, ``#`` comments). Unknown keys are rejected, and invariant violations
raise instead of clamping. Values not fixed by the system tables ship as
documented defaults (marked "not specified" below); every experiment
records the full resolved config next to its results.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .quadrotor import check_structure


class ConfigError(ValueError):
    """Malformed config document or invariant violation."""


class StructureError(ConfigError):
    """Propeller/airframe constraint (sqrt(2)/2)*l >= R >= l/3 violated."""


@dataclass(frozen=True)
class ScenarioConfig:
    # --- scenario geometry and timeline ---
    rng_seed: int = 1
    area_side: float = 5000.0          # S, m (50000 at full scale)
    area_height: float = 1000.0        # Z, m (3000 at full scale)
    cell_size: float = 100.0           # waypoint grid pitch, m
    slot_len: float = 0.1              # L, s
    horizon_ref: float = 600.0         # task-arrival window, s (not specified)
    num_mds: int = 10                  # K (50 at full scale)
    num_channels: int = 40             # N_c
    battery_capacity_wh: float = 5000.0   # B_c, Wh
    v_max: float = 50.0                # m/s
    z_max: float = 850.0               # m (2500 at full scale)
    weight_epsilon: float = 0.5        # epsilon weighting delay vs energy
    eps_low: float = 0.05              # epsilon sampling domain
    eps_high: float = 1.00

    # --- terrain generation ---
    terrain_max_height: float = 400.0  # m, must stay below z_max
    terrain_roughness: float = 0.55    # octave persistence
    terrain_octaves: int = 4

    # --- UAV rigid body ---
    uav_mass: float = 80.0             # m, kg
    gravity: float = 9.81              # g, m/s^2
    accel_max: float = 5.28            # a, m/s^2 (design acceleration budget)
    arm_length_mm: float = 1150.0      # l, mm (center of mass to rotor)
    inertia_x: float = 0.095           # I_x, kg*m^2
    inertia_y: float = 0.095
    inertia_z: float = 0.187
    thrust_coeff: float = 1.483        # C_T, (N*m*min^2)/r^2
    torque_coeff: float = 2.925        # C_M, (N*m*min^2)/r^2

    # --- atmosphere ---
    gas_pressure: float = 101325.0     # P_g, Pa
    gas_molweight_g: float = 29.0      # M_g, g/mol (converted to kg/mol internally)
    gas_constant: float = 8.314        # R_g, J/(mol*K)
    temp_kelvin: float = 288.15        # ambient temperature for coefficient models

    # --- propeller geometry ---
    prop_blades: int = 2               # N_B
    prop_radius_mm: float = 512.0      # R, mm
    prop_hub_mm: float = 375.0         # r_0, mm (not specified)
    prop_width_mm: float = 250.0       # P_w, mm
    prop_thickness_mm: float = 7.5     # P_t, mm
    prop_mount_angle: float = 0.6      # gamma, rad (not specified)

    # --- motor electrical model (not specified) ---
    motor_voltage: float = 12.0        # V_m, V
    motor_resistance: float = 4.0      # R_m, ohm
    motor_potential: float = 0.774     # P_m, V*min/r

    # --- wireless links (not specified) ---
    carrier_freq: float = 2.0e9        # f_c, Hz
    bandwidth_md_uav: float = 1.0e6    # W per channel, MD<->UAV, Hz
    bandwidth_uav_dc: float = 2.0e7    # W, UAV<->DC, Hz
    noise_power: float = 1.0e-13       # sigma_T^2, W
    interference: float = 0.0          # I_(m,n), W
    obstruction: float = 1.0           # zeta_j
    gamma_alpha: int = 2               # channel-share shape
    gamma_beta: float = 2.0            # channel-share rate
    dc_x: float = 0.0                  # data-center position, m
    dc_y: float = 0.0
    dc_z: float = 50.0
    dc_power: float = 10.0             # p_D, W (fixed, grid powered)

    # --- tasks and computation (not specified) ---
    task_rate: float = 0.05            # lambda_j, tasks/s per MD
    task_size_mean: float = 1.0e6      # bits
    cycles_per_bit: float = 100.0      # c_j
    delta_uav: float = 1.0e-27         # delta_u, effective switched capacitance
    delta_md: float = 1.0e-27          # delta_j
    queue_qbar: float = 1.0            # Qbar
    queue_tau: float = 1.0             # tau
    f_uav_min: float = 2.0e8           # C4 bounds, Hz
    f_uav_max: float = 2.0e9
    f_md_min: float = 1.0e8            # C5 bounds, Hz
    f_md_max: float = 1.0e9
    p_uav_min: float = 0.1             # C6 bounds, W
    p_uav_max: float = 5.0
    p_md_min: float = 0.1              # C7 bounds, W
    p_md_max: float = 2.0

    # --- ACS trajectory planner ---
    acs_ants: int = 30                 # colony size (not specified)
    acs_iters: int = 60                # H (not specified; 80 used at full scale)
    acs_rho: float = 0.25              # rho, evaporation/smoothing rate
    acs_pheromone_init: float = 3.8    # V_P0
    acs_eta: float = 2.5               # eta, heuristic scale
    acs_alpha: float = 1.0             # guidance exponent (not specified)
    acs_beta: float = 2.0              # heuristic exponent (not specified)
    scan_range: float = 200.0          # R_f, m
    backtrack_depth: float = 200.0     # D_b, m
    acs_deposit: float = 8.0           # deposit scale over normalized path cost
    eta_range: float = 200.0           # heuristic decay length, m
    quiet_limit: int = 25              # rule-3 streak length
    cycle_window: int = 6              # rule-1 history window
    acs_max_steps: int = 4000          # per-construction selection budget

    # --- PSO assigner ---
    pso_particles: int = 30            # H (not specified)
    pso_accel1: float = 2.0            # F_A1
    pso_accel2: float = 2.0            # F_A2
    pso_inertia: float = 0.65          # F_I
    pso_threshold: float = 1.0e-4      # stagnation threshold, relative to initial best
    pso_window: int = 20               # successive rounds compared at termination
    pso_max_iters: int = 2000
    pso_penalty: float = 1.0e3         # per-violation fitness penalty scale

    # --- attitude control ---
    pid_z_kp: float = 1.6              # altitude loop (gains not specified; tuned on hover)
    pid_z_ki: float = 0.02
    pid_z_kd: float = 2.2
    pid_att_kp: float = 40.0           # roll/pitch angle loops
    pid_att_ki: float = 0.0
    pid_att_kd: float = 12.0
    pid_yaw_kp: float = 6.0            # yaw loop, fuzzy-adjusted when enabled
    pid_yaw_ki: float = 0.05
    pid_yaw_kd: float = 3.0
    pid_vel_kp: float = 0.9            # along-track speed loop
    fuzzy_e_scale: float = 6.0         # rad of yaw error mapped to universe edge
    fuzzy_ec_scale: float = 1.2        # rad/s of error rate mapped to universe edge
    cruise_frac: float = 0.5           # closed-loop cruise speed / v_max
    nominal_speed_frac: float = 0.35   # open-loop profile speed / v_max
    capture_radius_frac: float = 0.45  # waypoint capture radius / cell_size
    rk4_substeps: int = 10
    flight_timeout_s: float = 3600.0

    # ------------------------------------------------------------------
    @property
    def arm_length_m(self) -> float:
        return self.arm_length_mm / 1000.0

    @property
    def gas_molweight(self) -> float:
        """M_g in kg/mol (table value is g/mol)."""
        return self.gas_molweight_g / 1000.0

    @property
    def battery_capacity_j(self) -> float:
        return self.battery_capacity_wh * 3600.0

    @property
    def backtrack_cells(self) -> int:
        return max(1, int(round(self.backtrack_depth / self.cell_size)))

    def hover_speed(self) -> float:
        """Rotor speed (r/min) balancing gravity, from F_i = C_T * w^2."""
        return math.sqrt(self.uav_mass * self.gravity / (4.0 * self.thrust_coeff))

    def motor_speed_ceiling(self) -> float:
        """Rotor speed at which motor current reaches zero (V_m / P_m)."""
        return self.motor_voltage / self.motor_potential


_FIELDS = {f.name: f.type for f in fields(ScenarioConfig)}
_INT_FIELDS = {f.name for f in fields(ScenarioConfig) if f.type == "int"}

_POSITIVE = [
    "area_side", "area_height", "cell_size", "slot_len", "horizon_ref",
    "num_channels", "battery_capacity_wh", "v_max", "z_max",
    "uav_mass", "gravity", "accel_max", "arm_length_mm",
    "inertia_x", "inertia_y", "inertia_z", "thrust_coeff", "torque_coeff",
    "gas_pressure", "gas_molweight_g", "gas_constant", "temp_kelvin",
    "prop_radius_mm", "prop_hub_mm", "prop_width_mm", "prop_thickness_mm",
    "motor_voltage", "motor_resistance", "motor_potential",
    "carrier_freq", "bandwidth_md_uav", "bandwidth_uav_dc", "noise_power",
    "gamma_beta", "dc_power", "task_rate", "task_size_mean", "cycles_per_bit",
    "delta_uav", "delta_md", "queue_qbar", "queue_tau",
    "f_uav_min", "f_uav_max", "f_md_min", "f_md_max",
    "p_uav_min", "p_uav_max", "p_md_min", "p_md_max",
    "acs_ants", "acs_iters", "acs_pheromone_init", "acs_eta",
    "scan_range", "backtrack_depth", "acs_deposit", "eta_range",
    "quiet_limit", "acs_max_steps",
    "pso_particles", "pso_inertia", "pso_window", "pso_max_iters",
    "fuzzy_e_scale", "fuzzy_ec_scale", "cruise_frac", "nominal_speed_frac",
    "capture_radius_frac", "rk4_substeps", "flight_timeout_s",
]

_BOUND_PAIRS = [
    ("f_uav_min", "f_uav_max"),   # C4
    ("f_md_min", "f_md_max"),     # C5
    ("p_uav_min", "p_uav_max"),   # C6
    ("p_md_min", "p_md_max"),     # C7
]


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check every invariant; raises ConfigError/StructureError, never clamps."""
    for name in _POSITIVE:
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"config key '{name}' must be positive, "
                              f"got {getattr(cfg, name)}")
    if not (0.05 <= cfg.weight_epsilon <= 1.00):
        raise ConfigError(f"weight_epsilon must lie in [0.05, 1.00], "
                          f"got {cfg.weight_epsilon}")
    if not (0.05 <= cfg.eps_low <= cfg.eps_high <= 1.00):
        raise ConfigError("epsilon sampling domain must satisfy "
                          "0.05 <= eps_low <= eps_high <= 1.00")
    for lo, hi in _BOUND_PAIRS:
        if getattr(cfg, lo) > getattr(cfg, hi):
            raise ConfigError(f"bound pair {lo} <= {hi} violated: "
                              f"{getattr(cfg, lo)} > {getattr(cfg, hi)}")
    if cfg.gamma_alpha < 1:
        raise ConfigError("gamma_alpha must be a positive integer")
    if cfg.prop_blades not in (2, 3, 4):
        raise ConfigError(f"prop_blades must be 2, 3 or 4, got {cfg.prop_blades}")
    if cfg.prop_hub_mm >= cfg.prop_radius_mm:
        raise ConfigError("prop_hub_mm must be smaller than prop_radius_mm")
    if cfg.terrain_max_height >= cfg.z_max:
        raise ConfigError("terrain_max_height must stay below z_max")
    if cfg.num_mds < 0:
        raise ConfigError("num_mds must be non-negative")
    if cfg.acs_rho <= 0 or cfg.acs_rho >= 1:
        raise ConfigError("acs_rho must lie in (0, 1)")
    result = check_structure(cfg.prop_radius_mm, cfg.arm_length_mm)
    if not result.ok:
        raise StructureError(
            f"propeller radius violates (sqrt(2)/2)*l >= R >= l/3: "
            f"R={cfg.prop_radius_mm} mm, l={cfg.arm_length_mm} mm "
            f"({result.reason})")
    return cfg


def _parse_value(key: str, raw: str):
    if key in _INT_FIELDS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"config key '{key}' expects an integer, got {raw!r}")
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"config key '{key}' expects a number, got {raw!r}")


def parse_config_text(text: str) -> ScenarioConfig:
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown config key '{key}'")
        if key in overrides:
            raise ConfigError(f"line {lineno}: duplicate config key '{key}'")
        overrides[key] = _parse_value(key, raw)
    return validate_config(replace(ScenarioConfig(), **overrides))


def load_config(path=None) -> ScenarioConfig:
    """Load and validate a config document; defaults apply when path is None."""
    if path is None:
        return validate_config(ScenarioConfig())
    return parse_config_text(Path(path).read_text())


def config_text(cfg: ScenarioConfig) -> str:
    """Canonical full dump, suitable for re-loading and hashing."""
    lines = [f"{f.name} = {getattr(cfg, f.name)!r}".replace("'", "")
             for f in fields(ScenarioConfig)]
    return "\n".join(lines) + "\n"


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()[:12]
