"""
Quadrotor plant and cascaded flight controller.

The plant is an X-frame rigid body in a north-east-down world frame with forward-
right-down body axes.  The controller is the usual multicopter cascade

    waypoint navigator -> position P -> velocity P -> lean angles
                      -> angle P -> rate PID -> motor mixer -> first order motors

with every gain and limit read from a Configuration.  Configuration values stay in
the flight stack's units (centidegrees, cm/s); ControlGains converts them to SI.

Physics run at 400 Hz and the trace is decimated to 25 Hz.
"""
import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import numpy as np
import pandas as pd

from .lgd_exception import LgdValueError, SimulationDivergedError
from .lgd_logging import lgd_logger
from .lgd_mission import Mission
from .lgd_paramspec import Configuration, ParameterTable, default_table
from .lgd_util import STREAM_SIM, rng_stream

# Plant
MASS = 1.5
ARM = 0.25
INERTIA = np.array([0.02, 0.02, 0.04])
GRAVITY = 9.81
HOVER_THROTTLE = 0.5
MOTOR_TAU = 0.05
YAW_TORQUE_COEF = 0.1
LINEAR_DRAG = 0.1
T_MAX = MASS * GRAVITY / (4.0 * HOVER_THROTTLE)
ARM_XY = ARM / math.sqrt(2.0)

# Motor order: front-right, rear-left, front-left, rear-right.
ROLL_FACTOR = np.array([-1.0, 1.0, 1.0, -1.0])
PITCH_FACTOR = np.array([1.0, -1.0, 1.0, -1.0])
YAW_FACTOR = np.array([1.0, 1.0, -1.0, -1.0])
MIX_SCALE = 0.5

# Controller constants that are not exposed as parameters
RATE_I_LIMIT = 0.5
RATE_D_CUTOFF_HZ = 20.0
RATE_SP_LIMIT = np.radians([360.0, 360.0, 90.0])
VELZ_P = 5.0
VELZ_I = 1.0
VELZ_I_LIMIT = 2.0
ACCEL_Z_MAX = 5.0
THROTTLE_MAX = 1.5
TILT_COMP_FLOOR = 0.5
ESTIMATOR_GAIN = 0.5
LAND_SPEED_FINAL = 0.5
LAND_SLOW_ALT = 2.0
TAKEOFF_DONE_MARGIN = 0.5
GROUND_LIFTOFF_ALT = 1.0
YAW_HOLD_DISTANCE = 2.0

# Sensors
GYRO_NOISE_DPS = 0.05
ACCEL_NOISE = 0.05
ACCEL_LIMIT = 4.0 * GRAVITY
N_IMU = 3

# Timing
DEFAULT_DT = 0.0025
MAX_DT = 0.05
LOG_DECIMATION = 16
DEFAULT_DURATION_CAP = 300.0
DIVERGENCE_RATE = 200.0
DIVERGENCE_SPEED = 500.0

STATE_COLUMNS = ["roll", "pitch", "yaw", "roll_rate", "pitch_rate", "yaw_rate"]
SENSOR_COLUMNS = ["gx", "gy", "gz", "ax", "ay", "az"]
REFERENCE_COLUMNS = ["ref_" + c for c in STATE_COLUMNS]


class Phase(IntEnum):
    TAKEOFF = 0
    WAYPOINT = 1
    LAND = 2


def wrap_degrees(angle):
    """Wrap degrees into (-180, 180]."""
    return 180.0 - np.mod(180.0 - np.asarray(angle, dtype=float), 360.0)


@dataclass(frozen=True, slots=True)
class StateUnit:
    roll: float
    pitch: float
    yaw: float
    roll_rate: float
    pitch_rate: float
    yaw_rate: float

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw, self.roll_rate, self.pitch_rate, self.yaw_rate])

    @classmethod
    def from_array(cls, values) -> "StateUnit":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True, slots=True)
class SensorUnit:
    gyro_x: float
    gyro_y: float
    gyro_z: float
    accel_x: float
    accel_y: float
    accel_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.gyro_x, self.gyro_y, self.gyro_z, self.accel_x, self.accel_y, self.accel_z])

    @classmethod
    def from_array(cls, values) -> "SensorUnit":
        return cls(*(float(v) for v in values))


def quat_to_euler(q: np.ndarray) -> tuple[float, float, float]:
    """ZYX euler angles (radians) of a body-to-world quaternion (w, x, y, z)."""
    w, x, y, z = q
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    pitch = math.asin(max(-1.0, min(1.0, 2.0 * (w * y - z * x))))
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return roll, pitch, yaw


def euler_to_quat(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    return np.array([cr * cp * cy + sr * sp * sy,
                     sr * cp * cy - cr * sp * sy,
                     cr * sp * cy + sr * cp * sy,
                     cr * cp * sy - sr * sp * cy])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _quat_integrate(q: np.ndarray, omega: np.ndarray, dt: float) -> np.ndarray:
    """Rotate q by body rates omega over dt (exact for constant omega)."""
    rate = math.sqrt(omega[0] ** 2 + omega[1] ** 2 + omega[2] ** 2)
    if rate < 1e-12:
        return q
    half = 0.5 * rate * dt
    s = math.sin(half) / rate
    dw, dx, dy, dz = math.cos(half), omega[0] * s, omega[1] * s, omega[2] * s
    w, x, y, z = q
    out = np.array([w * dw - x * dx - y * dy - z * dz,
                    w * dx + x * dw + y * dz - z * dy,
                    w * dy - x * dz + y * dw + z * dx,
                    w * dz + x * dy - y * dx + z * dw])
    return out / math.sqrt(float(out @ out))


@dataclass(slots=True)
class PlantState:
    """
    Rigid body state.  `position` and `velocity` are NED.  `motor_commands` are the
    clamped commands sent to the motors, `motor_commands_raw` the mixer output before
    clamping, `motor_thrust` the lagged motor output as a fraction of full thrust.
    """
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    body_rates: np.ndarray = field(default_factory=lambda: np.zeros(3))
    motor_thrust: np.ndarray = field(default_factory=lambda: np.zeros(4))
    motor_commands: np.ndarray = field(default_factory=lambda: np.zeros(4))
    motor_commands_raw: np.ndarray = field(default_factory=lambda: np.zeros(4))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    landed: bool = True

    @classmethod
    def hovering(cls, position, yaw: float = 0.0) -> "PlantState":
        """Airborne, level, motors at hover thrust."""
        hover = np.full(4, HOVER_THROTTLE)
        return cls(position=np.asarray(position, dtype=float).copy(),
                   quaternion=euler_to_quat(0.0, 0.0, yaw),
                   motor_thrust=hover.copy(), motor_commands=hover.copy(),
                   motor_commands_raw=hover.copy(), landed=False)

    @property
    def altitude(self) -> float:
        return -float(self.position[2])

    @property
    def attitude(self) -> StateUnit:
        roll, pitch, yaw = quat_to_euler(self.quaternion)
        rates = np.degrees(self.body_rates)
        angles = wrap_degrees(np.degrees([roll, pitch, yaw]))
        return StateUnit(float(angles[0]), float(angles[1]), float(angles[2]),
                         float(rates[0]), float(rates[1]), float(rates[2]))

    def is_sane(self) -> bool:
        values = (self.position, self.velocity, self.quaternion, self.body_rates)
        if not all(np.all(np.isfinite(v)) for v in values):
            return False
        return (float(np.max(np.abs(self.body_rates))) < DIVERGENCE_RATE
                and float(np.max(np.abs(self.velocity))) < DIVERGENCE_SPEED)


@dataclass(slots=True)
class ControllerMemory:
    """Integrator, filter and estimator state carried between controller steps."""
    rate_integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rate_error_prev: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rate_derivative: np.ndarray = field(default_factory=lambda: np.zeros(3))
    z_integral: float = 0.0
    est_roll: float = 0.0
    est_pitch: float = 0.0
    initialized: bool = False
    reference: np.ndarray = field(default_factory=lambda: np.zeros(6))


@dataclass(frozen=True, slots=True)
class Setpoint:
    """Navigator output.  NED position, velocity and acceleration feed-forward, yaw in radians."""
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0


@dataclass(frozen=True, slots=True)
class ControlGains:
    """A configuration's gains and limits in SI units."""
    pos_xy_p: float
    vel_xy_p: float
    pos_z_p: float
    ang_p: np.ndarray
    rate_p: np.ndarray
    rate_i: np.ndarray
    rate_d: np.ndarray
    speed: float
    speed_dn: float
    speed_up: float
    accel: float
    angle_max: float
    imu_z: np.ndarray

    @classmethod
    def from_configuration(cls, config: Configuration, table: ParameterTable) -> "ControlGains":
        v = config.as_dict(table)
        return cls(pos_xy_p=v["PSC_POSXY_P"], vel_xy_p=v["PSC_VELXY_P"], pos_z_p=v["PSC_POSZ_P"],
                   ang_p=np.array([v["ATC_ANG_RLL_P"], v["ATC_ANG_PIT_P"], v["ATC_ANG_YAW_P"]]),
                   rate_p=np.array([v["ATC_RAT_RLL_P"], v["ATC_RAT_PIT_P"], v["ATC_RAT_YAW_P"]]),
                   rate_i=np.array([v["ATC_RAT_RLL_I"], v["ATC_RAT_PIT_I"], v["ATC_RAT_YAW_I"]]),
                   rate_d=np.array([v["ATC_RAT_RLL_D"], v["ATC_RAT_PIT_D"], v["ATC_RAT_YAW_D"]]),
                   speed=v["WPNAV_SPEED"] / 100.0, speed_dn=v["WPNAV_SPEED_DN"] / 100.0,
                   speed_up=v["WPNAV_SPEED_UP"] / 100.0, accel=v["WPNAV_ACCEL"] / 100.0,
                   angle_max=math.radians(v["ANGLE_MAX"] / 100.0),
                   imu_z=np.array([v["INS_POS1_Z"], v["INS_POS2_Z"], v["INS_POS3_Z"]]))


@lru_cache(maxsize=1)
def _shipped_table() -> ParameterTable:
    return default_table()


def as_gains(config: Configuration | ControlGains, table: ParameterTable | None = None) -> ControlGains:
    if isinstance(config, ControlGains):
        return config
    return ControlGains.from_configuration(config, table or _shipped_table())


def imu_readings(plant: PlantState, config: Configuration | ControlGains,
                 rng: np.random.Generator | None = None,
                 table: ParameterTable | None = None) -> np.ndarray:
    """
    All three IMUs as a (3, 6) array of [gyro deg/s, accel m/s^2] in body axes.

    Each accelerometer sits at (0, 0, INS_POSn_Z) and sees the body specific force
    plus the centripetal lever-arm term.  `rng=None` gives noiseless readings.
    """
    gains = as_gains(config, table)
    rot = quat_to_matrix(plant.quaternion)
    specific = rot.T @ (plant.acceleration - np.array([0.0, 0.0, GRAVITY]))
    wx, wy, wz = plant.body_rates
    out = np.empty((N_IMU, 6))
    out[:, 0:3] = np.degrees(plant.body_rates)
    # w x (w x r) for r = (0, 0, z)
    centripetal = np.array([wx * wz, wy * wz, -(wx * wx + wy * wy)])
    out[:, 3:6] = specific + np.outer(gains.imu_z, centripetal)
    if rng is not None:
        out[:, 0:3] += rng.normal(0.0, GYRO_NOISE_DPS, size=(N_IMU, 3))
        out[:, 3:6] += rng.normal(0.0, ACCEL_NOISE, size=(N_IMU, 3))
    norms = np.linalg.norm(out[:, 3:6], axis=1)
    over = norms > ACCEL_LIMIT
    if np.any(over):
        out[over, 3:6] *= (ACCEL_LIMIT / norms[over])[:, None]
    return out


def sensor_read(plant: PlantState, config: Configuration | ControlGains,
                rng: np.random.Generator | None = None, imu: int = 1,
                table: ParameterTable | None = None) -> SensorUnit:
    """One IMU's reading (imu is 1-based to match INS_POS1_Z..INS_POS3_Z)."""
    if not 1 <= imu <= N_IMU:
        raise LgdValueError(f"imu must be in 1..{N_IMU}, got {imu}")
    return SensorUnit.from_array(imu_readings(plant, config, rng, table)[imu - 1])


def _limit_norm(vec: np.ndarray, limit: float) -> np.ndarray:
    norm = math.hypot(*vec)
    if norm > limit > 0.0:
        return vec * (limit / norm)
    return vec


def _update_estimator(memory: ControllerMemory, plant: PlantState, imu: np.ndarray, dt: float) -> None:
    """
    Complementary filter on roll and pitch.  Gyro rates are integrated and nudged
    toward the tilt implied by the accelerometers once the known kinematic
    acceleration is removed.  Lever-arm terms are not removed.
    """
    if not memory.initialized:
        roll, pitch, _ = quat_to_euler(plant.quaternion)
        memory.est_roll, memory.est_pitch = roll, pitch
        memory.initialized = True
        return

    p, q, r = np.radians(imu[:, 0:3].mean(axis=0))
    rot = quat_to_matrix(plant.quaternion)
    ax, ay, az = imu[:, 3:6].mean(axis=0) - rot.T @ plant.acceleration

    roll, pitch = memory.est_roll, memory.est_pitch
    sr, cr = math.sin(roll), math.cos(roll)
    roll_dot = p + (q * sr + r * cr) * math.tan(pitch)
    pitch_dot = q * cr - r * sr
    roll += roll_dot * dt
    pitch += pitch_dot * dt

    roll_acc = math.atan2(-ay, -az)
    pitch_acc = math.atan2(ax, math.hypot(ay, az))
    k = ESTIMATOR_GAIN * dt
    roll += k * math.remainder(roll_acc - roll, 2 * math.pi)
    pitch += k * (pitch_acc - pitch)
    memory.est_roll = math.remainder(roll, 2 * math.pi)
    memory.est_pitch = pitch


def integrate_plant(plant: PlantState, commands: np.ndarray, dt: float,
                    raw_commands: np.ndarray | None = None,
                    ground_clamp: bool = True) -> PlantState:
    """
    Advance the rigid body one semi-implicit Euler step under clamped motor commands.

    When `ground_clamp` is set the body rests on the ground instead of sinking
    below it.  Otherwise it is allowed to pass altitude zero so the caller can
    observe the impact.
    """
    commands = np.clip(commands, 0.0, 1.0)
    thrust_frac = plant.motor_thrust + (commands - plant.motor_thrust) * (dt / MOTOR_TAU)
    thrusts = thrust_frac * T_MAX
    total = float(thrusts.sum())

    torque = np.array([ARM_XY * float(ROLL_FACTOR @ thrusts),
                       ARM_XY * float(PITCH_FACTOR @ thrusts),
                       YAW_TORQUE_COEF * float(YAW_FACTOR @ thrusts)])
    w = plant.body_rates
    iw = INERTIA * w
    gyroscopic = np.array([w[1] * iw[2] - w[2] * iw[1], w[2] * iw[0] - w[0] * iw[2], w[0] * iw[1] - w[1] * iw[0]])
    w_dot = (torque - gyroscopic) / INERTIA

    raw = commands.copy() if raw_commands is None else np.asarray(raw_commands, dtype=float).copy()

    if plant.landed:
        rot = quat_to_matrix(plant.quaternion)
        lift = -total * rot[2, 2] / MASS + GRAVITY
        if lift >= 0.0:
            return PlantState(position=np.array([plant.position[0], plant.position[1], 0.0]),
                              velocity=np.zeros(3), quaternion=plant.quaternion,
                              body_rates=np.zeros(3), motor_thrust=thrust_frac,
                              motor_commands=commands, motor_commands_raw=raw,
                              acceleration=np.zeros(3), landed=True)

    body_rates = w + w_dot * dt
    quaternion = _quat_integrate(plant.quaternion, body_rates, dt)
    rot = quat_to_matrix(quaternion)
    accel = -total / MASS * rot[:, 2] + np.array([0.0, 0.0, GRAVITY]) - (LINEAR_DRAG / MASS) * plant.velocity
    velocity = plant.velocity + accel * dt
    position = plant.position + velocity * dt

    landed = False
    if ground_clamp and position[2] >= 0.0:
        position = np.array([position[0], position[1], 0.0])
        velocity = np.zeros(3)
        body_rates = np.zeros(3)
        accel = np.zeros(3)
        landed = True

    return PlantState(position=position, velocity=velocity, quaternion=quaternion,
                      body_rates=body_rates, motor_thrust=thrust_frac,
                      motor_commands=commands, motor_commands_raw=raw,
                      acceleration=accel, landed=landed)


def step(plant: PlantState,
         memory: ControllerMemory,
         config: Configuration | ControlGains,
         setpoint: Setpoint,
         dt: float,
         *,
         imu: np.ndarray | None = None,
         table: ParameterTable | None = None,
         ground_clamp: bool = True,
         time: float = 0.0) -> tuple[PlantState, ControllerMemory, np.ndarray]:
    """
    Run the controller cascade once and integrate the plant by `dt`.

    `imu` is the (3, 6) sensor block the controller sees this step; when omitted
    noiseless readings are used.  `memory` is updated in place and also returned.
    `time` is the timestamp of the incoming state and is only used for error reporting.

    Returns (new plant, memory, clamped motor commands).

    Raises:
        SimulationDivergedError: the new state is non-finite or unbounded.
    """
    if not 0.0 < dt <= MAX_DT:
        raise LgdValueError(f"dt must be in (0, {MAX_DT}], got {dt}")
    gains = as_gains(config, table)
    if imu is None:
        imu = imu_readings(plant, gains, None)

    _update_estimator(memory, plant, imu, dt)
    roll, pitch = memory.est_roll, memory.est_pitch
    _, _, yaw = quat_to_euler(plant.quaternion)
    gyro = np.radians(imu[:, 0:3].mean(axis=0))
    pos, vel = plant.position, plant.velocity

    # Vertical: position P -> climb rate -> acceleration -> tilt compensated throttle.
    vz_sp = gains.pos_z_p * (setpoint.position[2] - pos[2]) + setpoint.velocity[2]
    vz_sp = min(max(vz_sp, -gains.speed_up), gains.speed_dn)
    vz_err = vz_sp - vel[2]
    if plant.landed:
        memory.z_integral = 0.0
    else:
        memory.z_integral = min(max(memory.z_integral + vz_err * dt, -VELZ_I_LIMIT / VELZ_I), VELZ_I_LIMIT / VELZ_I)
    az_sp = VELZ_P * vz_err + VELZ_I * memory.z_integral + setpoint.accel[2]
    az_sp = min(max(az_sp, -ACCEL_Z_MAX), ACCEL_Z_MAX)
    tilt = max(math.cos(roll) * math.cos(pitch), TILT_COMP_FLOOR)
    throttle = MASS * (GRAVITY - az_sp) / tilt / (4.0 * T_MAX)
    throttle = min(max(throttle, 0.0), THROTTLE_MAX)

    # Horizontal: position P -> velocity -> acceleration -> lean angles.
    if plant.landed:
        roll_sp = pitch_sp = 0.0
    else:
        v_sp = setpoint.velocity[:2] + gains.pos_xy_p * (setpoint.position[:2] - pos[:2])
        v_sp = _limit_norm(v_sp, gains.speed)
        a_sp = setpoint.accel[:2] + gains.vel_xy_p * (v_sp - vel[:2])
        a_sp = _limit_norm(a_sp, gains.accel)
        cy, sy = math.cos(yaw), math.sin(yaw)
        a_fwd = cy * a_sp[0] + sy * a_sp[1]
        a_right = -sy * a_sp[0] + cy * a_sp[1]
        pitch_sp = -math.atan2(a_fwd, GRAVITY)
        pitch_sp = min(max(pitch_sp, -gains.angle_max), gains.angle_max)
        roll_sp = math.atan2(a_right * math.cos(pitch_sp), GRAVITY)
        roll_sp = min(max(roll_sp, -gains.angle_max), gains.angle_max)

    # Angle P -> euler rate setpoints -> body rate setpoints.
    yaw_err = math.remainder(setpoint.yaw - yaw, 2 * math.pi)
    euler_rate = gains.ang_p * np.array([roll_sp - roll, pitch_sp - pitch, yaw_err])
    euler_rate = np.clip(euler_rate, -RATE_SP_LIMIT, RATE_SP_LIMIT)
    sr, cr, sp_, cp = math.sin(roll), math.cos(roll), math.sin(pitch), math.cos(pitch)
    rate_sp = np.array([euler_rate[0] - sp_ * euler_rate[2],
                        cr * euler_rate[1] + sr * cp * euler_rate[2],
                        -sr * euler_rate[1] + cr * cp * euler_rate[2]])

    # Rate PID, output normalized to [-1, 1].
    err = rate_sp - gyro
    if plant.landed:
        memory.rate_integral[:] = 0.0
        memory.rate_derivative[:] = 0.0
        out = np.zeros(3)
    else:
        memory.rate_integral += err * dt
        with np.errstate(divide="ignore", invalid="ignore"):
            i_cap = np.where(gains.rate_i > 0.0, RATE_I_LIMIT / gains.rate_i, 0.0)
        memory.rate_integral = np.clip(memory.rate_integral, -i_cap, i_cap)
        alpha = dt / (dt + 1.0 / (2.0 * math.pi * RATE_D_CUTOFF_HZ))
        memory.rate_derivative += alpha * ((err - memory.rate_error_prev) / dt - memory.rate_derivative)
        out = gains.rate_p * err + gains.rate_i * memory.rate_integral + gains.rate_d * memory.rate_derivative
        out = np.clip(out, -1.0, 1.0)
    memory.rate_error_prev = err

    memory.reference = np.concatenate([
        np.degrees([roll_sp, pitch_sp]),
        wrap_degrees([math.degrees(setpoint.yaw)]),
        np.degrees(rate_sp),
    ])

    raw = throttle + MIX_SCALE * (ROLL_FACTOR * out[0] + PITCH_FACTOR * out[1] + YAW_FACTOR * out[2])
    commands = np.clip(raw, 0.0, 1.0)
    new_plant = integrate_plant(plant, commands, dt, raw_commands=raw, ground_clamp=ground_clamp)
    if not new_plant.is_sane():
        raise SimulationDivergedError(last_time=time)
    return new_plant, memory, commands


class Navigator:
    """
    Turns a Mission into setpoints: climb, fly each leg with a target that moves at
    WPNAV_SPEED (accelerating and braking at half of WPNAV_ACCEL and waiting when the
    vehicle falls a leash length behind), then descend and land.
    """

    def __init__(self, mission: Mission, gains: ControlGains):
        self.mission = mission
        self.gains = gains
        self.phase = Phase.TAKEOFF
        self.leg = -1
        self._legs = [(self._ned(a), self._ned(b)) for a, b in mission.legs()]
        self._target_alt = 0.0
        self._s = 0.0
        self._v = 0.0
        self._yaw = 0.0
        self._land_xy = np.zeros(2)

    @staticmethod
    def _ned(point) -> np.ndarray:
        return np.array([point[0], point[1], -point[2]], dtype=float)

    @property
    def leash(self) -> float:
        return max(5.0, 2.0 * self.gains.speed)

    def _start_land(self, plant: PlantState) -> None:
        self.phase = Phase.LAND
        self._land_xy = (self._legs[-1][1][:2] if self._legs else np.zeros(2)).copy()
        self._target_alt = plant.altitude

    def update(self, plant: PlantState, dt: float) -> Setpoint:
        g = self.gains
        if self.phase == Phase.TAKEOFF:
            takeoff = self.mission.takeoff_altitude
            self._target_alt = min(takeoff, self._target_alt + g.speed_up * dt)
            climbing = self._target_alt < takeoff
            if plant.altitude >= takeoff - TAKEOFF_DONE_MARGIN:
                if self._legs:
                    self.phase, self.leg, self._s, self._v = Phase.WAYPOINT, 0, 0.0, 0.0
                else:
                    self._start_land(plant)
            else:
                return Setpoint(position=np.array([0.0, 0.0, -self._target_alt]),
                                velocity=np.array([0.0, 0.0, -g.speed_up if climbing else 0.0]),
                                yaw=self._yaw)

        if self.phase == Phase.WAYPOINT:
            start, end = self._legs[self.leg]
            delta = end - start
            length = float(np.linalg.norm(delta))
            direction = delta / length if length > 1e-9 else np.zeros(3)
            v_max = g.speed
            if length > 1e-9 and abs(direction[2]) > 1e-9:
                vertical_limit = g.speed_dn if direction[2] > 0 else g.speed_up
                v_max = min(v_max, vertical_limit / abs(direction[2]))
            a_nav = 0.5 * g.accel
            remaining = max(length - self._s, 0.0)
            v_des = min(v_max, math.sqrt(2.0 * a_nav * remaining))
            target = start + direction * self._s
            if float(np.linalg.norm(target - plant.position)) > self.leash:
                v_des = 0.0
            v_prev = self._v
            self._v = min(max(v_des, v_prev - 2.0 * a_nav * dt), v_prev + a_nav * dt)
            self._s = min(self._s + self._v * dt, length)
            target = start + direction * self._s

            horizontal = end[:2] - plant.position[:2]
            if math.hypot(*horizontal) > YAW_HOLD_DISTANCE:
                self._yaw = math.atan2(horizontal[1], horizontal[0])

            if self._s >= length and float(np.linalg.norm(plant.position - end)) <= self.mission.acceptance_radius:
                if self.leg + 1 < len(self._legs):
                    self.leg += 1
                    self._s, self._v = 0.0, 0.0
                else:
                    self._start_land(plant)
            if self.phase == Phase.WAYPOINT:
                return Setpoint(position=target, velocity=direction * self._v,
                                accel=direction * ((self._v - v_prev) / dt), yaw=self._yaw)

        rate = g.speed_dn if self._target_alt > LAND_SLOW_ALT else min(LAND_SPEED_FINAL, g.speed_dn)
        self._target_alt = max(self._target_alt - rate * dt, -1.0)
        return Setpoint(position=np.array([self._land_xy[0], self._land_xy[1], -self._target_alt]),
                        velocity=np.array([0.0, 0.0, rate]), yaw=self._yaw)


@dataclass
class FlightTrace:
    """
    A decimated flight record stored column-wise.  Row i of every array belongs to
    timestamp times[i].  `events` holds (timestamp, tag) pairs such as
    'injection', 'landed', 'ground_contact', 'diverged' and 'timeout'.
    """
    times: np.ndarray
    state: np.ndarray
    sensors: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    motor_raw: np.ndarray
    motor: np.ndarray
    reference: np.ndarray
    phase: np.ndarray
    leg: np.ndarray
    target: np.ndarray
    config: Configuration
    events: list[tuple[float, str]] = field(default_factory=list)
    injected_config: Configuration | None = None
    mission: Mission | None = None
    log_interval: float = DEFAULT_DT * LOG_DECIMATION

    def __len__(self) -> int:
        return len(self.times)

    @property
    def altitude(self) -> np.ndarray:
        return -self.position[:, 2]

    @property
    def tags(self) -> list[str]:
        return [tag for _, tag in self.events]

    def has_event(self, tag: str) -> bool:
        return tag in self.tags

    @property
    def diverged(self) -> bool:
        return self.has_event("diverged")

    def state_unit(self, i: int) -> StateUnit:
        return StateUnit.from_array(self.state[i])

    def sensor_unit(self, i: int) -> SensorUnit:
        return SensorUnit.from_array(self.sensors[i])


class _TraceRecorder:
    def __init__(self):
        self.rows: list[tuple] = []

    def record(self, t: float, plant: PlantState, imu1: np.ndarray, memory: ControllerMemory,
               phase: Phase, leg: int, setpoint: Setpoint) -> None:
        self.rows.append((t, plant.attitude.as_array(), imu1.copy(), plant.position.copy(),
                          plant.velocity.copy(), plant.motor_commands_raw.copy(), plant.motor_commands.copy(),
                          memory.reference.copy(), int(phase), int(leg), setpoint.position.copy()))

    def build(self, **kwargs) -> FlightTrace:
        def column(i, width):
            if not self.rows:
                return np.zeros((0, width))
            return np.array([r[i] for r in self.rows], dtype=float).reshape(len(self.rows), width)

        return FlightTrace(times=np.array([r[0] for r in self.rows], dtype=float),
                           state=column(1, 6), sensors=column(2, 6), position=column(3, 3),
                           velocity=column(4, 3), motor_raw=column(5, 4), motor=column(6, 4),
                           reference=column(7, 6),
                           phase=np.array([r[8] for r in self.rows], dtype=int),
                           leg=np.array([r[9] for r in self.rows], dtype=int),
                           target=column(10, 3), **kwargs)


@dataclass(frozen=True, slots=True)
class Injection:
    """Swap in `config` at `time` seconds after launch."""
    time: float
    config: Configuration


def takeoff_estimate(config: Configuration | ControlGains, mission: Mission,
                     table: ParameterTable | None = None) -> float:
    """Rough time at which the climb to takeoff altitude completes."""
    gains = as_gains(config, table)
    return mission.takeoff_altitude / gains.speed_up + 2.0


def run_mission(config: Configuration,
                mission: Mission,
                injection: Injection | None = None,
                seed: int = 0,
                dt: float = DEFAULT_DT,
                duration_cap: float = DEFAULT_DURATION_CAP,
                table: ParameterTable | None = None) -> FlightTrace:
    """
    Fly `mission` from the ground with `config` and return the 25 Hz trace.

    The flight ends when the vehicle lands after the last waypoint, touches the
    ground outside takeoff and landing, diverges numerically, or reaches
    `duration_cap`.  A ground contact is followed to the next log tick so the trace
    ends with the impact sample.  Divergence ends the trace at the last finite
    sample.
    """
    if not duration_cap > 0.0:
        raise LgdValueError(f"duration_cap must be positive, got {duration_cap}")
    if not 0.0 < dt <= MAX_DT:
        raise LgdValueError(f"dt must be in (0, {MAX_DT}], got {dt}")
    table = table or _shipped_table()
    gains = as_gains(config, table)
    if injection is not None and not injection.time > takeoff_estimate(gains, mission):
        raise LgdValueError(f"injection at t={injection.time}s precedes takeoff completion "
                            f"(~{takeoff_estimate(gains, mission):.1f}s)")

    rng = rng_stream(seed, STREAM_SIM)
    plant = PlantState()
    memory = ControllerMemory()
    nav = Navigator(mission, gains)
    recorder = _TraceRecorder()
    events: list[tuple[float, str]] = []
    injected = False
    stop_tag: str | None = None
    max_alt = 0.0
    n_steps = int(round(duration_cap / dt))

    for k in range(n_steps + 1):
        t = k * dt
        if injection is not None and not injected and t >= injection.time:
            gains = as_gains(injection.config, table)
            nav.gains = gains
            injected = True
            events.append((t, "injection"))

        setpoint = nav.update(plant, dt)
        imu = imu_readings(plant, gains, rng)
        if k % LOG_DECIMATION == 0:
            recorder.record(t, plant, imu[0], memory, nav.phase, nav.leg, setpoint)
            if stop_tag is not None:
                events.append((t, stop_tag))
                break
            if k == n_steps:
                events.append((t, "timeout"))
                break

        clamp = nav.phase == Phase.LAND or (nav.phase == Phase.TAKEOFF and max_alt < GROUND_LIFTOFF_ALT)
        if stop_tag == "ground_contact":
            clamp = False
        try:
            plant, memory, _ = step(plant, memory, gains, setpoint, dt, imu=imu, ground_clamp=clamp, time=t)
        except SimulationDivergedError as error:
            events.append((error.last_time, "diverged"))
            lgd_logger.debug("Simulation diverged after t=%.3f", error.last_time)
            break
        max_alt = max(max_alt, plant.altitude)
        if stop_tag is None:
            if nav.phase == Phase.LAND and plant.landed:
                stop_tag = "landed"
            elif not clamp and plant.position[2] >= 0.0:
                stop_tag = "ground_contact"

    return recorder.build(config=config, events=events,
                          injected_config=injection.config if injection is not None else None,
                          mission=mission, log_interval=dt * LOG_DECIMATION)


def trace_frame(trace: FlightTrace) -> pd.DataFrame:
    """Decimated trace as a DataFrame with the flight-log columns first."""
    frame = pd.DataFrame({"t": trace.times})
    for i, name in enumerate(STATE_COLUMNS):
        frame[name] = trace.state[:, i]
    for i, name in enumerate(SENSOR_COLUMNS):
        frame[name] = trace.sensors[:, i]
    for i, name in enumerate(REFERENCE_COLUMNS):
        frame[name] = trace.reference[:, i]
    frame["north"], frame["east"], frame["altitude"] = trace.position[:, 0], trace.position[:, 1], trace.altitude
    frame["phase"] = trace.phase
    return frame
