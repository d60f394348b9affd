"""Indirect field-oriented controller: speed loop, slip/angle generation, current regulation."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from imdrive import transforms as tf
from imdrive.motor import MotorParams

REGULATION_MODES = ("ideal", "hysteresis")


@dataclass(frozen=True)
class DriveConfig:
    """Controller settings shared by every scenario.

    ``rated_flux`` is the commanded rotor flux linkage (V*s); the flux current
    command is ``rated_flux / Lm``.
    """

    rated_flux: float = 0.3
    ramp_time: float = 0.1
    Kp_w: float = 40.0
    Ki_w: float = 200.0
    iqs_max: float = 100.0
    iqs_rated: float = 50.0
    regulation: str = "ideal"
    hysteresis_band: float = 2.0

    def __post_init__(self):
        if not self.rated_flux > 0.0:
            raise ValueError(f"rated_flux must be > 0, got {self.rated_flux!r}")
        if not self.ramp_time >= 0.0:
            raise ValueError(f"ramp_time must be >= 0, got {self.ramp_time!r}")
        if not (self.iqs_max > 0.0 and self.iqs_rated > 0.0):
            raise ValueError("iqs_max and iqs_rated must be > 0")
        if self.Kp_w < 0.0 or self.Ki_w < 0.0:
            raise ValueError("speed-loop gains must be >= 0")
        if self.regulation not in REGULATION_MODES:
            raise ValueError(f"unknown regulation mode {self.regulation!r}; expected one of {REGULATION_MODES}")
        if not self.hysteresis_band > 0.0:
            raise ValueError(f"hysteresis_band must be > 0, got {self.hysteresis_band!r}")

    def ids_rated(self, params: MotorParams) -> float:
        return self.rated_flux / params.Lm

    def rated_torque(self, params: MotorParams) -> float:
        """Torque at rated flux and rated q-axis current under field orientation."""
        return 1.5 * (params.p / 2.0) * (params.Lm / params.Lr) * self.rated_flux * self.iqs_rated


@dataclass
class SpeedPi:
    """Speed PI with output clamp; the integrator is frozen while saturated (anti-windup)."""

    Kp_w: float
    Ki_w: float
    iqs_max: float
    integ: float = 0.0

    def update(self, error: float, h: float) -> float:
        u = self.Kp_w * error + self.integ
        if u > self.iqs_max:
            u = self.iqs_max
            if error < 0.0:
                self.integ += self.Ki_w * error * h
        elif u < -self.iqs_max:
            u = -self.iqs_max
            if error > 0.0:
                self.integ += self.Ki_w * error * h
        else:
            self.integ += self.Ki_w * error * h
        self.integ = min(max(self.integ, -self.iqs_max), self.iqs_max)
        return u


def speed_loop(omega_ref: float, omega_r: float, pi: SpeedPi, params: MotorParams, h: float) -> float:
    """q-axis current command from mechanical reference ``omega_ref`` and electrical speed ``omega_r``."""
    omega_m = omega_r * 2.0 / params.p
    return pi.update(omega_ref - omega_m, h)


@dataclass(frozen=True)
class IfocState:
    theta_e: float = 0.0
    ids_ref: float = 0.0
    iqs_ref: float = 0.0
    omega_sl_ref: float = 0.0
    Tr_cmd: float = 1.0
    omega_e: float = 0.0


def slip_frequency(iqs_ref: float, ids_ref: float, Tr_cmd: float) -> float:
    if not ids_ref > 0.0:
        raise ValueError(f"flux current command must be > 0 for slip calculation, got {ids_ref!r}")
    if not Tr_cmd > 0.0:
        raise ValueError(f"rotor time constant must be > 0, got {Tr_cmd!r}")
    return iqs_ref / (Tr_cmd * ids_ref)


def slip_and_angle(
    iqs_ref: float, ids_ref: float, Tr_cmd: float, omega_r: float, h: float, state: IfocState
) -> IfocState:
    """Command slip and advance the frame angle by ``(omega_r + omega_sl) * h``."""
    omega_sl = slip_frequency(iqs_ref, ids_ref, Tr_cmd)
    omega_e = omega_r + omega_sl
    return replace(
        state,
        theta_e=state.theta_e + omega_e * h,
        ids_ref=ids_ref,
        iqs_ref=iqs_ref,
        omega_sl_ref=omega_sl,
        Tr_cmd=Tr_cmd,
        omega_e=omega_e,
    )


def ideal_currents(iqs_ref: float, ids_ref: float, theta_e: float) -> tuple[tf.QdSynchronous, tf.ThreePhase]:
    """Current-source regulation: the machine receives the commands exactly."""
    i_sync = tf.QdSynchronous(iqs_ref, ids_ref)
    return i_sync, tf.synchronous_to_abc(i_sync, theta_e)


class HysteresisRegulator:
    """Per-phase bang-bang current regulator driving a two-level inverter.

    Each leg switches to ``+Vd/2`` when its current falls more than ``band``
    below the reference and to ``-Vd/2`` when it rises more than ``band``
    above; inside the band the previous switch state is held.
    """

    def __init__(self, band: float, Vd: float):
        self.band = band
        self.Vd = Vd
        self.switch = [1, 1, 1]

    def pole_voltages(self, i_ref: tf.ThreePhase, i_meas: tf.ThreePhase) -> tf.ThreePhase:
        for k in range(3):
            err = i_ref[k] - i_meas[k]
            if err > self.band:
                self.switch[k] = 1
            elif err < -self.band:
                self.switch[k] = -1
        half = 0.5 * self.Vd
        return tf.ThreePhase(*(half * s for s in self.switch))

    def synchronous_voltage(self, i_ref: tf.ThreePhase, i_meas: tf.ThreePhase, theta_e: float) -> tf.QdSynchronous:
        v_pole = self.pole_voltages(i_ref, i_meas)
        v_ln = tf.phase_to_line_neutral(v_pole)
        return tf.abc_to_synchronous(v_ln, theta_e)


def current_regulation(
    iqs_ref: float,
    ids_ref: float,
    theta_e: float,
    mode: str,
    i_meas: tf.ThreePhase | None = None,
    regulator: HysteresisRegulator | None = None,
):
    """Dispatch to the configured regulation scheme.

    ``ideal`` returns the imposed synchronous currents; ``hysteresis``
    returns the synchronous stator voltage produced by the inverter.
    """
    i_sync, i_ref = ideal_currents(iqs_ref, ids_ref, theta_e)
    if mode == "ideal":
        return i_sync
    if mode == "hysteresis":
        if regulator is None or i_meas is None:
            raise ValueError("hysteresis regulation needs a regulator and measured phase currents")
        return regulator.synchronous_voltage(i_ref, i_meas, theta_e)
    raise ValueError(f"unknown regulation mode {mode!r}")


def rpm_step_reference(rpm: float) -> float:
    """Mechanical speed reference in rad/s."""
    return rpm * 2.0 * math.pi / 60.0
