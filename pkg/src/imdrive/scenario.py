"""Closed-loop drive simulations, built-in experiments, CSV output and run metrics."""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from imdrive import ifoc, integrator, mras, transforms as tf
from imdrive.integrator import IntegratorConfig
from imdrive.mras import AdaptationGains, AdaptationState
from imdrive.motor import (
    MotorInputs,
    MotorParams,
    MotorState,
    currents_from_flux,
    electrical_to_rpm,
    flux_derivatives,
    mechanical_acceleration,
    stator_flux_for_currents,
    torque,
)
from imdrive.observer import ObserverParams, ObserverState, observer_derivatives, rotor_flux_from_motor

CSV_COLUMNS = (
    "t",
    "ia_ref",
    "ib_ref",
    "ic_ref",
    "ia",
    "ib",
    "ic",
    "ids",
    "iqs",
    "Rr_hat",
    "Fqs",
    "Fds",
    "lambda_dr_hat",
    "lambda_qr_hat",
    "omega_r_rpm",
    "Te",
)

STATE_NAMES = ("Fqs", "Fds", "Fqr", "Fdr", "omega_r", "lambda_dr_hat", "lambda_qr_hat")

OBSERVER_RR_SOURCES = ("plant", "estimate")

SETTLING_BAND = 0.05
STEADY_FRACTION = 0.1


class SimulationError(RuntimeError):
    """The closed-loop simulation produced a non-finite state."""


def _profile(points: Iterable[Sequence[float]]) -> tuple[tuple[float, float], ...]:
    return tuple((float(t), float(v)) for t, v in points)


def profile_value(profile: Sequence[tuple[float, float]], t: float) -> float:
    """Piecewise-constant lookup: the value of the last step whose time is <= t."""
    value = 0.0
    for t_k, v_k in profile:
        if t_k > t:
            break
        value = v_k
    return value


@dataclass(frozen=True)
class ScenarioConfig:
    """One closed-loop experiment.

    ``motor.Rr`` is the machine's true rotor resistance. ``cmd_Rr`` is the
    resistance the drive starts from: it sets the slip calculation and is the
    initial estimate when adaptation is enabled. ``observer_rr`` selects the
    resistance the flux observer runs with: ``"plant"`` ties it to the
    machine, ``"estimate"`` to the same value the slip calculation uses.
    """

    name: str = "custom"
    motor: MotorParams = field(default_factory=MotorParams)
    cmd_Rr: float = 0.412
    adaptation_enabled: bool = False
    gains: AdaptationGains = field(default_factory=AdaptationGains)
    drive: ifoc.DriveConfig = field(default_factory=ifoc.DriveConfig)
    speed_profile: tuple[tuple[float, float], ...] = ((0.0, 0.0), (0.1, 250.0))
    load_profile: tuple[tuple[float, float], ...] | None = None
    duration: float = 3.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    output_decimation: int = 20
    observer_rr: str = "plant"

    def __post_init__(self):
        object.__setattr__(self, "speed_profile", _profile(self.speed_profile))
        if self.load_profile is None:
            load = 0.2 * self.drive.rated_torque(self.motor)
            object.__setattr__(self, "load_profile", ((0.0, 0.0), (1.0, load)))
        else:
            object.__setattr__(self, "load_profile", _profile(self.load_profile))
        self.validate()

    @property
    def true_Rr(self) -> float:
        return self.motor.Rr

    @property
    def regulation(self) -> str:
        return self.drive.regulation

    @property
    def adaptation_period(self) -> float:
        return self.gains.T if self.gains.T is not None else self.integrator.h

    @property
    def adaptation_every(self) -> int:
        return int(round(self.adaptation_period / self.integrator.h))

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.integrator.h))

    @property
    def load_time(self) -> float:
        """Time of the first nonzero load step (or 0 when unloaded)."""
        for t, v in self.load_profile:
            if v != 0.0:
                return t
        return 0.0

    @property
    def speed_ref_rpm(self) -> float:
        return self.speed_profile[-1][1] if self.speed_profile else 0.0

    def validate(self) -> None:
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            raise ValueError(f"duration must be > 0, got {self.duration!r}")
        for label, prof in (("speed_profile", self.speed_profile), ("load_profile", self.load_profile)):
            times = [t for t, _ in prof]
            if any(b < a for a, b in zip(times, times[1:])):
                raise ValueError(f"{label} must be sorted by time")
            if not all(math.isfinite(t) and math.isfinite(v) for t, v in prof):
                raise ValueError(f"{label} must contain finite values")
        if not self.gains.Rr_min <= self.cmd_Rr <= self.gains.Rr_max:
            raise ValueError(
                f"cmd_Rr={self.cmd_Rr!r} outside adaptation clamps [{self.gains.Rr_min!r}, {self.gains.Rr_max!r}]"
            )
        if self.observer_rr not in OBSERVER_RR_SOURCES:
            raise ValueError(f"observer_rr must be one of {OBSERVER_RR_SOURCES}, got {self.observer_rr!r}")
        if int(self.output_decimation) != self.output_decimation or self.output_decimation < 1:
            raise ValueError(f"output_decimation must be a positive integer, got {self.output_decimation!r}")
        h_max = integrator.max_stable_step(self.motor, self.gains.Rr_max)
        if self.integrator.h > h_max:
            raise ValueError(f"step size h={self.integrator.h!r} exceeds the stability bound {h_max:.3g} s")
        ratio = self.adaptation_period / self.integrator.h
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(f"adaptation period T={self.adaptation_period!r} must be a positive integer multiple of h")


@dataclass(frozen=True)
class RunSummary:
    final_Rr_hat: float
    Rr_settling_time: float | None
    steady_lambda_qr_ratio: float
    speed_rise_time: float | None
    max_speed_overshoot: float
    final_speed_rpm: float

    def lines(self) -> list[str]:
        settle = "not-settled" if self.Rr_settling_time is None else f"{self.Rr_settling_time:.4f} s"
        rise = "not-reached" if self.speed_rise_time is None else f"{self.speed_rise_time:.4f} s"
        return [
            f"final_Rr_hat           {self.final_Rr_hat:.6f} ohm",
            f"Rr_settling_time       {settle}",
            f"steady_lambda_qr_ratio {self.steady_lambda_qr_ratio:.3e}",
            f"speed_rise_time        {rise}",
            f"max_speed_overshoot    {self.max_speed_overshoot:.3f} %",
            f"final_speed            {self.final_speed_rpm:.3f} rpm",
        ]


class TimeSeries:
    """Logged simulation output, one numpy array per CSV column."""

    def __init__(self, columns: dict[str, np.ndarray]):
        self.columns = columns

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return len(self.columns["t"])

    def to_csv(self, path) -> None:
        path = Path(path)
        data = np.column_stack([self.columns[c] for c in CSV_COLUMNS])
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in data:
                writer.writerow([f"{v:.9g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> TimeSeries:
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            missing = [c for c in CSV_COLUMNS if c not in header]
            if missing:
                raise ValueError(f"CSV is missing columns: {', '.join(missing)}")
            rows = [[float(v) for v in row] for row in reader if row]
        data = np.array(rows, dtype=float).reshape(-1, len(header))
        return cls({name: data[:, k] for k, name in enumerate(header)})


def summarize(series: TimeSeries, true_Rr: float, speed_ref_rpm: float, band: float = SETTLING_BAND) -> RunSummary:
    t = series["t"]
    rr = series["Rr_hat"]
    outside = np.flatnonzero(np.abs(rr - true_Rr) > band * true_Rr)
    if outside.size == 0:
        settle = float(t[0])
    elif outside[-1] == len(t) - 1:
        settle = None
    else:
        settle = float(t[outside[-1] + 1])

    n_tail = max(1, int(math.ceil(STEADY_FRACTION * len(t))))
    lam_dr = np.abs(series["lambda_dr_hat"][-n_tail:])
    lam_qr = np.abs(series["lambda_qr_hat"][-n_tail:])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = float(np.mean(np.where(lam_dr > 0.0, lam_qr / lam_dr, np.inf)))

    rpm = series["omega_r_rpm"]
    rise = None
    overshoot = 0.0
    if speed_ref_rpm != 0.0:
        frac = rpm / speed_ref_rpm
        lo = np.flatnonzero(frac >= 0.1)
        hi = np.flatnonzero(frac >= 0.9)
        if lo.size and hi.size:
            rise = float(t[hi[0]] - t[lo[0]])
        overshoot = max(0.0, float((np.max(frac) - 1.0) * 100.0))
    return RunSummary(
        final_Rr_hat=float(rr[-1]),
        Rr_settling_time=settle,
        steady_lambda_qr_ratio=ratio,
        speed_rise_time=rise,
        max_speed_overshoot=overshoot,
        final_speed_rpm=float(rpm[-1]),
    )


class Simulation:
    """Motor, IFO controller, flux observer and resistance adaptation advanced in lock step.

    The continuous state ``[Fqs, Fds, Fqr, Fdr, omega_r, lambda_dr_hat,
    lambda_qr_hat]`` is integrated with the controller outputs held over each
    step. With ideal current regulation the stator fluxes are algebraic (set
    from the imposed currents) and only the rotor fluxes are dynamic.
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.params = cfg.motor
        self.obs_params = ObserverParams.from_motor(cfg.motor)
        self.h = cfg.integrator.h
        self.x = np.zeros(len(STATE_NAMES))
        self.k = 0
        self.ifoc_state = ifoc.IfocState(Tr_cmd=self.params.Lr / cfg.cmd_Rr)
        self.speed_pi = ifoc.SpeedPi(cfg.drive.Kp_w, cfg.drive.Ki_w, cfg.drive.iqs_max)
        self.adapt = AdaptationState(Rr_hat=cfg.cmd_Rr, enabled=cfg.adaptation_enabled)
        self.regulator = ifoc.HysteresisRegulator(cfg.drive.hysteresis_band, self.params.Vd)
        self.ids_rated = cfg.drive.ids_rated(self.params)
        self._direction = -1 if cfg.observer_rr == "plant" else 1

    @property
    def t(self) -> float:
        return self.k * self.h

    @property
    def Rr_hat(self) -> float:
        return self.adapt.Rr_hat

    def set_Rr_hat(self, value: float, enabled: bool | None = None) -> None:
        self.adapt = replace(
            self.adapt,
            Rr_hat=self.cfg.gains.clamp(value),
            epsilon_prev=0.0,
            enabled=self.adapt.enabled if enabled is None else enabled,
        )

    def observer_Rr(self) -> float:
        return self.params.Rr if self.cfg.observer_rr == "plant" else self.adapt.Rr_hat

    def _motor_state(self, x) -> MotorState:
        return MotorState(x[0], x[1], x[2], x[3], x[4])

    def stator_currents(self, x=None) -> tuple[float, float]:
        """Measured synchronous-frame ``(iqs, ids)``."""
        x = self.x if x is None else x
        iqs, ids, _, _ = currents_from_flux(self._motor_state(x), self.params)
        return iqs, ids

    def _deriv_ideal(self, i_sync, omega_e, TL, Rr_obs):
        params = self.params
        obs_params = self.obs_params
        iqs, ids = i_sync

        def f(t, x):
            Fqs, Fds = stator_flux_for_currents(iqs, ids, x[2], x[3], params)
            state = MotorState(Fqs, Fds, x[2], x[3], x[4])
            _, _, dFqr, dFdr = flux_derivatives(state, MotorInputs(omega_e=omega_e, TL=TL), params)
            dw = mechanical_acceleration(torque(state, iqs, ids, params), TL, params)
            obs = ObserverState(x[5], x[6], Rr_obs)
            dl_dr, dl_qr = observer_derivatives(obs, ids, iqs, omega_e - x[4], obs_params)
            return np.array((0.0, 0.0, dFqr, dFdr, dw, dl_dr, dl_qr))

        return f

    def _deriv_voltage(self, v_sync, omega_e, TL, Rr_obs):
        params = self.params
        obs_params = self.obs_params
        inputs = MotorInputs(vqs=v_sync[0], vds=v_sync[1], omega_e=omega_e, TL=TL)

        def f(t, x):
            state = MotorState(x[0], x[1], x[2], x[3], x[4])
            iqs, ids, _, _ = currents_from_flux(state, params)
            dF = flux_derivatives(state, inputs, params)
            dw = mechanical_acceleration(torque(state, iqs, ids, params), TL, params)
            obs = ObserverState(x[5], x[6], Rr_obs)
            dl_dr, dl_qr = observer_derivatives(obs, ids, iqs, omega_e - x[4], obs_params)
            return np.array((dF[0], dF[1], dF[2], dF[3], dw, dl_dr, dl_qr))

        return f

    def _controls(self):
        """Evaluate the discrete controller at the current sample; returns everything needed to log and step."""
        cfg = self.cfg
        t = self.t
        h = self.h
        x = self.x
        omega_r = x[4]
        iqs_meas, ids_meas = self.stator_currents()

        omega_ref = ifoc.rpm_step_reference(profile_value(cfg.speed_profile, t))
        TL = profile_value(cfg.load_profile, t)
        if cfg.drive.ramp_time > 0.0:
            ids_ref = self.ids_rated * min(1.0, (t + h) / cfg.drive.ramp_time)
        else:
            ids_ref = self.ids_rated
        iqs_ref = ifoc.speed_loop(omega_ref, omega_r, self.speed_pi, self.params, h)

        if self.adapt.enabled and self.k % cfg.adaptation_every == 0:
            self.adapt = mras.adaptation_step(
                x[5],
                x[6],
                self.adapt,
                iqs_meas,
                cfg.gains,
                cfg.adaptation_period,
                iqs_rated=cfg.drive.iqs_rated,
                lambda_dr_ref=cfg.drive.rated_flux,
                direction=self._direction,
            )

        theta_k = self.ifoc_state.theta_e
        Tr_cmd = self.params.Lr / self.adapt.Rr_hat
        self.ifoc_state = ifoc.slip_and_angle(iqs_ref, ids_ref, Tr_cmd, omega_r, h, self.ifoc_state)
        omega_e = self.ifoc_state.omega_e

        i_sync_ref, iabc_ref = ifoc.ideal_currents(iqs_ref, ids_ref, theta_k)
        iabc_meas = tf.synchronous_to_abc(tf.QdSynchronous(iqs_meas, ids_meas), theta_k)
        if cfg.regulation == "ideal":
            drive_input = i_sync_ref
        else:
            drive_input = self.regulator.synchronous_voltage(iabc_ref, iabc_meas, theta_k)
        return t, TL, omega_e, drive_input, iabc_ref, iabc_meas, iqs_meas, ids_meas

    def _row(self, t, iabc_ref, iabc_meas, iqs, ids) -> list[float]:
        x = self.x
        state = self._motor_state(x)
        return [
            t,
            *iabc_ref,
            *iabc_meas,
            ids,
            iqs,
            self.adapt.Rr_hat,
            x[0],
            x[1],
            x[5],
            x[6],
            electrical_to_rpm(x[4], self.params.p),
            torque(state, iqs, ids, self.params),
        ]

    def _sync_stator_flux(self, i_sync) -> None:
        if self.cfg.regulation == "ideal":
            Fqs, Fds = stator_flux_for_currents(i_sync[0], i_sync[1], self.x[2], self.x[3], self.params)
            self.x[0] = Fqs
            self.x[1] = Fds

    def advance(self, n_steps: int, log_every: int | None = None) -> list[list[float]]:
        """Take ``n_steps`` steps, logging every ``log_every``-th sample (pre-step values)."""
        rows: list[list[float]] = []
        for _ in range(n_steps):
            t, TL, omega_e, drive_input, iabc_ref, iabc_meas, iqs, ids = self._controls()
            if self.cfg.regulation == "ideal":
                self._sync_stator_flux(drive_input)
                iqs, ids = drive_input
                iabc_meas = iabc_ref
            if log_every and self.k % log_every == 0:
                rows.append(self._row(t, iabc_ref, iabc_meas, iqs, ids))
            Rr_obs = self.observer_Rr()
            if self.cfg.regulation == "ideal":
                f = self._deriv_ideal(drive_input, omega_e, TL, Rr_obs)
            else:
                f = self._deriv_voltage(drive_input, omega_e, TL, Rr_obs)
            try:
                self.x = integrator.step(self.x, f, t, self.cfg.integrator, STATE_NAMES)
            except integrator.IntegrationError as exc:
                raise SimulationError(f"simulation diverged: {exc}") from exc
            self.k += 1
            if self.cfg.regulation == "ideal":
                self._sync_stator_flux(drive_input)
            if not np.all(np.isfinite(self.x)):
                bad = STATE_NAMES[int(np.flatnonzero(~np.isfinite(self.x))[0])]
                raise SimulationError(f"non-finite state {bad} at t={self.t:.9g} s")
        return rows

    def final_row(self) -> list[float]:
        """Sample at the current time without advancing (controller state untouched)."""
        theta = self.ifoc_state.theta_e
        iabc_ref = tf.synchronous_to_abc(tf.QdSynchronous(self.ifoc_state.iqs_ref, self.ifoc_state.ids_ref), theta)
        iqs, ids = self.stator_currents()
        iabc = tf.synchronous_to_abc(tf.QdSynchronous(iqs, ids), theta)
        return self._row(self.t, iabc_ref, iabc, iqs, ids)

    def rotor_flux(self) -> tuple[float, float]:
        """True machine rotor flux ``(lambda_dr, lambda_qr)`` in the controller frame, V*s."""
        return rotor_flux_from_motor(self.x[2], self.x[3], self.params)


def _series(rows: list[list[float]]) -> TimeSeries:
    data = np.array(rows, dtype=float)
    return TimeSeries({name: data[:, k].copy() for k, name in enumerate(CSV_COLUMNS)})


def run(cfg: ScenarioConfig, out_path=None) -> tuple[TimeSeries, RunSummary]:
    """Simulate ``cfg`` from rest; optionally write the CSV to ``out_path``."""
    sim = Simulation(cfg)
    rows = sim.advance(cfg.n_steps, log_every=cfg.output_decimation)
    if cfg.n_steps % cfg.output_decimation == 0:
        rows.append(sim.final_row())
    series = _series(rows)
    summary = summarize(series, cfg.true_Rr, cfg.speed_ref_rpm)
    if out_path is not None:
        series.to_csv(out_path)
    return series, summary


BUILTIN_NAMES = ("tuned", "half", "quarter", "adapt-quarter")


def builtin_scenarios() -> list[ScenarioConfig]:
    """The tuned baseline and the three detuning/adaptation experiments.

    All four share motor, controller gains and profiles; they differ only in
    the drive's rotor resistance and whether adaptation runs.
    """
    base = ScenarioConfig(name="tuned")
    Rr = base.motor.Rr
    return [
        base,
        replace(base, name="half", cmd_Rr=Rr / 2.0),
        replace(base, name="quarter", cmd_Rr=Rr / 4.0),
        replace(base, name="adapt-quarter", cmd_Rr=Rr / 4.0, adaptation_enabled=True),
    ]


def get_builtin(name: str) -> ScenarioConfig:
    for cfg in builtin_scenarios():
        if cfg.name == name:
            return cfg
    raise KeyError(name)


def config_diff(a: ScenarioConfig, b: ScenarioConfig, prefix: str = "") -> list[str]:
    """Dotted paths of fields that differ between two configs."""
    out = []
    for f in dataclasses.fields(a):
        va, vb = getattr(a, f.name), getattr(b, f.name)
        if dataclasses.is_dataclass(va) and dataclasses.is_dataclass(vb):
            out.extend(config_diff(va, vb, prefix + f.name + "."))
        elif va != vb:
            out.append(prefix + f.name)
    return out
