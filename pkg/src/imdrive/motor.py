"""Krause flux-linkage model of a squirrel-cage induction machine.

State variables are flux linkages per second, ``F = omega_b * lambda``, in a
reference frame rotating at ``omega_e``. Reactances are referred to the base
frequency ``omega_b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

OMEGA_B_60HZ = 2.0 * math.pi * 60.0
LEAKAGE_INDUCTANCE = 1.9e-3
MAGNETIZING_INDUCTANCE = 34e-3


@dataclass(frozen=True)
class MotorParams:
    """Electrical and mechanical constants of the machine."""

    Rs: float = 0.6
    Rr: float = 0.412
    Xls: float = OMEGA_B_60HZ * LEAKAGE_INDUCTANCE
    Xlr: float = OMEGA_B_60HZ * LEAKAGE_INDUCTANCE
    Xm: float = OMEGA_B_60HZ * MAGNETIZING_INDUCTANCE
    p: int = 6
    J: float = 3.0
    omega_b: float = OMEGA_B_60HZ
    Vd: float = 260.0

    def __post_init__(self):
        for name in ("Rs", "Rr", "Xls", "Xlr", "Xm", "J", "omega_b", "Vd"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"MotorParams.{name} must be finite and > 0, got {value!r}")
        if int(self.p) != self.p or self.p < 2 or self.p % 2:
            raise ValueError(f"MotorParams.p must be an even integer >= 2, got {self.p!r}")

    @classmethod
    def from_inductances(cls, Lls: float, Llr: float, Lm: float, omega_b: float = OMEGA_B_60HZ, **kw) -> MotorParams:
        return cls(Xls=omega_b * Lls, Xlr=omega_b * Llr, Xm=omega_b * Lm, omega_b=omega_b, **kw)

    @property
    def Xml_star(self) -> float:
        return 1.0 / (1.0 / self.Xm + 1.0 / self.Xls + 1.0 / self.Xlr)

    @property
    def Lls(self) -> float:
        return self.Xls / self.omega_b

    @property
    def Llr(self) -> float:
        return self.Xlr / self.omega_b

    @property
    def Lm(self) -> float:
        return self.Xm / self.omega_b

    @property
    def Lr(self) -> float:
        return self.Lm + self.Llr

    @property
    def Ls(self) -> float:
        return self.Lm + self.Lls

    @property
    def Tr(self) -> float:
        return self.Lr / self.Rr


@dataclass(frozen=True)
class MotorState:
    Fqs: float = 0.0
    Fds: float = 0.0
    Fqr: float = 0.0
    Fdr: float = 0.0
    omega_r: float = 0.0


@dataclass(frozen=True)
class MotorInputs:
    vqs: float = 0.0
    vds: float = 0.0
    vqr: float = 0.0
    vdr: float = 0.0
    omega_e: float = 0.0
    TL: float = 0.0


@dataclass(frozen=True)
class MotorOutputs:
    iqs: float
    ids: float
    iqr: float
    idr: float
    Fmq: float
    Fmd: float
    Te: float


def magnetizing_flux(state: MotorState, params: MotorParams) -> tuple[float, float]:
    k = params.Xml_star
    Fmq = k * (state.Fqs / params.Xls + state.Fqr / params.Xlr)
    Fmd = k * (state.Fds / params.Xls + state.Fdr / params.Xlr)
    return Fmq, Fmd


def currents_from_flux(state: MotorState, params: MotorParams) -> tuple[float, float, float, float]:
    """Return ``(iqs, ids, iqr, idr)``."""
    Fmq, Fmd = magnetizing_flux(state, params)
    return (
        (state.Fqs - Fmq) / params.Xls,
        (state.Fds - Fmd) / params.Xls,
        (state.Fqr - Fmq) / params.Xlr,
        (state.Fdr - Fmd) / params.Xlr,
    )


def torque(state: MotorState, iqs: float, ids: float, params: MotorParams) -> float:
    return 1.5 * (params.p / 2.0) / params.omega_b * (state.Fds * iqs - state.Fqs * ids)


def mechanical_acceleration(Te: float, TL: float, params: MotorParams) -> float:
    """Rotor electrical acceleration, rad/s^2."""
    return (params.p / 2.0) * (Te - TL) / params.J


def outputs(state: MotorState, params: MotorParams) -> MotorOutputs:
    Fmq, Fmd = magnetizing_flux(state, params)
    iqs = (state.Fqs - Fmq) / params.Xls
    ids = (state.Fds - Fmd) / params.Xls
    iqr = (state.Fqr - Fmq) / params.Xlr
    idr = (state.Fdr - Fmd) / params.Xlr
    return MotorOutputs(iqs, ids, iqr, idr, Fmq, Fmd, torque(state, iqs, ids, params))


def flux_derivatives(
    state: MotorState, inputs: MotorInputs, params: MotorParams
) -> tuple[float, float, float, float]:
    """Time derivatives ``(dFqs, dFds, dFqr, dFdr)`` of the flux linkages per second.

    The stator coupling term is written in dissipative form ``(Fm - Fs)``, the
    same form as the rotor equations.
    """
    wb = params.omega_b
    Fmq, Fmd = magnetizing_flux(state, params)
    we = inputs.omega_e / wb
    wsl = (inputs.omega_e - state.omega_r) / wb
    ks = params.Rs / params.Xls
    kr = params.Rr / params.Xlr
    return (
        wb * (inputs.vqs - we * state.Fds + ks * (Fmq - state.Fqs)),
        wb * (inputs.vds + we * state.Fqs + ks * (Fmd - state.Fds)),
        wb * (inputs.vqr - wsl * state.Fdr + kr * (Fmq - state.Fqr)),
        wb * (inputs.vdr + wsl * state.Fqr + kr * (Fmd - state.Fdr)),
    )


def stator_flux_for_currents(
    iqs: float, ids: float, Fqr: float, Fdr: float, params: MotorParams
) -> tuple[float, float]:
    """Stator fluxes ``(Fqs, Fds)`` that make :func:`currents_from_flux` return ``(iqs, ids)``.

    Used by the current-fed abstraction, where stator currents are imposed and
    only the rotor fluxes remain dynamic.
    """
    Xm, Xlr = params.Xm, params.Xlr
    k = Xm / (Xm + Xlr)
    Fmq = k * (Xlr * iqs + Fqr)
    Fmd = k * (Xlr * ids + Fdr)
    return params.Xls * iqs + Fmq, params.Xls * ids + Fmd


def equivalent_circuit_current(params: MotorParams, V: float, omega_e: float, slip: float) -> complex:
    """Steady-state phase current phasor from the per-phase equivalent circuit.

    ``V`` is the phase voltage amplitude, ``omega_e`` the supply frequency in
    rad/s and ``slip`` the per-unit slip (1 at standstill). Independent of the
    time-domain model; used as a cross-check.
    """
    if slip == 0.0:
        raise ValueError("slip must be nonzero")
    scale = omega_e / params.omega_b
    zs = params.Rs + 1j * params.Xls * scale
    zm = 1j * params.Xm * scale
    zr = params.Rr / slip + 1j * params.Xlr * scale
    return V / (zs + zm * zr / (zm + zr))


def rpm_to_electrical(rpm: float, p: int) -> float:
    return rpm * (2.0 * math.pi / 60.0) * (p / 2.0)


def electrical_to_rpm(omega_r: float, p: int) -> float:
    return omega_r * (2.0 / p) * 60.0 / (2.0 * math.pi)


__all__ = [
    "MotorParams",
    "MotorState",
    "MotorInputs",
    "MotorOutputs",
    "magnetizing_flux",
    "currents_from_flux",
    "torque",
    "mechanical_acceleration",
    "outputs",
    "flux_derivatives",
    "stator_flux_for_currents",
    "equivalent_circuit_current",
    "rpm_to_electrical",
    "electrical_to_rpm",
]
