"""Current-model rotor flux observer in the synchronous frame.

Driven by synchronous-frame stator currents and the slip frequency; the
rotor resistance enters only through ``Tr = Lr / Rr``. Flux states are kept in
V*s (the motor model uses V, i.e. multiplied by ``omega_b``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from imdrive.motor import MotorParams


@dataclass(frozen=True)
class ObserverParams:
    Lm: float
    Lr: float

    def __post_init__(self):
        if not self.Lm > 0.0:
            raise ValueError(f"Lm must be > 0, got {self.Lm!r}")
        if not self.Lr > self.Lm:
            raise ValueError(f"Lr must exceed Lm (Lr = Lm + Llr), got Lr={self.Lr!r}, Lm={self.Lm!r}")

    @classmethod
    def from_motor(cls, params: MotorParams) -> ObserverParams:
        return cls(Lm=params.Lm, Lr=params.Lr)

    def Tr(self, Rr: float) -> float:
        if not (Rr > 0.0 and math.isfinite(Rr)):
            raise ValueError(f"rotor resistance must be finite and > 0, got {Rr!r}")
        return self.Lr / Rr


@dataclass(frozen=True)
class ObserverState:
    lambda_dr_hat: float = 0.0
    lambda_qr_hat: float = 0.0
    Rr_hat: float = 0.412


def observer_derivatives(
    obs: ObserverState, ids: float, iqs: float, omega_sl: float, params: ObserverParams
) -> tuple[float, float]:
    """Return ``(d lambda_dr_hat / dt, d lambda_qr_hat / dt)``."""
    Tr = params.Tr(obs.Rr_hat)
    a = 1.0 / Tr
    b = params.Lm * a
    return (
        b * ids - a * obs.lambda_dr_hat + omega_sl * obs.lambda_qr_hat,
        b * iqs - a * obs.lambda_qr_hat - omega_sl * obs.lambda_dr_hat,
    )


def steady_state(ids: float, iqs: float, omega_sl: float, params: ObserverParams, Rr: float) -> tuple[float, float]:
    """Fixed point ``(lambda_dr, lambda_qr)`` of the observer for constant inputs.

    Closed-form solve of the 2x2 linear system; with ``x = omega_sl * Tr``::

        lambda_dr = Lm (ids + x iqs) / (1 + x^2)
        lambda_qr = Lm (iqs - x ids) / (1 + x^2)
    """
    x = omega_sl * params.Tr(Rr)
    den = 1.0 + x * x
    return params.Lm * (ids + x * iqs) / den, params.Lm * (iqs - x * ids) / den


def rotor_flux_from_motor(Fqr: float, Fdr: float, params: MotorParams) -> tuple[float, float]:
    """Convert motor-model rotor fluxes (V) into ``(lambda_dr, lambda_qr)`` in V*s.

    This is the only place the ``omega_b`` scaling between the two state
    conventions is applied.
    """
    return Fdr / params.omega_b, Fqr / params.omega_b
