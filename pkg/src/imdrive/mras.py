"""MRAS rotor-resistance adaptation.

The reference model is the field-orientation condition ``lambda_qr = 0``; the
flux error is formed against the observer's q-axis rotor flux and a discrete
PI law moves the resistance estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

FORMS = ("literal", "velocity")


@dataclass(frozen=True)
class AdaptationGains:
    """PI gains and limits of the resistance update.

    ``form="literal"`` uses ``dR = Kp*e + Ki*e*T`` on every update (the
    proportional term also accumulates, so the law acts as a pure integrator
    of gain ``Kp + Ki*T`` per sample). ``form="velocity"`` uses the
    incremental PI ``dR = Kp*(e - e_prev) + Ki*e*T``.

    ``T`` of ``None`` means one integration step.
    """

    Kp: float = 5e-4
    Ki: float = 0.0
    T: float | None = None
    Rr_min: float = 0.05
    Rr_max: float = 2.0
    form: str = "literal"
    deadband: float = 0.02
    flux_gate: float = 0.5

    def __post_init__(self):
        if self.T is not None and not (math.isfinite(self.T) and self.T > 0.0):
            raise ValueError(f"adaptation period T must be > 0, got {self.T!r}")
        if not 0.0 < self.Rr_min < self.Rr_max:
            raise ValueError(f"need 0 < Rr_min < Rr_max, got [{self.Rr_min!r}, {self.Rr_max!r}]")
        if self.form not in FORMS:
            raise ValueError(f"unknown adaptation form {self.form!r}; expected one of {FORMS}")
        if not (math.isfinite(self.Kp) and math.isfinite(self.Ki)):
            raise ValueError("adaptation gains must be finite")
        if self.Kp < 0.0 or self.Ki < 0.0:
            raise ValueError(f"adaptation gains must be >= 0, got Kp={self.Kp!r}, Ki={self.Ki!r}")
        if not 0.0 <= self.deadband < 1.0:
            raise ValueError(f"deadband must be a fraction in [0, 1), got {self.deadband!r}")
        if not 0.0 <= self.flux_gate <= 1.0:
            raise ValueError(f"flux_gate must be a fraction in [0, 1], got {self.flux_gate!r}")

    def clamp(self, Rr: float) -> float:
        return min(max(Rr, self.Rr_min), self.Rr_max)


@dataclass(frozen=True)
class AdaptationState:
    Rr_hat: float
    epsilon_prev: float = 0.0
    enabled: bool = True


def flux_error(lambda_qr_hat: float, lambda_qr_ref: float = 0.0) -> float:
    return lambda_qr_ref - lambda_qr_hat


def pi_update(state: AdaptationState, epsilon: float, gains: AdaptationGains, torque_sign: int, T: float) -> AdaptationState:
    """One resistance update with the processed error ``torque_sign * epsilon``.

    ``torque_sign == 0`` holds the estimate and resets the stored error.
    """
    if not state.enabled:
        return state
    if torque_sign == 0:
        return replace(state, epsilon_prev=0.0)
    e = torque_sign * epsilon
    if gains.form == "literal":
        delta = gains.Kp * e + gains.Ki * e * T
    else:
        delta = gains.Kp * (e - state.epsilon_prev) + gains.Ki * e * T
    return replace(state, Rr_hat=gains.clamp(state.Rr_hat + delta), epsilon_prev=e)


def torque_sign(iqs: float, threshold: float) -> int:
    """``sign(iqs)``, or 0 inside the dead band where the flux error carries no resistance information."""
    if abs(iqs) <= threshold:
        return 0
    return 1 if iqs > 0.0 else -1


def adaptation_step(
    lambda_dr_hat: float,
    lambda_qr_hat: float,
    adapt: AdaptationState,
    iqs: float,
    gains: AdaptationGains,
    T: float,
    *,
    iqs_rated: float,
    lambda_dr_ref: float,
    direction: int = 1,
) -> AdaptationState:
    """Flux error plus PI update, gated on established flux and nonzero torque.

    ``direction`` is +1 when the estimate feeds the observer's time constant
    and -1 when it feeds the slip calculation: the flux error's sensitivity to
    the estimate has opposite sign in the two placements.
    """
    if not adapt.enabled:
        return adapt
    sign = torque_sign(iqs, gains.deadband * iqs_rated)
    if abs(lambda_dr_hat) < gains.flux_gate * abs(lambda_dr_ref):
        sign = 0
    return pi_update(adapt, flux_error(lambda_qr_hat), gains, direction * sign, T)
