"""Fixed-step explicit integration (forward Euler, classical RK4)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from imdrive.motor import MotorParams

Derivative = Callable[[float, np.ndarray], np.ndarray]

METHODS = ("euler", "rk4")

# Fraction of the fastest leakage time constant allowed as a step.
STABILITY_FRACTION = 0.1


class IntegrationError(ArithmeticError):
    """A derivative evaluation produced a non-finite value."""

    def __init__(self, t: float, index: int, name: str | None = None):
        self.t = t
        self.index = index
        self.name = name
        label = name if name is not None else f"component {index}"
        super().__init__(f"non-finite derivative at t={t:.9g} s in {label}")


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 50e-6
    method: str = "rk4"

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0.0):
            raise ValueError(f"step size must be finite and > 0, got {self.h!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown integration method {self.method!r}; expected one of {METHODS}")


def max_stable_step(params: MotorParams, Rr_max: float | None = None) -> float:
    """Upper bound on ``h`` for the motor model.

    The fastest electrical mode of the flux-linkage model decays on the
    leakage time scale ``X_l / (R * omega_b)``; the step is kept to a tenth
    of the shortest one, which also keeps ``h * omega_b`` well inside the
    RK4 stability region for the rotating-frame terms.
    """
    rr = max(params.Rr, Rr_max or 0.0)
    tau = min(params.Xls / (params.Rs * params.omega_b), params.Xlr / (rr * params.omega_b))
    return STABILITY_FRACTION * tau


def _check(t: float, k: np.ndarray, names: Sequence[str] | None) -> np.ndarray:
    # one reduction on the hot path; a non-finite sum localizes the bad component below
    if not math.isfinite(k.sum()):
        bad = np.flatnonzero(~np.isfinite(k))
        if bad.size == 0:
            return k
        idx = int(bad[0])
        raise IntegrationError(t, idx, names[idx] if names is not None else None)
    return k


def step(
    x: np.ndarray,
    deriv: Derivative,
    t: float,
    cfg: IntegratorConfig,
    names: Sequence[str] | None = None,
) -> np.ndarray:
    """Advance ``x`` from ``t`` to ``t + cfg.h``."""
    h = cfg.h
    k1 = _check(t, deriv(t, x), names)
    if cfg.method == "euler":
        return x + h * k1
    k2 = _check(t, deriv(t + 0.5 * h, x + (0.5 * h) * k1), names)
    k3 = _check(t, deriv(t + 0.5 * h, x + (0.5 * h) * k2), names)
    k4 = _check(t, deriv(t + h, x + h * k3), names)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(x0, deriv: Derivative, t0: float, n_steps: int, cfg: IntegratorConfig) -> np.ndarray:
    """Take ``n_steps`` fixed steps and return the final state."""
    x = np.asarray(x0, dtype=float)
    t = t0
    for k in range(n_steps):
        x = step(x, deriv, t, cfg)
        t = t0 + (k + 1) * cfg.h
    return x
