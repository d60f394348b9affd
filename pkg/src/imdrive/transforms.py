"""Coordinate transforms between three-phase quantities and two-axis q-d frames.

All transforms are amplitude invariant. The stationary frame uses the
q-axis aligned with phase a; the synchronous frame is rotated by ``theta_e``.
Angles are not wrapped; only their sine and cosine are used.
"""

from __future__ import annotations

import math
from typing import NamedTuple

SQRT3 = math.sqrt(3.0)
INV_SQRT3 = 1.0 / SQRT3
HALF_SQRT3 = 0.5 * SQRT3


class ThreePhase(NamedTuple):
    a: float
    b: float
    c: float


class QdStationary(NamedTuple):
    q: float
    d: float


class QdSynchronous(NamedTuple):
    q: float
    d: float


def phase_to_line_neutral(v: ThreePhase) -> ThreePhase:
    """Convert pole voltages (referred to the DC midpoint) to line-to-neutral voltages.

    Removes the common-mode component; the result always sums to zero.
    """
    a, b, c = v
    return ThreePhase(
        (2.0 * a - b - c) / 3.0,
        (2.0 * b - a - c) / 3.0,
        (2.0 * c - a - b) / 3.0,
    )


def abc_to_qd_stationary(v: ThreePhase) -> QdStationary:
    a, b, c = v
    return QdStationary(a, (c - b) * INV_SQRT3)


def qd_stationary_to_abc(x: QdStationary) -> ThreePhase:
    q, d = x
    return ThreePhase(q, -0.5 * q - HALF_SQRT3 * d, -0.5 * q + HALF_SQRT3 * d)


def stationary_to_synchronous(x: QdStationary, theta_e: float) -> QdSynchronous:
    c = math.cos(theta_e)
    s = math.sin(theta_e)
    q, d = x
    return QdSynchronous(q * c - d * s, q * s + d * c)


def synchronous_to_stationary(x: QdSynchronous, theta_e: float) -> QdStationary:
    """Inverse rotation of :func:`stationary_to_synchronous`.

    Works for voltages and currents alike.
    """
    c = math.cos(theta_e)
    s = math.sin(theta_e)
    q, d = x
    return QdStationary(q * c + d * s, -q * s + d * c)


def synchronous_to_abc(x: QdSynchronous, theta_e: float) -> ThreePhase:
    return qd_stationary_to_abc(synchronous_to_stationary(x, theta_e))


def abc_to_synchronous(v: ThreePhase, theta_e: float) -> QdSynchronous:
    return stationary_to_synchronous(abc_to_qd_stationary(v), theta_e)
