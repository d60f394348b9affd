import math

import numpy as np
import pytest

from imdrive.integrator import IntegrationError, IntegratorConfig, integrate, max_stable_step, step
from imdrive.motor import MotorParams


def decay(t, x):
    return -x


def rk4_error(h):
    n = int(round(1.0 / h))
    x = integrate([1.0], decay, 0.0, n, IntegratorConfig(h=h, method="rk4"))
    return abs(x[0] - math.exp(-1.0))


@pytest.mark.parametrize("method", ["euler", "rk4"])
def test_constant_field(method):
    x = step(np.array([5.0]), lambda t, x: np.zeros(1), 0.0, IntegratorConfig(h=0.1, method=method))
    assert x[0] == 5.0


@pytest.mark.parametrize("method", ["euler", "rk4"])
def test_unit_slope_is_exact(method):
    h = 0.037
    x = step(np.array([0.0]), lambda t, x: np.ones(1), 0.0, IntegratorConfig(h=h, method=method))
    assert x[0] == h


def test_rk4_single_step_exponential():
    x = step(np.array([1.0]), decay, 0.0, IntegratorConfig(h=0.1))
    assert x[0] == pytest.approx(math.exp(-0.1), abs=1e-7)
    assert x[0] == pytest.approx(0.904837418, abs=1e-7)


def test_rk4_convergence_order():
    errors = [rk4_error(h) for h in (1e-2, 5e-3, 2.5e-3)]
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    assert min(orders) >= 3.8


def test_euler_is_first_order():
    def err(h):
        x = integrate([1.0], decay, 0.0, int(round(1 / h)), IntegratorConfig(h=h, method="euler"))
        return abs(x[0] - math.exp(-1.0))

    assert math.log2(err(1e-3) / err(5e-4)) == pytest.approx(1.0, abs=0.05)


def test_time_dependent_rhs_uses_stage_times():
    # dx/dt = 3 t^2 is integrated exactly by RK4 (Simpson's rule)
    x = integrate([0.0], lambda t, x: np.array([3.0 * t * t]), 0.0, 10, IntegratorConfig(h=0.1))
    assert x[0] == pytest.approx(1.0, abs=1e-13)


def test_deterministic():
    def f(t, x):
        return np.array([x[1], -math.sin(x[0]) - 0.1 * x[1]])

    a = integrate([1.0, 0.0], f, 0.0, 500, IntegratorConfig(h=0.01))
    b = integrate([1.0, 0.0], f, 0.0, 500, IntegratorConfig(h=0.01))
    assert a.tobytes() == b.tobytes()


def test_non_finite_derivative_raises_with_context():
    def f(t, x):
        return np.array([0.0, np.inf if t > 0.25 else 1.0])

    cfg = IntegratorConfig(h=0.1)
    x = np.zeros(2)
    with pytest.raises(IntegrationError) as info:
        for k in range(10):
            x = step(x, f, k * 0.1, cfg, names=("a", "b"))
    assert info.value.index == 1
    assert info.value.name == "b"
    assert info.value.t == pytest.approx(0.2)
    assert "t=0.2" in str(info.value)


@pytest.mark.parametrize("kw", [{"h": 0.0}, {"h": -1e-3}, {"h": float("nan")}, {"method": "rk45"}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        IntegratorConfig(**kw)


def test_stability_bound_admits_default_step():
    bound = max_stable_step(MotorParams(), Rr_max=2.0)
    assert IntegratorConfig().h <= bound
    assert bound < 1e-3
