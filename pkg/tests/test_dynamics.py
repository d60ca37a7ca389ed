import math

import numpy as np
import pytest

from oracles import bisect
from wvc.dynamics import (MIN_K2T, IntegrationError, LayerSystem, OscillatorParams, Pulse, PulseSchedule,
                          count_upward_crossings, fn_jacobian, fn_rhs, fn_system, layer_rhs, load_scenario,
                          metric_bound_margin, rk4_integrate, run_scenario)

GRID = np.round(np.arange(-300, 301) * 0.01, 10)


def _decay_error(dt):
    _, x = rk4_integrate(lambda t, x: -x, [1.0], 1.0, dt)
    return abs(x[-1, 0] - math.exp(-1))


class TestRK4:
    def test_exponential(self):
        assert _decay_error(1e-3) <= 1e-8

    def test_zero_field(self):
        _, x = rk4_integrate(lambda t, x: np.zeros_like(x), [0.3, -2.0], 2.0, 0.1)
        assert np.all(x == [0.3, -2.0])

    def test_order_ratio(self):
        ratio = _decay_error(0.1) / _decay_error(0.05)
        assert 14 <= ratio <= 18

    def test_lands_on_t_end(self):
        t, x = rk4_integrate(lambda t, x: -x, [1.0], 1.0, 0.3)
        assert t[-1] == 1.0 and len(t) == 5

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_aborts(self):
        with pytest.raises(IntegrationError) as info:
            rk4_integrate(lambda t, x: x**3, [10.0], 10.0, 0.1)
        assert info.value.t > 0

    def test_bad_args(self):
        with pytest.raises(ValueError):
            rk4_integrate(lambda t, x: x, [1.0], 1.0, 0.0)


class TestLayers:
    def test_x1_closed_form(self):
        c = np.array([0.3, 1.2])
        sys = LayerSystem(c, np.zeros(1), np.zeros(1, int), PulseSchedule(()), k1=2.0)
        t, x = rk4_integrate(sys.rhs, sys.initial_state(), 1.0, 1e-3)
        np.testing.assert_allclose(x[-1, :2], c * (1 - math.exp(-2)), atol=1e-6)

    def test_contraction_envelope(self):
        c1 = np.array([1.0, -0.5])
        sys = LayerSystem(c1, np.zeros(1), np.zeros(1, int), PulseSchedule(()), k1=1.5)
        x0 = np.array([3.0, 2.0, 0.0])
        t, x = rk4_integrate(sys.rhs, x0, 2.0, 1e-3)
        gap = np.linalg.norm(x[:, :2] - c1, axis=1)
        assert np.all(gap <= np.exp(-1.5 * t) * gap[0] + 1e-6)

    def test_zero_gate(self):
        sys = LayerSystem(np.zeros(1), np.array([1.0, 2.0]), np.zeros(2, int), PulseSchedule(()))
        t, x = rk4_integrate(sys.rhs, np.array([0.0, 1.0, -1.0]), 2.0, 1e-3)
        np.testing.assert_allclose(x[-1, 1:], np.array([1.0, -1.0]) * np.exp(-20.0), atol=1e-12)

    def test_two_pulses(self):
        c2 = np.array([0.8, 0.6, 0.4, 0.9])
        clusters = np.array([0, 0, 1, 1])
        sched = PulseSchedule((Pulse(1.0, 1.0, 0), Pulse(3.0, 1.0, 1)))
        sys = LayerSystem(np.zeros(1), c2, clusters, sched, k2=10.0)
        t, x = rk4_integrate(sys.rhs, sys.initial_state(), 4.2, 1e-3)
        for p in sched.pulses:
            i = int(np.argmin(np.abs(t - (p.start + p.duration))))
            g = sys.target(p.cluster)
            assert np.linalg.norm(x[i, 1:] - g) <= 0.01 * np.linalg.norm(g)

    def test_gate_shape(self):
        s = PulseSchedule((Pulse(1.0, 2.0, 3),))
        assert s.gate(0.5) == (0.0, -1)
        assert s.gate(1.5) == (1.0, 3)
        assert s.gate(3.0) == (1.0, 3)
        x3, c = s.gate(0.95)
        assert 0 < x3 < 1 and c == 3
        assert s.gate(0.85) == (0.0, -1)
        assert s.gate(3.05)[0] == pytest.approx(0.5)

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            PulseSchedule((Pulse(0.0, 1.0, 0), Pulse(1.0, 1.0, 1)))
        with pytest.raises(ValueError, match="k2"):
            LayerSystem(np.zeros(1), np.zeros(1), np.zeros(1, int), PulseSchedule((Pulse(0, 0.5, 0),)), k2=10)
        assert MIN_K2T == 10

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            layer_rhs(np.zeros(2), np.zeros(3), np.zeros(3), np.zeros(3), 1.0, 1.0, 1.0)


class TestOscillator:
    def test_substitutions(self):
        p = OscillatorParams(1.0, 1.0, 1.0)
        assert fn_rhs(0.0, 2.0, p) == (0.0, -1.0)
        assert fn_rhs(1.0, 0.0, p)[0] == 3.0

    def test_params_positive(self):
        with pytest.raises(ValueError):
            OscillatorParams(alpha=0.0)

    def test_equilibrium_bisection(self):
        p = OscillatorParams(1.0, 1.0, 1.0)
        # on dw = 0, w = alpha (1 + tanh(beta v)); solve dv(v, w(v)) = 0
        g = lambda v: fn_rhs(v, 1 + math.tanh(v), p)[0]  # noqa: E731
        v = bisect(g, -2.0, 2.0)
        dv, dw = fn_rhs(v, 1 + math.tanh(v), p)
        assert abs(dv) <= 1e-9 and abs(dw) <= 1e-9

    def test_margin_at_zero(self):
        p = OscillatorParams(1.0, 1.0, 1.0)
        m = np.diag([1.0, 1.0]) @ fn_jacobian(0.0, p) - np.diag([3.25, 0.0])
        sym = (m + m.T) / 2
        # characteristic polynomial of a diagonal 2x2
        assert sym[0, 1] == 0
        assert metric_bound_margin(p, [0.0]) == pytest.approx(-0.25, abs=1e-15)

    def test_j11_bound(self):
        p = OscillatorParams()
        vals = [fn_jacobian(v, p)[0, 0] for v in GRID]
        assert max(vals) == 3.0 and all(v < 3 for v, x in zip(vals, GRID) if x != 0)

    def test_margin_sweep(self):
        assert metric_bound_margin(OscillatorParams(1.0, 1.0, 1.0), GRID) <= 0

    def test_spikes_at_stated_parameters(self):
        # Fails: with alpha = beta = c = 1 the only equilibrium at I = 1.5
        # (v ~ 1.198) is stable, so v settles after one crossing.
        p = OscillatorParams(1.0, 1.0, 1.0, 1.5)
        _, x = rk4_integrate(fn_system(p), [0.0, 0.0], 100.0, 0.01)
        assert count_upward_crossings(x[:, 0], 1.0) >= 3

    def test_spikes_with_steep_gate(self):
        # alpha * beta > 3 makes the middle-branch equilibrium unstable
        p = OscillatorParams(2.0, 2.0, 1.0, 0.0)
        _, x = rk4_integrate(fn_system(p), [0.0, 0.0], 100.0, 0.01)
        assert count_upward_crossings(x[:, 0], 1.0) >= 3
        assert metric_bound_margin(p, GRID) <= 0

    def test_time_varying_current(self):
        p = OscillatorParams(current=lambda t: 2.0 * t)
        assert fn_rhs(0.0, 0.0, p, t=1.5)[0] == 2.0 + 3.0


class TestScenario:
    def test_oscillator(self):
        sc = load_scenario({"kind": "oscillator", "current": 0.0, "t_end": 1.0, "dt": 0.1})
        t, x = run_scenario(sc)
        assert x.shape == (11, 2) and sc.names == ["v", "w"]

    def test_layers(self):
        sc = load_scenario({"kind": "layers", "c1": [1.0], "c2": [0.5, 0.5], "clusters": [0, 1],
                            "pulses": [[0.5, 1.0, 1]], "t_end": 2.0, "dt": 0.01})
        t, x = run_scenario(sc)
        assert x.shape[1] == 3
        assert abs(x[150, 2] - 0.5) < 0.01 and abs(x[150, 1]) < 1e-12

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            load_scenario({"kind": "x", "t_end": 1, "dt": 0.1})
