"""Continuous-time form of the hierarchy: relaxation layers gated by a
pulse schedule, the saturated FitzHugh-Nagumo oscillator, a fixed-step
RK4 integrator and the contraction-metric check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

RAMP_FRACTION = 0.05
MIN_K2T = 10.0


class IntegrationError(ArithmeticError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state at t={t:.6g}")
        self.t = t


def rk4_integrate(rhs: Callable, x0, t_end: float, dt: float, t0: float = 0.0):
    """Classical fixed-step RK4.  ``rhs(t, x)`` returns dx/dt.

    Returns ``(times, states)`` sampled at every step, including t0.  The
    last step is shortened to land exactly on ``t_end``.
    """
    if dt <= 0 or t_end <= t0:
        raise ValueError("need dt > 0 and t_end > t0")
    x = np.array(x0, dtype=np.float64)
    n = int(np.ceil((t_end - t0) / dt - 1e-9))
    times = np.empty(n + 1)
    states = np.empty((n + 1,) + x.shape)
    times[0], states[0] = t0, x
    t = t0
    for i in range(1, n + 1):
        h = min(dt, t_end - t)
        k1 = rhs(t, x)
        k2 = rhs(t + h / 2, x + h / 2 * k1)
        k3 = rhs(t + h / 2, x + h / 2 * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + i * dt if i < n else t_end
        if not np.all(np.isfinite(x)):
            raise IntegrationError(t)
        times[i], states[i] = t, x
    return times, states


# ---------------------------------------------------------------------------
# layer relaxation with a pulse-gated attention state


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3 - 2 * s)


@dataclass(frozen=True)
class Pulse:
    start: float
    duration: float
    cluster: int


@dataclass(frozen=True)
class PulseSchedule:
    """Unit-amplitude pulses; each is fully on over ``[start, start + T]``
    with smooth ramps of width ``0.05 T`` just outside that interval."""

    pulses: tuple

    def __post_init__(self):
        ps = tuple(sorted(self.pulses, key=lambda p: p.start))
        object.__setattr__(self, "pulses", ps)
        for p in ps:
            if p.duration <= 0:
                raise ValueError("pulse duration must be positive")
        for a, b in zip(ps, ps[1:]):
            if a.start + a.duration * (1 + RAMP_FRACTION) > b.start - b.duration * RAMP_FRACTION:
                raise ValueError("pulses (including ramps) must not overlap")

    def gate(self, t: float) -> tuple[float, int]:
        """``(x3, active cluster)``; cluster is -1 when no pulse is near."""
        for p in self.pulses:
            ramp = RAMP_FRACTION * p.duration
            if p.start - ramp <= t <= p.start + p.duration + ramp:
                if t < p.start:
                    return float(_smoothstep((t - p.start + ramp) / ramp)), p.cluster
                if t > p.start + p.duration:
                    return float(_smoothstep((p.start + p.duration + ramp - t) / ramp)), p.cluster
                return 1.0, p.cluster
        return 0.0, -1


@dataclass(frozen=True, eq=False)
class LayerSystem:
    """x1 relaxes to C1; x2 relaxes to x3 * C2 restricted to the active cluster."""

    c1: np.ndarray
    c2: np.ndarray
    assignments: np.ndarray  # cluster id per C2 coordinate
    schedule: PulseSchedule
    k1: float = 1.0
    k2: float = 10.0

    def __post_init__(self):
        for name in ("c1", "c2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        object.__setattr__(self, "assignments", np.asarray(self.assignments))
        if self.assignments.shape != self.c2.shape:
            raise ValueError("one cluster id per C2 coordinate is required")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("gains must be positive")
        for p in self.schedule.pulses:
            if self.k2 * p.duration < MIN_K2T:
                raise ValueError(f"k2*T = {self.k2 * p.duration:g} < {MIN_K2T:g} for pulse at t={p.start:g}")

    @property
    def size(self) -> int:
        return len(self.c1) + len(self.c2)

    def target(self, cluster: int) -> np.ndarray:
        return np.where(self.assignments == cluster, self.c2, 0.0)

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        n1 = len(self.c1)
        x3, active = self.schedule.gate(t)
        return layer_rhs(x[:n1], x[n1:], self.c1, self.target(active), x3, self.k1, self.k2)

    def initial_state(self) -> np.ndarray:
        return np.zeros(self.size)


def layer_rhs(x1, x2, c1_target, c2a_gated, x3: float, k1: float, k2: float) -> np.ndarray:
    """``[-k1 (x1 - C1), -k2 (x2 - x3 g)]`` as one flat vector."""
    x1, x2 = np.asarray(x1), np.asarray(x2)
    if x1.shape != np.shape(c1_target) or x2.shape != np.shape(c2a_gated):
        raise ValueError("state and target dimensions disagree")
    return np.concatenate([-k1 * (x1 - c1_target), -k2 * (x2 - x3 * np.asarray(c2a_gated))])


# ---------------------------------------------------------------------------
# saturated FitzHugh-Nagumo oscillator


@dataclass(frozen=True)
class OscillatorParams:
    alpha: float = 1.0
    beta: float = 1.0
    c: float = 1.0
    current: Callable[[float], float] | float = 0.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.c) <= 0:
            raise ValueError("alpha, beta and c must be strictly positive")

    def I(self, t: float) -> float:  # noqa: E743
        return self.current(t) if callable(self.current) else float(self.current)


def fn_rhs(v, w, params: OscillatorParams, t: float = 0.0):
    dv = 3 * v - v**3 - v**7 + 2 - w + params.I(t)
    dw = params.c * (params.alpha * (1 + np.tanh(params.beta * v)) - w)
    return dv, dw


def fn_system(params: OscillatorParams):
    def rhs(t, x):
        dv, dw = fn_rhs(x[0], x[1], params, t)
        return np.array([dv, dw])

    return rhs


def fn_jacobian(v: float, params: OscillatorParams) -> np.ndarray:
    sech2 = 1.0 / np.cosh(params.beta * v) ** 2
    return np.array([
        [3 - 3 * v**2 - 7 * v**6, -1.0],
        [params.c * params.alpha * params.beta * sech2, -params.c],
    ])


def metric_bound_margin(params: OscillatorParams, v_grid) -> float:
    """Largest eigenvalue over the grid of sym(Theta J Theta^-1 - diag(3 + ab/4, 0)),
    Theta = diag(sqrt(c a b), 1).  A value <= 0 certifies the bound on the grid."""
    grid = np.atleast_1d(np.asarray(v_grid, dtype=np.float64))
    if grid.size == 0:
        raise ValueError("v_grid must not be empty")
    s = np.sqrt(params.c * params.alpha * params.beta)
    theta = np.diag([s, 1.0])
    theta_inv = np.diag([1.0 / s, 1.0])
    shift = np.diag([3 + params.alpha * params.beta / 4, 0.0])
    worst = -np.inf
    for v in grid:
        m = theta @ fn_jacobian(v, params) @ theta_inv - shift
        worst = max(worst, float(np.linalg.eigvalsh((m + m.T) / 2).max()))
    return worst


def count_upward_crossings(series, level: float = 1.0) -> int:
    s = np.asarray(series)
    return int(np.count_nonzero((s[:-1] < level) & (s[1:] >= level)))


# ---------------------------------------------------------------------------
# scenario files


@dataclass
class Scenario:
    kind: str
    t_end: float
    dt: float
    system: object = None
    x0: np.ndarray = field(default=None)
    names: list = field(default_factory=list)


def load_scenario(spec: dict) -> Scenario:
    """Build a scenario from a parsed JSON document.

    ``{"kind": "oscillator", "alpha", "beta", "c", "current", "v0", "w0", ...}``
    or ``{"kind": "layers", "c1": [...], "c2": [...], "clusters": [...],
    "k1", "k2", "pulses": [[start, T, cluster], ...], ...}``; both take
    ``t_end`` and ``dt``.
    """
    kind = spec.get("kind")
    t_end, dt = float(spec["t_end"]), float(spec["dt"])
    if kind == "oscillator":
        params = OscillatorParams(float(spec.get("alpha", 1.0)), float(spec.get("beta", 1.0)),
                                  float(spec.get("c", 1.0)), float(spec.get("current", 0.0)))
        x0 = np.array([float(spec.get("v0", 0.0)), float(spec.get("w0", 0.0))])
        return Scenario(kind, t_end, dt, fn_system(params), x0, ["v", "w"])
    if kind == "layers":
        sched = PulseSchedule(tuple(Pulse(float(s), float(d), int(c)) for s, d, c in spec.get("pulses", [])))
        system = LayerSystem(np.array(spec["c1"], dtype=float), np.array(spec["c2"], dtype=float),
                             np.array(spec["clusters"]), sched, float(spec.get("k1", 1.0)), float(spec.get("k2", 10.0)))
        n1 = len(system.c1)
        names = [f"x1_{i}" for i in range(n1)] + [f"x2_{i}" for i in range(len(system.c2))]
        return Scenario(kind, t_end, dt, system.rhs, system.initial_state(), names)
    raise ValueError(f"unknown scenario kind {kind!r} (expected 'oscillator' or 'layers')")


def run_scenario(sc: Scenario):
    return rk4_integrate(sc.system, sc.x0, sc.t_end, sc.dt)
