"""
ODE engine shared by the rigid-body and chart simulations.

States are flat float vectors; callers pack and unpack their own structured
states. Two methods are available: classical fixed-step RK4 and the adaptive
Runge-Kutta-Fehlberg 4(5) pair. Every stored sample keeps the derivative at
that sample so the solution has a piecewise cubic Hermite dense output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import OutOfRange, StepRejected

Rhs = Callable[[float, np.ndarray], np.ndarray]
#: ``hook(step_index, t, y)`` runs after each accepted step; it may return a
#: replacement state or ``None``, and may raise :class:`HookAbort`.
Hook = Callable[[int, float, np.ndarray], Optional[np.ndarray]]

METHODS = ("rk4", "rkf45")


@dataclass(frozen=True)
class IntegratorSettings:
    method: str = "rk4"
    step: float = 1e-3
    t_end: float = 10.0
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_step: float = 0.1
    renorm_every: int = 16
    min_step: float = 1e-12

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.method == "rk4" and not self.step > 0:
            raise ValueError("rk4 needs step > 0")
        if self.method == "rkf45" and not (self.abs_tol > 0 or self.rel_tol > 0):
            raise ValueError("rkf45 needs a positive tolerance")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.renorm_every < 1:
            raise ValueError("renorm_every must be >= 1")


@dataclass(frozen=True)
class StepRecord:
    t: float
    state: np.ndarray
    accepted: bool
    error_estimate: float


class Solution:
    """Accepted samples of an integration plus the rejected-step log.

    ``t`` has shape ``(n,)``; ``y`` and ``dy`` have shape ``(n, dim)``, where
    ``dy[i] = rhs(t[i], y[i])`` is evaluated on the post-hook state.
    """

    def __init__(self, t, y, dy, errors, rejected: Sequence[StepRecord] = ()):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.dy = np.asarray(dy, dtype=float)
        self.error_estimates = np.asarray(errors, dtype=float)
        self.rejected = list(rejected)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def records(self) -> list[StepRecord]:
        out = [StepRecord(float(t), y, True, float(e))
               for t, y, e in zip(self.t, self.y, self.error_estimates)]
        out.extend(self.rejected)
        out.sort(key=lambda r: (r.t, r.accepted))
        return out

    def __call__(self, t):
        return dense_eval(self, t)


def _fixed_grid(t0: float, t_end: float, h: float) -> np.ndarray:
    ratio = (t_end - t0) / h
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9 * max(1.0, ratio):
        n = math.ceil(ratio)
    grid = t0 + h * np.arange(n + 1)
    grid[-1] = t_end
    return grid


def _rk4_step(rhs: Rhs, t: float, y: np.ndarray, k1: np.ndarray, h: float) -> np.ndarray:
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Fehlberg 4(5) tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_E = (1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55)


def _rkf45_step(rhs: Rhs, t: float, y: np.ndarray, k1: np.ndarray, h: float):
    ks = [k1]
    for i in range(1, 6):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(rhs(t + _C[i] * h, yi))
    y4 = y + h * sum(b * k for b, k in zip(_B4, ks) if b)
    err = h * sum(e * k for e, k in zip(_E, ks) if e)
    return y4, err


def _apply_hooks(hooks, index, t, y):
    for hook in hooks:
        out = hook(index, t, y)
        if out is not None:
            y = np.asarray(out, dtype=float)
    return y


def integrate(rhs: Rhs, initial, settings: IntegratorSettings,
              hooks: Sequence[Hook] = (), t0: float = 0.0) -> Solution:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``settings.t_end``.

    RK4 uses the fixed step ``settings.step`` (the last step is shortened to
    land on ``t_end``). RKF45 propagates the 4th-order solution and accepts a
    step when the scaled local error ``max |e_i| / (abs_tol + rel_tol |y_i|)``
    is at most 1; the step is then rescaled by ``0.9 * err**(-1/5)`` clamped to
    ``[0.2, 5]`` and to ``[min_step, max_step]``.

    Hooks run after each accepted step, in registration order.

    Raises
    ------
    StepRejected
        RKF45 step size underflowed ``settings.min_step``.
    HookAbort
        Propagated from a hook.
    """
    y = np.array(initial, dtype=float)
    t_end = float(settings.t_end)
    if not t_end > t0:
        raise ValueError("t_end must lie after t0")
    dy = np.asarray(rhs(t0, y), dtype=float)
    ts, ys, dys, errs = [t0], [y], [dy], [0.0]

    if settings.method == "rk4":
        grid = _fixed_grid(t0, t_end, settings.step)
        for i in range(1, len(grid)):
            t_prev, t = grid[i - 1], grid[i]
            y = _rk4_step(rhs, t_prev, y, dy, t - t_prev)
            y = _apply_hooks(hooks, i, t, y)
            dy = np.asarray(rhs(t, y), dtype=float)
            ts.append(t)
            ys.append(y)
            dys.append(dy)
            errs.append(0.0)
        return Solution(ts, ys, dys, errs)

    rejected = []
    h = min(settings.step, settings.max_step, t_end - t0)
    t = t0
    index = 0
    while t < t_end:
        h = min(h, t_end - t)
        y_new, err_vec = _rkf45_step(rhs, t, y, dy, h)
        scale = settings.abs_tol + settings.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        if err <= 1.0:
            t_new = t + h if t_end - (t + h) > 1e-14 * max(1.0, abs(t_end)) else t_end
            index += 1
            y = _apply_hooks(hooks, index, t_new, y_new)
            t = t_new
            dy = np.asarray(rhs(t, y), dtype=float)
            ts.append(t)
            ys.append(y)
            dys.append(dy)
            errs.append(err)
        else:
            rejected.append(StepRecord(t + h, y_new, False, err))
        h = min(settings.max_step, h * factor)
        if h < settings.min_step and t < t_end:
            raise StepRejected(f"step size {h:.3e} below minimum at t={t:.6g}")
    return Solution(ts, ys, dys, errs, rejected)


def dense_eval(solution: Solution, t):
    """Cubic Hermite interpolation of a :class:`Solution` at time(s) ``t``.

    Exact at stored samples. Raises :class:`OutOfRange` outside the covered
    interval.
    """
    ts = solution.t
    tq = np.asarray(t, dtype=float)
    scalar = tq.ndim == 0
    tq = np.atleast_1d(tq)
    span = ts[-1] - ts[0]
    slack = 1e-12 * max(1.0, abs(ts[-1]))
    if len(ts) < 2 or np.any(tq < ts[0] - slack) or np.any(tq > ts[-1] + slack):
        raise OutOfRange(f"query outside [{ts[0]}, {ts[-1]}] (span {span})")
    i = np.clip(np.searchsorted(ts, tq, side="right") - 1, 0, len(ts) - 2)
    h = ts[i + 1] - ts[i]
    s = ((tq - ts[i]) / h)[:, None]
    h = h[:, None]
    s2, s3 = s * s, s * s * s
    out = ((2 * s3 - 3 * s2 + 1) * solution.y[i]
           + (s3 - 2 * s2 + s) * h * solution.dy[i]
           + (-2 * s3 + 3 * s2) * solution.y[i + 1]
           + (s3 - s2) * h * solution.dy[i + 1])
    return out[0] if scalar else out

