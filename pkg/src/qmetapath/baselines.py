"""Classical reference optimizers over the same RIS objective."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import TWO_PI, ChannelSet, LinkBudget, PhaseVector, objective, quantize_phases, wrap_phases
from .errors import NumericError, ParameterError

FD_STEP = 1e-4
AO_GRID = 64


@dataclass
class BaselineResult:
    phases: PhaseVector
    objective: float
    iterations: int = 0
    wall_time: float = 0.0
    trace: list = field(default_factory=list)


def _finish(chs, budget, alpha1, alpha2, phi, bits, iterations, t0, trace):
    pv = quantize_phases(phi, bits) if bits else PhaseVector(phi)
    obj = float(objective(chs, pv, budget, alpha1, alpha2))
    return BaselineResult(pv, obj, iterations, time.perf_counter() - t0, trace)


def random_phases(
    chs: ChannelSet,
    budget: LinkBudget,
    alpha1: float = 1.0,
    alpha2: float = 0.1,
    seed=None,
    quantize_bits: Optional[int] = None,
) -> BaselineResult:
    """IID uniform phases, evaluated once."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, TWO_PI, size=chs.n_elements)
    return _finish(chs, budget, alpha1, alpha2, phi, quantize_bits, 0, t0, [])


def gradient_ascent(
    chs: ChannelSet,
    budget: LinkBudget,
    alpha1: float = 1.0,
    alpha2: float = 0.1,
    steps: int = 50,
    lr: float = 0.5,
    seed=None,
    init=None,
    quantize_bits: Optional[int] = None,
) -> BaselineResult:
    """Central finite-difference ascent with step halving on a decrease.

    A step is accepted only when it does not lower the objective, so the
    returned trace of accepted objective values is non-decreasing.
    """
    if steps < 1 or lr <= 0:
        raise ParameterError("steps must be >= 1 and lr > 0")
    t0 = time.perf_counter()
    n = chs.n_elements
    if init is None:
        phi = np.random.default_rng(seed).uniform(0.0, TWO_PI, size=n)
    else:
        phi = np.asarray(init, dtype=float).copy()
    eye = np.eye(n) * FD_STEP

    def f(x):
        return objective(chs, x, budget, alpha1, alpha2)

    current = float(f(phi))
    trace = [current]
    taken = 0
    for _ in range(steps):
        vals = f(np.vstack([phi + eye, phi - eye]))
        grad = (vals[:n] - vals[n:]) / (2 * FD_STEP)
        if not np.all(np.isfinite(grad)) or not math.isfinite(current):
            raise NumericError("non-finite objective during gradient ascent")
        if np.max(np.abs(grad)) < 1e-9:
            break
        taken += 1
        candidate = phi + lr * grad
        value = float(f(candidate))
        if value >= current:
            phi, current = candidate, value
            trace.append(current)
        else:
            lr /= 2
            if lr < 1e-12:
                break
    return _finish(chs, budget, alpha1, alpha2, wrap_phases(phi), quantize_bits, taken, t0, trace)


def alternating_opt(
    chs: ChannelSet,
    budget: LinkBudget,
    alpha1: float = 1.0,
    alpha2: float = 0.1,
    sweeps: int = 2,
    init=None,
    quantize_bits: Optional[int] = None,
    grid: int = AO_GRID,
) -> BaselineResult:
    """Coordinate sweeps: each element in turn takes the best grid phase
    with the others held fixed.  The current value is kept unless a grid
    point strictly improves on it."""
    if sweeps < 1:
        raise ParameterError("sweeps must be >= 1")
    t0 = time.perf_counter()
    n = chs.n_elements
    levels = 2**quantize_bits if quantize_bits else grid
    candidates = np.arange(levels) * (TWO_PI / levels)
    phi = np.zeros(n) if init is None else wrap_phases(init)
    current = float(objective(chs, phi, budget, alpha1, alpha2))
    trace = [current]
    for _ in range(sweeps):
        for m in range(n):
            batch = np.repeat(phi[None, :], levels, axis=0)
            batch[:, m] = candidates
            vals = objective(chs, batch, budget, alpha1, alpha2)
            best = int(np.argmax(vals))
            if vals[best] > current:
                phi = batch[best]
                current = float(vals[best])
            trace.append(current)
    return _finish(chs, budget, alpha1, alpha2, phi, quantize_bits, sweeps, t0, trace)
