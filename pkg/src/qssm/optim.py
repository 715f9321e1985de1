"""ADAM and a Nelder-Mead simplex minimizer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> AdamState:
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(params, grad, state: AdamState, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected ADAM update; returns (new_params, new_state)."""
    grad = np.asarray(grad, dtype=float)
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grad
    v = beta2 * state.v + (1 - beta2) * grad**2
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    new = np.asarray(params, dtype=float) - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new, AdamState(m, v, t)


@dataclass(frozen=True)
class NelderMeadConfig:
    """Standard coefficients: reflection 1, expansion 2, contraction 1/2, shrink 1/2."""

    max_evals: int = 1000
    xatol: float = 1e-6
    fatol: float = 1e-8
    initial_step: float = 0.5
    alpha: float = 1.0
    gamma: float = 2.0
    rho: float = 0.5
    sigma: float = 0.5


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    n_evals: int
    trace: list = field(default_factory=list)
    reason: str = ""


def nelder_mead_minimize(f, x0, config: NelderMeadConfig = NelderMeadConfig()) -> NelderMeadResult:
    """Minimize ``f`` from ``x0``.

    Stops when the spread of simplex values drops to ``fatol``, when every
    vertex lies within ``xatol`` of the best one, or when ``max_evals`` is spent.
    ``trace`` holds the best value after each iteration. The best point seen is
    returned in every case.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    dim = x0.size
    evals = 0
    best = [x0.copy(), np.inf]

    def call(x):
        nonlocal evals
        evals += 1
        val = float(f(x))
        if val < best[1]:
            best[0], best[1] = x.copy(), val
        return val

    simplex = [x0.copy()]
    for i in range(dim):
        x = x0.copy()
        x[i] += config.initial_step
        simplex.append(x)
    simplex = np.array(simplex)
    values = np.array([call(x) for x in simplex])
    trace = []
    reason = "max_evals"

    while evals < config.max_evals:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        trace.append(float(values[0]))
        if values[-1] - values[0] <= config.fatol:
            reason = "fatol"
            break
        if np.max(np.abs(simplex[1:] - simplex[0])) <= config.xatol:
            reason = "xatol"
            break
        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + config.alpha * (centroid - simplex[-1])
        fr = call(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            xe = centroid + config.gamma * (xr - centroid)
            fe = call(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + config.rho * (xr - centroid)
            fc = call(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + config.rho * (simplex[-1] - centroid)
            fc = call(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        for i in range(1, dim + 1):
            simplex[i] = simplex[0] + config.sigma * (simplex[i] - simplex[0])
            values[i] = call(simplex[i])

    return NelderMeadResult(best[0], best[1], evals, trace, reason)
