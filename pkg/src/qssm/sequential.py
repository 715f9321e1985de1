"""Layer-by-layer training of the sequential scattering model.

Step k trains a hardware-efficient layer on registers k..k+w_k-1 so that the
reduced state of the first k registers matches the target's. Each later layer
leaves registers 1..k-1 untouched, so earlier alignments are preserved.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circuit import (
    ParamCircuit,
    apply_1q,
    apply_gate,
    build_hea,
    parameter_shift_pair,
    random_params,
    run_circuit,
)
from .errors import ArgumentError, UnsupportedGateError
from .optim import AdamState, adam_step
from .qstate import StateVector, _amps, _n_of, _overlap, fidelity_pure, rank_sequence, zero_state
from .rng import child_rng

ZERO_COST = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    depth: int = 20
    w_max: int = 4
    lr: float = 0.1
    max_iters: int = 200
    tol: float = 1e-3
    seed: int = 0
    gradient: str = "analytic"
    stop: str = "difference"
    keep_best: bool = True
    width_mode: str = "schedule"
    rank_tol: float = 1e-10
    fd_step: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self) -> list:
        errors = []
        if self.depth < 0:
            errors.append(("depth", "must be >= 0"))
        if self.w_max < 1:
            errors.append(("w_max", "must be >= 1"))
        if not self.lr > 0:
            errors.append(("lr", "must be > 0"))
        if self.max_iters < 1:
            errors.append(("max_iters", "must be >= 1"))
        if not self.tol >= 0:
            errors.append(("tol", "must be >= 0"))
        if self.gradient not in ("analytic", "finite_difference"):
            errors.append(("gradient", "must be 'analytic' or 'finite_difference'"))
        if self.stop not in ("difference", "threshold"):
            errors.append(("stop", "must be 'difference' or 'threshold'"))
        if self.width_mode not in ("schedule", "rank_based"):
            errors.append(("width_mode", "must be 'schedule' or 'rank_based'"))
        if not self.rank_tol > 0:
            errors.append(("rank_tol", "must be > 0"))
        if not self.fd_step > 0:
            errors.append(("fd_step", "must be > 0"))
        return errors

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ArgumentError("; ".join(f"{k}: {m}" for k, m in errors))

    def to_json(self) -> dict:
        return asdict(self)


# -- widths -----------------------------------------------------------------

def width_schedule(n: int, k: int, w_max: int) -> int:
    if not 1 <= k <= n:
        raise ArgumentError(f"step k={k} outside [1, {n}]")
    if w_max < 1:
        raise ArgumentError("w_max must be >= 1")
    if k <= n // 2:
        return min(k + 1, w_max)
    return min(n - k + 1, w_max)


def rank_based_widths(target, tol: float = 1e-10) -> list:
    """Widths ceil(log2 r_k) + 1, capped by the unrestricted schedule."""
    ranks = rank_sequence(target, tol).ranks
    n = len(ranks)
    widths = []
    for k, r in enumerate(ranks, start=1):
        need = math.ceil(math.log2(r)) + 1 if r > 1 else 1
        widths.append(max(1, min(width_schedule(n, k, n), need)))
    return widths


def layer_widths(target, config: TrainConfig) -> list:
    n = _n_of(_amps(target))
    if config.width_mode == "rank_based":
        return [min(w, config.w_max) for w in rank_based_widths(target, config.rank_tol)]
    return [width_schedule(n, k, config.w_max) for k in range(1, n + 1)]


# -- cost and gradients ------------------------------------------------------

def _check_layer(k, layer: ParamCircuit, n):
    if layer.offset != k:
        raise ArgumentError(f"layer for step {k} must start at register {k}, got offset {layer.offset}")
    if k + layer.width - 1 > n:
        raise ArgumentError(f"layer width {layer.width} at step {k} exceeds n={n}")


def _cost_arrays(psi, target, n, k, target_purity=None):
    tp = _overlap(target, target, n, k) if target_purity is None else target_purity
    return _overlap(psi, psi, n, k) + tp - 2.0 * _overlap(psi, target, n, k)


def layer_cost(k, psi_prev, layer: ParamCircuit, params, target) -> float:
    """C_k after applying ``layer`` to the (k-1)-step state."""
    prev, tgt = _amps(psi_prev), _amps(target)
    n = _n_of(prev)
    if tgt.shape != prev.shape:
        raise ArgumentError("state and target have different register counts")
    _check_layer(k, layer, n)
    return _cost_arrays(run_circuit(prev, layer, params), tgt, n, k)


def _apply_delta(psi, target, n, k):
    """((sigma_k - rho_k) (x) I) psi with sigma_k taken from psi itself."""
    pm = psi.reshape(1 << k, 1 << (n - k))
    tm = target.reshape(1 << k, 1 << (n - k))
    if k <= n - k:
        delta = pm @ pm.conj().T - tm @ tm.conj().T
        return (delta @ pm).reshape(-1)
    return (pm @ (pm.conj().T @ pm) - tm @ (tm.conj().T @ pm)).reshape(-1)


def _adjoint_cost_grad(prev, layer: ParamCircuit, params, target, n, k, target_purity=None):
    params = np.asarray(params, dtype=float)
    psi = run_circuit(prev, layer, params)
    cost = _cost_arrays(psi, target, n, k, target_purity)
    lam = _apply_delta(psi, target, n, k)
    grad = np.zeros(layer.n_params)
    base = layer.offset - 1
    for g in reversed(layer.gates):
        p = layer.gate_params(g, params)
        before = apply_gate(psi, g, p, n, layer.offset, inverse=True)
        if g.param_slots:
            if len(g.targets) != 1:
                raise UnsupportedGateError(f"{g.kind} on several registers is not shiftable")
            q = g.targets[0] + base
            for slot, du in zip(g.param_slots, g.derivatives(p)):
                grad[slot] = 4.0 * np.real(np.vdot(lam, apply_1q(before, du, q, n)))
        lam = apply_gate(lam, g, p, n, layer.offset, inverse=True)
        psi = before
    return cost, grad


def g_expectation(state, reference, target, k, width: int = 1, normalized: bool = False) -> float:
    """<psi| (sigma* - rho_k) (x) Gamma |psi> with sigma* the reduction of ``reference``.

    With ``normalized`` the operator on registers k+1..k+width-1 is the
    maximally mixed state I/2^(width-1); otherwise it is the identity, which is
    the normalization under which shift differences equal the true derivative.
    """
    a, ref, tgt = _amps(state), _amps(reference), _amps(target)
    n = _n_of(a)
    val = _overlap(a, ref, n, k) - _overlap(a, tgt, n, k)
    return val / 2 ** (width - 1) if normalized else val


def shift_rule_gradient(k, psi_prev, layer: ParamCircuit, params, target, normalized=False) -> np.ndarray:
    """Gradient from literal +-pi/2 shifted evaluations of <G_k>."""
    prev, tgt = _amps(psi_prev), _amps(target)
    n = _n_of(prev)
    _check_layer(k, layer, n)
    if not layer.shiftable():
        raise UnsupportedGateError("layer contains parameterized gates outside the shift rule")
    params = np.asarray(params, dtype=float)
    ref = run_circuit(prev, layer, params)
    grad = np.zeros(layer.n_params)
    for mu in range(layer.n_params):
        plus, minus = parameter_shift_pair(layer, params, mu)
        grad[mu] = g_expectation(run_circuit(prev, layer, plus), ref, tgt, k, layer.width, normalized) - (
            g_expectation(run_circuit(prev, layer, minus), ref, tgt, k, layer.width, normalized)
        )
    return grad


def analytic_gradient(k, psi_prev, layer: ParamCircuit, params, target, method: str = "adjoint") -> np.ndarray:
    """dC_k/dtheta as the shift difference <G_k>(theta_mu + pi/2) - <G_k>(theta_mu - pi/2).

    ``method="shift"`` evaluates the shifted circuits literally. ``"adjoint"``
    computes the same difference in one backward sweep through the layer,
    using that for exp(-i theta Omega/2) gates the difference equals
    4 Re <lambda| dU |psi> with lambda the back-propagated (Delta (x) I) psi.
    """
    if method == "shift":
        return shift_rule_gradient(k, psi_prev, layer, params, target)
    if method != "adjoint":
        raise ArgumentError(f"unknown gradient method {method!r}")
    prev, tgt = _amps(psi_prev), _amps(target)
    n = _n_of(prev)
    _check_layer(k, layer, n)
    if not layer.shiftable():
        raise UnsupportedGateError("layer contains parameterized gates outside the shift rule")
    return _adjoint_cost_grad(prev, layer, params, tgt, n, k)[1]


def finite_difference_gradient(k, psi_prev, layer: ParamCircuit, params, target, h: float = 1e-5) -> np.ndarray:
    if not h > 0:
        raise ArgumentError("finite-difference step must be positive")
    params = np.asarray(params, dtype=float)
    grad = np.zeros(layer.n_params)
    for mu in range(layer.n_params):
        e = np.zeros_like(params)
        e[mu] = h
        grad[mu] = (layer_cost(k, psi_prev, layer, params + e, target) - layer_cost(k, psi_prev, layer, params - e, target)) / (2 * h)
    return grad


# -- training ----------------------------------------------------------------

@dataclass
class Layer:
    k: int
    circuit: ParamCircuit
    params: np.ndarray
    trace: list

    @property
    def width(self):
        return self.circuit.width

    @property
    def iterations(self):
        return len(self.trace)

    def to_json(self) -> dict:
        return {"k": self.k, "circuit": self.circuit.to_json(), "params": list(map(float, self.params)), "trace": self.trace}

    @classmethod
    def from_json(cls, obj) -> Layer:
        return cls(obj["k"], ParamCircuit.from_json(obj["circuit"]), np.asarray(obj["params"], dtype=float), list(obj["trace"]))


@dataclass
class ScatteringModel:
    n: int
    layers: list
    state: StateVector
    fidelity: float
    config: TrainConfig | None = None
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def widths(self) -> list:
        return [layer.width for layer in self.layers]

    @property
    def iterations(self) -> list:
        return [layer.iterations for layer in self.layers]

    def reconstruct(self) -> StateVector:
        vec = _amps(zero_state(self.n)).copy()
        for layer in self.layers:
            vec = run_circuit(vec, layer.circuit, layer.params)
        return StateVector(vec)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "fidelity": self.fidelity,
            "widths": self.widths,
            "config": self.config.to_json() if self.config else None,
            "layers": [layer.to_json() for layer in self.layers],
        }

    @classmethod
    def from_json(cls, obj, target=None) -> ScatteringModel:
        layers = [Layer.from_json(x) for x in obj["layers"]]
        config = TrainConfig(**obj["config"]) if obj.get("config") else None
        model = cls(obj["n"], layers, zero_state(obj["n"]), float("nan"), config)
        model.state = model.reconstruct()
        model.fidelity = fidelity_pure(model.state, target) if target is not None else obj.get("fidelity", float("nan"))
        return model

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path, target=None) -> ScatteringModel:
        return cls.from_json(json.loads(Path(path).read_text()), target)


@dataclass
class LayerResult:
    params: np.ndarray
    trace: list
    state: np.ndarray
    circuit: ParamCircuit


def train_layer(k, psi_prev, target, config: TrainConfig, rng, width=None, layer=None, init_params=None) -> LayerResult:
    """Minimize C_k with ADAM until |C_t - C_(t-1)| <= tol or max_iters.

    With ``config.stop == "threshold"`` the test is C_t <= tol instead. A cost
    below 1e-12 also stops training.
    """
    prev, tgt = _amps(psi_prev), _amps(target)
    n = _n_of(prev)
    if tgt.shape != prev.shape:
        raise ArgumentError("state and target have different register counts")
    if layer is None:
        width = width or width_schedule(n, k, config.w_max)
        layer = build_hea(width, config.depth, offset=k)
    _check_layer(k, layer, n)
    params = random_params(layer, rng) if init_params is None else np.array(init_params, dtype=float)
    params, trace = minimize_cost(prev, layer, params, tgt, k, config)
    return LayerResult(params, trace, run_circuit(prev, layer, params), layer)


def minimize_cost(prev, layer: ParamCircuit, params, target, k, config: TrainConfig):
    """ADAM loop on C_k for ``layer`` applied to ``prev``; returns (params, trace).

    ``trace[i]`` is the cost at iteration i. The returned parameters are those
    of the lowest recorded cost with ``config.keep_best``, else the last ones.
    """
    n = _n_of(prev)
    target_purity = _overlap(target, target, n, k)
    opt = AdamState.zeros(layer.n_params)
    trace = []
    best_cost, best_params = np.inf, params
    for t in range(config.max_iters):
        if config.gradient == "analytic":
            cost, grad = _adjoint_cost_grad(prev, layer, params, target, n, k, target_purity)
        else:
            cost = _cost_arrays(run_circuit(prev, layer, params), target, n, k, target_purity)
            grad = _fd_grad(prev, layer, params, target, n, k, config.fd_step, target_purity)
        trace.append(float(cost))
        if cost < best_cost:
            best_cost, best_params = cost, params
        if cost < ZERO_COST:
            break
        if config.stop == "threshold" and cost <= config.tol:
            break
        if config.stop == "difference" and t > 0 and abs(trace[-1] - trace[-2]) <= config.tol:
            break
        if t == config.max_iters - 1:
            break
        params, opt = adam_step(params, grad, opt, config.lr, config.beta1, config.beta2, config.eps)
    if config.keep_best:
        return best_params, trace
    return params, trace


def _fd_grad(prev, layer, params, target, n, k, h, target_purity):
    grad = np.zeros(layer.n_params)
    for mu in range(layer.n_params):
        e = np.zeros_like(params)
        e[mu] = h
        up = _cost_arrays(run_circuit(prev, layer, params + e), target, n, k, target_purity)
        down = _cost_arrays(run_circuit(prev, layer, params - e), target, n, k, target_purity)
        grad[mu] = (up - down) / (2 * h)
    return grad


def run_qssm(target, config: TrainConfig = TrainConfig(), widths=None) -> ScatteringModel:
    """Train layers k = 1..n in order and return the assembled model."""
    tgt = _amps(target)
    n = _n_of(tgt)
    start = time.perf_counter()
    widths = list(widths) if widths is not None else layer_widths(target, config)
    if len(widths) != n:
        raise ArgumentError(f"need {n} widths, got {len(widths)}")
    vec = _amps(zero_state(n)).copy()
    layers = []
    for k in range(1, n + 1):
        res = train_layer(k, vec, tgt, config, child_rng(config.seed, "layer", k), width=widths[k - 1])
        layers.append(Layer(k, res.circuit, res.params, res.trace))
        vec = res.state
    state = StateVector.normalized(vec)
    return ScatteringModel(n, layers, state, fidelity_pure(state, tgt), config, time.perf_counter() - start)
