"""Noisy density-matrix training with shot-estimated costs.

States are dense density matrices on at most 6 registers. Every gate is
followed by a depolarizing channel on its targets and by thermal relaxation on
each target register. Cost terms tr[s^2], tr[r^2] and tr[s r] come from a
simulated swap test, and every layer is optimized several times from fresh
starting points with Nelder-Mead, keeping the restart with the lowest cost.
"""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuit import Gate, ParamCircuit, build_hea, random_params
from .errors import ArgumentError, CapacityError
from .optim import NelderMeadConfig, nelder_mead_minimize
from .qstate import DensityMatrix, StateVector, _amps, _n_of, fidelity_pure, zero_state
from .rng import child_rng, split_seed
from .sequential import Layer, ScatteringModel, TrainConfig, layer_widths

MAX_DM_REGISTERS = 6


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing rates per gate arity and thermal relaxation times.

    ``t1`` and ``t2`` are in microseconds, ``gate_time`` in nanoseconds; use
    ``math.inf`` for no relaxation.
    """

    p_depol_1q: float = 1e-3
    p_depol_2q: float = 1e-3
    t1: float = 1000.0
    t2: float = 100.0
    gate_time: float = 1.0

    def validate(self) -> list:
        errors = []
        for name in ("p_depol_1q", "p_depol_2q"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                errors.append((name, "must lie in [0, 1]"))
        if not self.t1 > 0:
            errors.append(("t1", "must be > 0"))
        if not self.t2 > 0:
            errors.append(("t2", "must be > 0"))
        elif self.t1 > 0 and not self.t2 <= 2 * self.t1:
            errors.append(("t2", "must satisfy t2 <= 2 * t1"))
        if not (self.gate_time > 0 and math.isfinite(self.gate_time)):
            errors.append(("gate_time", "must be a positive finite number"))
        return errors

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ArgumentError("; ".join(f"{k}: {m}" for k, m in errors))

    @classmethod
    def noiseless(cls) -> NoiseModel:
        return cls(0.0, 0.0, math.inf, math.inf, 1.0)

    def damping(self) -> tuple:
        """(gamma, lambda) for amplitude and pure-phase damping over one gate."""
        t = self.gate_time * 1e-3
        gamma = 0.0 if math.isinf(self.t1) else -math.expm1(-t / self.t1)
        rate = (0.0 if math.isinf(self.t2) else 1.0 / self.t2) - (0.0 if math.isinf(self.t1) else 0.5 / self.t1)
        lam = -math.expm1(-2.0 * t * max(rate, 0.0))
        return gamma, lam

    def relaxation_kraus(self) -> list:
        """Phase damping after amplitude damping, so coherences decay as exp(-t/T2)."""
        gamma, lam = self.damping()
        ad = [np.array([[1, 0], [0, math.sqrt(1 - gamma)]]), np.array([[0, math.sqrt(gamma)], [0, 0]])]
        pd = [np.array([[1, 0], [0, math.sqrt(1 - lam)]]), np.array([[0, 0], [0, math.sqrt(lam)]])]
        ops = [p @ a for p in pd for a in ad]
        return [k.astype(complex) for k in ops if np.any(k)]

    def to_json(self) -> dict:
        return {k: (None if math.isinf(v) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, obj) -> NoiseModel:
        return cls(**{k: (math.inf if v is None else v) for k, v in obj.items()})


@dataclass
class ShotEstimator:
    """Swap-test shot count and its random stream; ``shots == 0`` means exact."""

    shots: int = 8192
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.shots, (int, np.integer)) or self.shots < 0:
            raise ArgumentError("shots must be a non-negative integer (0 = exact)")
        self.rng = child_rng(self.seed, "shots")

    def spawn(self, *keys) -> ShotEstimator:
        return ShotEstimator(self.shots, split_seed(self.seed, *keys))

    def to_json(self) -> dict:
        return {"shots": int(self.shots), "seed": int(self.seed)}


# -- density-matrix kernels ------------------------------------------------------

def _left(rho: np.ndarray, op: np.ndarray, targets, n: int) -> np.ndarray:
    """op acting on the row index of rho on the given global registers."""
    m = len(targets)
    t = rho.reshape((2,) * n + (rho.shape[1],))
    axes = [q - 1 for q in targets]
    t = np.moveaxis(t, axes, range(m))
    shape = t.shape
    t = (op @ t.reshape(1 << m, -1)).reshape(shape)
    return np.moveaxis(t, range(m), axes).reshape(rho.shape)


def conjugate(rho: np.ndarray, op: np.ndarray, targets, n: int) -> np.ndarray:
    """op rho op^dag with op on the given registers."""
    x = _left(rho, op, targets, n)
    return _left(x.conj().T, op, targets, n).conj().T


def depolarize(rho: np.ndarray, p: float, targets, n: int) -> np.ndarray:
    """(1 - p) rho + p I/d (x) tr_S rho on the subsystem S of ``targets``."""
    if p == 0:
        return rho
    m = len(targets)
    axes = [q - 1 for q in targets] + [n + q - 1 for q in targets]
    t = np.moveaxis(rho.reshape((2,) * (2 * n)), axes, range(2 * m))
    shape = t.shape
    d = 1 << m
    t = t.reshape(d, d, -1)
    reduced = np.einsum("aar->r", t)
    mixed = (np.eye(d)[:, :, None] / d) * reduced[None, None, :]
    out = np.moveaxis(mixed.reshape(shape), range(2 * m), axes).reshape(rho.shape)
    return (1 - p) * rho + p * out


def kraus_1q(rho: np.ndarray, ops, q: int, n: int) -> np.ndarray:
    return sum(conjugate(rho, k, (q,), n) for k in ops)


def _gate_matrix(gate: Gate, params) -> np.ndarray:
    return gate.unitary(params)


def apply_gate_raw(rho, gate: Gate, params, noise: NoiseModel, n: int, offset: int = 1, kraus=None):
    targets = tuple(t + offset - 1 for t in gate.targets)
    rho = conjugate(rho, _gate_matrix(gate, params), targets, n)
    p = noise.p_depol_1q if len(targets) == 1 else noise.p_depol_2q
    rho = depolarize(rho, p, targets, n)
    kraus = noise.relaxation_kraus() if kraus is None else kraus
    if len(kraus) > 1:
        for q in targets:
            rho = kraus_1q(rho, kraus, q, n)
    return rho


def apply_gate_dm(rho, gate: Gate, noise: NoiseModel, params=(), offset: int = 1) -> DensityMatrix:
    """Noisy application of one gate: unitary, depolarizing, then relaxation per register."""
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = _n_of(mat[0])
    if n > MAX_DM_REGISTERS:
        raise CapacityError(f"noisy simulation supports at most {MAX_DM_REGISTERS} registers")
    if max(gate.targets) + offset - 1 > n:
        raise ArgumentError(f"gate targets {gate.targets} at offset {offset} exceed n={n}")
    out = apply_gate_raw(mat, gate, list(params), noise, n, offset)
    return DensityMatrix((out + out.conj().T) / 2)


def run_circuit_dm(rho: np.ndarray, circuit: ParamCircuit, params, noise: NoiseModel) -> np.ndarray:
    n = _n_of(rho[0])
    kraus = noise.relaxation_kraus()
    for g in circuit.gates:
        rho = apply_gate_raw(rho, g, circuit.gate_params(g, params), noise, n, circuit.offset, kraus)
    return rho


def reduce_prefix_dm(rho: np.ndarray, k: int) -> np.ndarray:
    """Partial trace over registers k+1..n of a dense density matrix."""
    n = _n_of(rho[0])
    t = rho.reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))
    return np.einsum("ajbj->ab", t)


# -- swap test ---------------------------------------------------------------

def swap_test_overlap(rho, sigma, est: ShotEstimator) -> float:
    """Shot estimate 2 B/shots - 1 of tr[rho sigma], B ~ Binomial(shots, (1 + q)/2)."""
    a = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, DensityMatrix) else np.asarray(sigma)
    if a.shape != b.shape:
        raise ArgumentError(f"dimension mismatch {a.shape} vs {b.shape}")
    q = float(np.real(np.vdot(a.conj().T, b)))
    if est.shots == 0:
        return q
    accept = min(max((1.0 + q) / 2.0, 0.0), 1.0)
    return 2.0 * est.rng.binomial(est.shots, accept) / est.shots - 1.0


def estimated_cost(sigma_k: np.ndarray, rho_k: np.ndarray, est: ShotEstimator) -> float:
    return (swap_test_overlap(sigma_k, sigma_k, est) + swap_test_overlap(rho_k, rho_k, est)
            - 2.0 * swap_test_overlap(sigma_k, rho_k, est))


# -- training ----------------------------------------------------------------

@dataclass
class NoisyRun:
    model: ScatteringModel
    traces: list
    chosen: list

    def write_traces(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "estimated_cost", "restart", "layer"])
            writer.writerows(self.traces)


def train_qssm_noisy(target, config: TrainConfig, noise: NoiseModel, est: ShotEstimator, restarts: int = 20,
                     optimizer: NelderMeadConfig = NelderMeadConfig(max_evals=400), threads: int = 1) -> NoisyRun:
    """Layer-by-layer training on noisy density matrices with shot-estimated costs.

    Restart r of layer k starts from uniform random angles drawn from
    child_rng(seed, "noisy", k, r) and estimates shots from its own stream.
    After optimization each restart's final parameters are re-estimated once;
    the lowest re-estimate wins, ties going to the lower restart index. The
    returned model's fidelity is that of the noiseless circuit.
    """
    tgt = _amps(target)
    n = _n_of(tgt)
    if n > MAX_DM_REGISTERS:
        raise CapacityError(f"noisy training supports n <= {MAX_DM_REGISTERS}")
    if restarts < 1:
        raise ArgumentError("restarts must be >= 1")
    start = time.perf_counter()
    widths = layer_widths(target, config)
    target_dm = np.outer(tgt, tgt.conj())
    rho = np.outer(_amps(zero_state(n)), _amps(zero_state(n)).conj())
    layers, traces, chosen = [], [], []
    for k in range(1, n + 1):
        layer = build_hea(widths[k - 1], config.depth, offset=k)
        rho_k = reduce_prefix_dm(target_dm, k)

        def attempt(r, k=k, layer=layer, rho_in=rho, rho_k=rho_k):
            shots = est.spawn("layer", k, "restart", r)

            def cost(x):
                out = run_circuit_dm(rho_in, layer, x, noise)
                return estimated_cost(reduce_prefix_dm(out, k), rho_k, shots)

            x0 = random_params(layer, child_rng(config.seed, "noisy", k, r))
            res = nelder_mead_minimize(cost, x0, optimizer)
            return res, cost(res.x)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(attempt, range(restarts)))
        else:
            results = [attempt(r) for r in range(restarts)]
        finals = [f for _, f in results]
        best = int(np.argmin(finals))
        for r, (res, _) in enumerate(results):
            traces.extend((i, c, r, k) for i, c in enumerate(res.trace))
        params = results[best][0].x
        chosen.append({"layer": k, "restart": best, "estimated_cost": finals[best]})
        layers.append(Layer(k, layer, params, list(results[best][0].trace)))
        rho = run_circuit_dm(rho, layer, params, noise)

    model = ScatteringModel(n, layers, zero_state(n), float("nan"), config, 0.0,
                            {"noise": noise.to_json(), "estimator": est.to_json(), "restarts": restarts})
    model.state = model.reconstruct()
    model.fidelity = fidelity_pure(model.state, tgt)
    model.wall_time = time.perf_counter() - start
    return NoisyRun(model, traces, chosen)


def noiseless_distribution(model: ScatteringModel, shots: int, rng) -> np.ndarray:
    """Bit-string counts sampled from the noiseless output of a trained model."""
    probs = np.abs(_amps(model.state)) ** 2
    return rng.multinomial(shots, probs / probs.sum())
