"""Global-circuit baseline and gradient-variance experiments.

The global baseline trains one hardware-efficient circuit on all n registers
against the full-state cost 2 - 2|<psi|phi>|^2, with the same optimizer and
stopping rules as the sequential model.

Variance experiments wrap a single central Z rotation between two Haar-random
unitaries. The rotation is exp(-i phi Z) = RZ(2 phi) and derivatives are taken
with respect to phi, i.e. with a generator whose square trace is 2. This is the
convention under which the last-step variance lies in [16/27, 8/9].
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circuit import Gate, ParamCircuit, build_hea, haar_unitary, random_params, run_circuit
from .errors import ArgumentError, CapacityError
from .qstate import StateVector, _amps, _n_of, fidelity_pure, zero_state
from .rng import child_rng
from .sequential import TrainConfig, g_expectation, minimize_cost, shift_rule_gradient, width_schedule
from .targets import TargetSpec, make_target

MAX_GLOBAL_REGISTERS = 12
# d/dphi of RZ(2 phi) is twice the derivative in the RZ angle
ROTATION_SCALE = 2.0
STEPS = ("first", "middle", "last", "global")


# -- global baseline ----------------------------------------------------------

@dataclass
class GlobalResult:
    params: np.ndarray
    trace: list
    fidelity: float
    state: StateVector
    circuit: ParamCircuit
    wall_time: float = 0.0

    def to_json(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "iterations": len(self.trace),
            "trace": self.trace,
            "params": list(map(float, self.params)),
            "circuit": self.circuit.to_json(),
        }


def train_global_qnn(target, config: TrainConfig = TrainConfig()) -> GlobalResult:
    """Train one width-n, depth-d circuit on C_n = 2 - 2|<psi(theta)|phi>|^2."""
    tgt = _amps(target)
    n = _n_of(tgt)
    if n > MAX_GLOBAL_REGISTERS:
        raise CapacityError(f"global training supports n <= {MAX_GLOBAL_REGISTERS}")
    start = time.perf_counter()
    circuit = build_hea(n, config.depth)
    params = random_params(circuit, child_rng(config.seed, "global"))
    prev = _amps(zero_state(n))
    params, trace = minimize_cost(prev, circuit, params, tgt, n, config)
    state = StateVector.normalized(run_circuit(prev, circuit, params))
    return GlobalResult(params, trace, fidelity_pure(state, tgt), state, circuit, time.perf_counter() - start)


# -- samplers ---------------------------------------------------------------

def purification_carrier(target, k: int) -> np.ndarray:
    """A state whose first k-1 registers reduce to those of ``target``.

    The SVD of the (k-1)-prefix reshape gives rho_(k-1) = sum_i s_i^2 |u_i><u_i|.
    The carrier places s_i |u_i> on the prefix and the basis state |i> on the
    next a = ceil(log2 r) registers, all later registers in |0>. For k = 1 it is
    |0...0>.
    """
    tgt = _amps(target)
    n = _n_of(tgt)
    if not 1 <= k <= n:
        raise ArgumentError(f"step k={k} outside [1, {n}]")
    if k == 1:
        return _amps(zero_state(n)).copy()
    m = tgt.reshape(1 << (k - 1), 1 << (n - k + 1))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    r = int(np.sum(s > 1e-12 * s[0]))
    a = math.ceil(math.log2(r)) if r > 1 else 0
    if a > n - k + 1:
        raise CapacityError(f"rank {r} at cut {k - 1} does not fit in {n - k + 1} registers")
    carrier = np.zeros_like(m)
    shift = n - k + 1 - a
    for i in range(r):
        carrier[:, i << shift] = u[:, i] * s[i]
    vec = carrier.reshape(-1)
    return vec / np.linalg.norm(vec)


def _sandwich(width: int, u_minus, u_plus) -> ParamCircuit:
    block = tuple(range(1, width + 1))
    gates = (Gate("FixedUnitary", block, (), u_minus), Gate("RZ", (1,), (0,)), Gate("FixedUnitary", block, (), u_plus))
    return ParamCircuit(width, gates, 1)


def sample_gradient_qssm(target, n: int, k: int, w_k: int, rng) -> float:
    """dC_k/dphi for a layer U+ exp(-i phi Z_k) U- with Haar U+-, phi uniform.

    The incoming state is an exact purification of the target's (k-1)-prefix,
    so the sample isolates the randomness of layer k. The derivative comes
    from the parameter-shift rule.
    """
    tgt = _amps(target)
    if _n_of(tgt) != n:
        raise ArgumentError(f"target has {_n_of(tgt)} registers, expected {n}")
    if not 1 <= k <= n:
        raise ArgumentError(f"step k={k} outside [1, {n}]")
    if w_k < 1 or k + w_k - 1 > n:
        raise ArgumentError(f"width {w_k} at step {k} exceeds n={n}")
    dim = 1 << w_k
    u_minus, u_plus = haar_unitary(dim, rng), haar_unitary(dim, rng)
    phi = rng.uniform(0.0, 2 * math.pi)
    layer = _sandwich(w_k, u_minus, u_plus).at(k)
    prev = purification_carrier(tgt, k)
    grad = shift_rule_gradient(k, prev, layer, np.array([ROTATION_SCALE * phi]), tgt)
    return float(ROTATION_SCALE * grad[0])


def sample_gradient_global(target, n: int, rng, dense: bool = False) -> float:
    """dC_n/dphi for U+ exp(-i phi Z_1) U- |0> with Haar U+- on all registers.

    The cost only sees a = U-|0> and b = U+^dag |phi>, which are independent
    Haar-random unit vectors. The default draws them directly; ``dense=True``
    samples the full unitaries and runs the parameter-shift circuit instead.
    Both give the same distribution.
    """
    tgt = _amps(target)
    if _n_of(tgt) != n:
        raise ArgumentError(f"target has {_n_of(tgt)} registers, expected {n}")
    if n > MAX_GLOBAL_REGISTERS:
        raise CapacityError(f"global sampling supports n <= {MAX_GLOBAL_REGISTERS}")
    dim = 1 << n
    if dense:
        u_minus, u_plus = haar_unitary(dim, rng), haar_unitary(dim, rng)
        phi = rng.uniform(0.0, 2 * math.pi)
        layer = _sandwich(n, u_minus, u_plus)
        zero = _amps(zero_state(n))
        theta = ROTATION_SCALE * phi
        ref = run_circuit(zero, layer, np.array([theta]))
        plus = g_expectation(run_circuit(zero, layer, np.array([theta + math.pi / 2])), ref, tgt, n)
        minus = g_expectation(run_circuit(zero, layer, np.array([theta - math.pi / 2])), ref, tgt, n)
        return float(ROTATION_SCALE * (plus - minus))
    a = _haar_vector(dim, rng)
    b = _haar_vector(dim, rng)
    phi = rng.uniform(0.0, 2 * math.pi)
    z = np.where(np.arange(dim) < dim // 2, 1.0, -1.0)
    ra = np.exp(-1j * phi * z) * a
    f = np.vdot(b, ra)
    df = np.vdot(b, -1j * z * ra)
    # C = 2 - 2|f|^2
    return float(-4.0 * np.real(np.conj(f) * df))


def _haar_vector(dim, rng):
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def prop_s1_closed_form(c1: float) -> float:
    """Last-step variance (8/9)(c1^4 + c2^4 + 10 c1^2 c2^2) with c2 = 1 - c1."""
    if not 0.0 <= c1 <= 1.0:
        raise ArgumentError("c1 must lie in [0, 1]")
    c2 = 1.0 - c1
    return 8.0 / 9.0 * (c1**4 + c2**4 + 10.0 * c1**2 * c2**2)


def last_cut_weights(target) -> tuple:
    """Eigenvalues (c1, c2) of the target's (n-1)-register reduction."""
    tgt = _amps(target)
    n = _n_of(tgt)
    s = np.linalg.svd(tgt.reshape(1 << (n - 1), 2), compute_uv=False)
    w = np.sort(s**2)[::-1]
    return float(w[0]), float(w[1])


# -- experiments ------------------------------------------------------------

@dataclass(frozen=True)
class VarianceExperimentConfig:
    family: str = "ghz"
    n_values: tuple = (4, 6, 8, 10)
    steps: tuple = ("first", "middle", "last", "global")
    samples: int = 500
    seed: int = 0
    w_max: int = 2
    target: dict = field(default_factory=dict)
    dense_global: bool = False

    def validate(self) -> list:
        errors = []
        if self.samples < 2:
            errors.append(("samples", "must be >= 2"))
        if not self.n_values:
            errors.append(("n_values", "must be nonempty"))
        elif any(not isinstance(n, int) or n < 2 for n in self.n_values):
            errors.append(("n_values", "entries must be integers >= 2"))
        bad = [s for s in self.steps if s not in STEPS]
        if not self.steps or bad:
            errors.append(("steps", f"must be a nonempty subset of {', '.join(STEPS)}"))
        if self.w_max < 1:
            errors.append(("w_max", "must be >= 1"))
        if "global" in self.steps and self.n_values and max(self.n_values) > MAX_GLOBAL_REGISTERS:
            errors.append(("n_values", f"global sampling supports n <= {MAX_GLOBAL_REGISTERS}"))
        return errors

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(self.n_values))
        object.__setattr__(self, "steps", tuple(self.steps))
        errors = self.validate()
        if errors:
            raise ArgumentError("; ".join(f"{k}: {m}" for k, m in errors))

    def to_json(self) -> dict:
        out = asdict(self)
        out["n_values"], out["steps"] = list(self.n_values), list(self.steps)
        return out


@dataclass(frozen=True)
class VariancePoint:
    family: str
    n: int
    step: str
    samples: int
    mean: float
    variance: float

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.samples)

    def row(self) -> dict:
        return {"family": self.family, "n": self.n, "step": self.step, "samples": self.samples,
                "mean": self.mean, "variance": self.variance, "stderr": self.stderr}


def step_index(step: str, n: int) -> int:
    return {"first": 1, "middle": max(1, n // 2), "last": n}[step]


def draw_gradients(target, step: str, samples: int, seed: int, w_max: int, key=(), threads: int = 1,
                   dense_global: bool = False) -> np.ndarray:
    """``samples`` gradient draws; sample i uses the stream child_rng(seed, *key, i)."""
    tgt = _amps(target)
    n = _n_of(tgt)
    if step == "global":
        def one(i):
            return sample_gradient_global(tgt, n, child_rng(seed, *key, i), dense=dense_global)
    else:
        k = step_index(step, n)
        w = width_schedule(n, k, w_max)

        def one(i):
            return sample_gradient_qssm(tgt, n, k, w, child_rng(seed, *key, i))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return np.array(list(pool.map(one, range(samples))))
    return np.array([one(i) for i in range(samples)])


def summarize(family, n, step, values) -> VariancePoint:
    values = np.asarray(values, dtype=float)
    return VariancePoint(family, n, step, values.size, float(values.mean()), float(values.var(ddof=1)))


def run_variance_experiment(config: VarianceExperimentConfig, threads: int = 1) -> list:
    points = []
    for n in config.n_values:
        spec = TargetSpec(config.family, n, **config.target)
        target = make_target(spec)
        for step in config.steps:
            vals = draw_gradients(target, step, config.samples, config.seed, config.w_max,
                                  key=(config.family, n, step), threads=threads, dense_global=config.dense_global)
            points.append(summarize(config.family, n, step, vals))
    return points


CSV_COLUMNS = ("family", "n", "step", "samples", "mean", "variance", "stderr")


def write_variance_csv(points, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for p in points:
            writer.writerow(p.row())


def write_variance_json(points, path):
    Path(path).write_text(json.dumps([p.row() for p in points], indent=2))


def log2_slope(points, step: str = "global") -> float:
    """Least-squares slope of log2(variance) against n."""
    sel = sorted((p.n, p.variance) for p in points if p.step == step)
    ns = np.array([s[0] for s in sel], dtype=float)
    lv = np.log2([s[1] for s in sel])
    return float(np.polyfit(ns, lv, 1)[0])
