import math

import numpy as np
import pytest
from conftest import random_state, seeds
from hypothesis import given
from hypothesis import strategies as st

from qssm.circuit import Gate, build_hea, random_params, run_circuit
from qssm.errors import ArgumentError, CapacityError
from qssm.noisy import (
    NoiseModel,
    ShotEstimator,
    apply_gate_dm,
    depolarize,
    kraus_1q,
    run_circuit_dm,
    swap_test_overlap,
    train_qssm_noisy,
)
from qssm.optim import NelderMeadConfig
from qssm.qstate import DensityMatrix, purity
from qssm.sequential import TrainConfig, run_qssm
from qssm.targets import ghz

EXACT = ShotEstimator(shots=0)
X = Gate("FixedUnitary", (1,), (), np.array([[0, 1], [1, 0]], dtype=complex))


def _random_dm(n, rng):
    g = rng.standard_normal((1 << n, 1 << n)) + 1j * rng.standard_normal((1 << n, 1 << n))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def test_noise_model_invariants():
    for bad in (dict(p_depol_1q=1.5), dict(t1=10.0, t2=30.0), dict(gate_time=0.0), dict(t1=-1.0)):
        with pytest.raises(ArgumentError):
            NoiseModel(**bad)
    model = NoiseModel()
    assert NoiseModel.from_json(model.to_json()) == model
    assert NoiseModel.from_json(NoiseModel.noiseless().to_json()) == NoiseModel.noiseless()
    with pytest.raises(ArgumentError):
        ShotEstimator(shots=-1)


def test_relaxation_matches_decay_times():
    model = NoiseModel(0.0, 0.0, t1=2.0, t2=1.5, gate_time=500.0)
    plus = np.full((2, 2), 0.5, dtype=complex)
    one = np.diag([0, 1]).astype(complex)
    t = 0.5
    assert abs(kraus_1q(plus, model.relaxation_kraus(), 1, 1)[0, 1]) == pytest.approx(0.5 * math.exp(-t / 1.5))
    assert kraus_1q(one, model.relaxation_kraus(), 1, 1)[1, 1].real == pytest.approx(math.exp(-t / 2.0))


def test_noiseless_gate_is_unitary_conjugation():
    rho = np.diag([1, 0]).astype(complex)
    out = apply_gate_dm(DensityMatrix(rho), X, NoiseModel.noiseless())
    assert np.allclose(out.matrix, np.diag([0, 1]))


def test_full_depolarizing_mixes_completely():
    rng = np.random.default_rng(0)
    out = depolarize(_random_dm(1, rng), 1.0, (1,), 1)
    assert np.allclose(out, np.eye(2) / 2)


def test_weak_noise_on_x_gate():
    out = apply_gate_dm(DensityMatrix(np.diag([1, 0]).astype(complex)), X, NoiseModel())
    assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-12)
    assert purity(out) < 1


@given(n=st.integers(1, 4), seed=seeds, data=st.data())
def test_channels_preserve_trace_and_positivity(n, seed, data):
    rng = np.random.default_rng(seed)
    rho = _random_dm(n, rng)
    targets = tuple(sorted(data.draw(st.sets(st.integers(1, n), min_size=1, max_size=min(2, n)))))
    p = data.draw(st.floats(0, 1))
    assert np.trace(depolarize(rho, p, targets, n)).real == pytest.approx(1.0, abs=1e-12)
    kraus = NoiseModel(t1=data.draw(st.floats(0.001, 10)), t2=0.001, gate_time=1.0).relaxation_kraus()
    relaxed = kraus_1q(rho, kraus, targets[0], n)
    assert np.trace(relaxed).real == pytest.approx(1.0, abs=1e-12)
    layer = build_hea(n, 1)
    out = run_circuit_dm(rho, layer, random_params(layer, rng), NoiseModel(p, p, 50.0, 60.0, 10.0))
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-9)
    assert np.linalg.eigvalsh((out + out.conj().T) / 2).min() > -1e-8


@given(n=st.integers(1, 4), seed=seeds)
def test_noiseless_density_path_matches_statevector_path(n, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(n, rng)
    layer = build_hea(n, 2)
    params = random_params(layer, rng)
    out = run_circuit_dm(np.outer(psi, psi.conj()), layer, params, NoiseModel.noiseless())
    ref = run_circuit(psi, layer, params)
    assert np.max(np.abs(out - np.outer(ref, ref.conj()))) < 1e-9


def test_swap_test_examples():
    zero = np.diag([1, 0]).astype(complex)
    one = np.diag([0, 1]).astype(complex)
    assert swap_test_overlap(zero, zero, EXACT) == pytest.approx(1.0)
    assert swap_test_overlap(np.eye(2) / 2, np.eye(2) / 2, EXACT) == pytest.approx(0.5)
    assert abs(swap_test_overlap(zero, one, ShotEstimator(10_000, seed=3))) < 0.05
    with pytest.raises(ArgumentError):
        swap_test_overlap(zero, np.eye(4) / 4, EXACT)


@given(seed=seeds)
def test_swap_test_exact_mode_and_unbiased_shots(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_dm(2, rng), _random_dm(2, rng)
    q = float(np.real(np.trace(a @ b)))
    assert swap_test_overlap(a, b, EXACT) == pytest.approx(q, abs=1e-12)
    est = ShotEstimator(256, seed=seed)
    draws = np.array([swap_test_overlap(a, b, est) for _ in range(400)])
    assert abs(draws.mean() - q) < 3 * draws.std(ddof=1) / math.sqrt(draws.size)


def test_capacity_limit():
    with pytest.raises(CapacityError):
        train_qssm_noisy(ghz(7), TrainConfig(depth=1), NoiseModel(), EXACT, restarts=1)


def test_noiseless_training_agrees_with_gradient_training():
    cfg = TrainConfig(depth=1, w_max=2, stop="threshold", tol=1e-6, max_iters=400)
    run = train_qssm_noisy(ghz(4), cfg, NoiseModel.noiseless(), EXACT, restarts=3,
                           optimizer=NelderMeadConfig(max_evals=800))
    assert abs(run.model.fidelity - run_qssm(ghz(4), cfg).fidelity) < 0.02


def test_restarts_are_deterministic_and_help(tmp_path):
    cfg = TrainConfig(depth=1, w_max=2)
    opts = NelderMeadConfig(max_evals=150)
    finals = {1: [], 20: []}
    for seed in range(10):
        for restarts in finals:
            est = ShotEstimator(8192, seed=seed)
            run = train_qssm_noisy(ghz(2), TrainConfig(depth=1, w_max=2, seed=seed), NoiseModel(), est,
                                   restarts=restarts, optimizer=opts)
            finals[restarts].append(run.chosen[-1]["estimated_cost"])
    assert np.median(finals[20]) <= np.median(finals[1])
    a = train_qssm_noisy(ghz(3), cfg, NoiseModel(), ShotEstimator(1024), restarts=3, optimizer=opts, threads=3)
    b = train_qssm_noisy(ghz(3), cfg, NoiseModel(), ShotEstimator(1024), restarts=3, optimizer=opts)
    assert a.chosen == b.chosen and a.traces == b.traces
    a.write_traces(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,estimated_cost,restart,layer" and len(lines) == 1 + len(a.traces)
