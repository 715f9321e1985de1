import math

import numpy as np
import pytest
from conftest import random_state, seeds
from hypothesis import given
from hypothesis import strategies as st

from qssm.circuit import (
    Gate,
    ParamCircuit,
    apply_circuit,
    apply_gate,
    build_hea,
    circuit_unitary,
    embed,
    haar_unitary,
    inverse_circuit,
    parameter_shift_pair,
    random_params,
    run_circuit,
    rx,
    rz,
    u3_matrix,
)
from qssm.errors import ArgumentError, UnsupportedGateError
from qssm.qstate import StateVector

angles = st.floats(-10, 10, allow_nan=False)


def test_u3_examples():
    assert abs(np.trace(u3_matrix(0, 0, 0))) == pytest.approx(2.0)
    assert abs(u3_matrix(math.pi, 0, 0)[1, 0]) == pytest.approx(1.0)


@given(angles, angles, angles)
def test_u3_is_unitary_and_matches_its_factors(t, p, l):
    u = u3_matrix(t, p, l)
    assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12)
    factors = rz(p) @ rx(-math.pi / 2) @ rz(t) @ rx(math.pi / 2) @ rz(l)
    assert np.allclose(u, factors, atol=1e-12)
    # the same matrix as a FixedUnitary gate acts identically on a state
    vec = random_state(1, np.random.default_rng(0))
    gate = Gate("FixedUnitary", (1,), (), u)
    assert np.allclose(apply_gate(vec, gate, [], 1), factors @ vec, atol=1e-12)


@pytest.mark.parametrize("w,d,count", [(4, 1, 24), (1, 3, 12), (2, 0, 6), (3, 20, 189)])
def test_hea_parameter_counts(w, d, count):
    c = build_hea(w, d)
    assert c.n_params == count
    if w == 1:
        assert all(g.kind == "U3" for g in c.gates)
    if d == 0:
        assert [g.kind for g in c.gates] == ["U3"] * w


def test_hea_rejects_zero_width():
    with pytest.raises(ArgumentError):
        build_hea(0, 2)


def test_hea_block_structure():
    kinds = [(g.kind, g.targets) for g in build_hea(4, 1).gates]
    cnots = [t for k, t in kinds if k == "CNOT"]
    assert cnots == [(1, 2), (3, 4), (2, 3)]
    assert [k for k, _ in kinds[:4]] == ["U3"] * 4 and [k for k, _ in kinds[-4:]] == ["U3"] * 4


def test_gate_validation():
    with pytest.raises(ArgumentError):
        Gate("RX", (1,), ())
    with pytest.raises(ArgumentError):
        Gate("CNOT", (1, 1))
    with pytest.raises(ArgumentError):
        Gate("SWAP", (1, 2))
    with pytest.raises(ArgumentError):
        ParamCircuit(2, (Gate("RX", (3,), (0,)),), 1)
    with pytest.raises(ArgumentError):
        ParamCircuit(1, (Gate("RX", (1,), (0,)), Gate("RY", (1,), (0,))), 1)


def test_apply_circuit_examples():
    psi = StateVector([0, 0, 1, 0])
    assert np.allclose(apply_circuit(psi, ParamCircuit(2, (), 0), []).amplitudes, psi.amplitudes)
    cnot = ParamCircuit(2, (Gate("CNOT", (1, 2)),), 0)
    assert np.allclose(apply_circuit(psi, cnot, []).amplitudes, [0, 0, 0, 1])
    with pytest.raises(ArgumentError):
        apply_circuit(psi, build_hea(2, 1), [0.0])
    with pytest.raises(ArgumentError):
        apply_circuit(psi, build_hea(2, 1, offset=2), np.zeros(12))


@given(w=st.integers(1, 6), d=st.integers(0, 20), seed=seeds)
def test_hea_preserves_norm(w, d, seed):
    rng = np.random.default_rng(seed)
    c = build_hea(w, d)
    out = run_circuit(random_state(w, rng), c, random_params(c, rng))
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-9)


@given(n=st.integers(2, 6), seed=seeds, data=st.data())
def test_kernels_match_dense_unitary(n, seed, data):
    rng = np.random.default_rng(seed)
    w = data.draw(st.integers(1, n))
    offset = data.draw(st.integers(1, n - w + 1))
    c = build_hea(w, 2, offset=offset)
    params = random_params(c, rng)
    vec = random_state(n, rng)
    dense = embed(circuit_unitary(c.at(1), params, w), offset, n)
    assert np.allclose(run_circuit(vec, c, params), dense @ vec, atol=1e-10)


@given(n=st.integers(2, 5), seed=seeds, data=st.data())
def test_single_gate_kernels_match_kron(n, seed, data):
    rng = np.random.default_rng(seed)
    a = data.draw(st.integers(1, n))
    b = data.draw(st.integers(1, n).filter(lambda x: x != a))
    vec = random_state(n, rng)
    x = np.array([[0, 1], [1, 0]])
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])

    def op(mats):
        out = np.eye(1)
        for q in range(1, n + 1):
            out = np.kron(out, mats.get(q, np.eye(2)))
        return out

    dense = op({a: p0}) + op({a: p1, b: x})
    assert np.allclose(apply_gate(vec, Gate("CNOT", (a, b)), [], n), dense @ vec)
    dense_cz = op({a: p0}) + op({a: p1, b: np.diag([1, -1])})
    assert np.allclose(apply_gate(vec, Gate("CZ", (a, b)), [], n), dense_cz @ vec)


@given(w=st.integers(1, 4), d=st.integers(0, 4), seed=seeds)
def test_inverse_circuit_undoes_circuit(w, d, seed):
    rng = np.random.default_rng(seed)
    c = build_hea(w, d)
    params = random_params(c, rng)
    vec = random_state(w, rng)
    inv, inv_params = inverse_circuit(c, params)
    assert np.allclose(run_circuit(run_circuit(vec, c, params), inv, inv_params), vec, atol=1e-9)


def test_circuit_json_roundtrip():
    u = haar_unitary(4, np.random.default_rng(0))
    c = ParamCircuit(3, (Gate("FixedUnitary", (1, 2), (), u), Gate("RZ", (3,), (0,))), 1, offset=2)
    back = ParamCircuit.from_json(c.to_json())
    assert back.offset == 2 and back.n_params == 1
    assert np.allclose(back.gates[0].matrix, u)


@pytest.mark.parametrize("dim", [2, 4, 16])
def test_haar_unitary_is_unitary(dim):
    u = haar_unitary(dim, np.random.default_rng(dim))
    assert np.allclose(u @ u.conj().T, np.eye(dim), atol=1e-10)


def test_haar_unitary_rejects_small_dim():
    with pytest.raises(ArgumentError):
        haar_unitary(1, np.random.default_rng(0))


def test_parameter_shift_pair():
    c = ParamCircuit(1, (Gate("RZ", (1,), (0,)),), 1)
    plus, minus = parameter_shift_pair(c, [0.0], 0)
    assert plus[0] == pytest.approx(math.pi / 2) and minus[0] == pytest.approx(-math.pi / 2)
    assert (plus + minus)[0] / 2 == pytest.approx(0.0)
    with pytest.raises(ArgumentError):
        parameter_shift_pair(c, [0.0], 1)
