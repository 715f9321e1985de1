"""Parameterized gates, the hardware-efficient layer ansatz and statevector kernels.

Gate targets are 1-based and local to the circuit; a circuit with ``offset`` o
maps local register j onto global register o + j - 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, UnsupportedGateError
from .qstate import StateVector, _amps, _n_of

KINDS = ("RX", "RY", "RZ", "U3", "CNOT", "CZ", "FixedUnitary")
N_PARAMS = {"RX": 1, "RY": 1, "RZ": 1, "U3": 3, "CNOT": 0, "CZ": 0, "FixedUnitary": 0}
SHIFTABLE = ("RX", "RY", "RZ", "U3")

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def rx(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta):
    e = np.exp(-0.5j * theta)
    return np.array([[e, 0], [0, e.conjugate()]])


_RX_HALF = rx(math.pi / 2)
_RX_MHALF = rx(-math.pi / 2)


def u3_matrix(theta, phi, lam):
    """RZ(phi) RX(-pi/2) RZ(theta) RX(pi/2) RZ(lam); global phase is not normalized."""
    return rz(phi) @ _RX_MHALF @ rz(theta) @ _RX_HALF @ rz(lam)


def _u3_derivatives(theta, phi, lam):
    # each U3 angle enters through one RZ factor, d RZ(a)/da = -i Z/2 RZ(a)
    hz = -0.5j * _Z
    inner = _RX_MHALF @ rz(theta) @ _RX_HALF
    d_theta = rz(phi) @ _RX_MHALF @ hz @ rz(theta) @ _RX_HALF @ rz(lam)
    u = rz(phi) @ inner @ rz(lam)
    return d_theta, hz @ u, u @ hz


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple
    param_slots: tuple = ()
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "param_slots", tuple(int(s) for s in self.param_slots))
        if len(set(self.targets)) != len(self.targets) or not self.targets:
            raise ArgumentError(f"gate targets must be distinct and nonempty: {self.targets}")
        if len(self.param_slots) != N_PARAMS[self.kind]:
            raise ArgumentError(f"{self.kind} takes {N_PARAMS[self.kind]} parameters")
        arity = {"CNOT": 2, "CZ": 2, "FixedUnitary": None}.get(self.kind, 1)
        if arity is not None and len(self.targets) != arity:
            raise ArgumentError(f"{self.kind} acts on {arity} register(s)")
        if self.kind == "FixedUnitary":
            if self.matrix is None:
                raise ArgumentError("FixedUnitary needs a matrix")
            mat = np.array(self.matrix, dtype=complex)
            dim = 1 << len(self.targets)
            if mat.shape != (dim, dim):
                raise ArgumentError(f"FixedUnitary matrix must be {dim}x{dim}")
            if list(self.targets) != list(range(self.targets[0], self.targets[0] + len(self.targets))):
                raise ArgumentError("FixedUnitary targets must be contiguous and ascending")
            mat.setflags(write=False)
            object.__setattr__(self, "matrix", mat)
        elif self.matrix is not None:
            raise ArgumentError("only FixedUnitary gates carry a matrix")

    def unitary(self, params=()) -> np.ndarray:
        """Matrix on the gate's own targets (first target = most significant bit)."""
        if self.kind == "U3":
            return u3_matrix(*params)
        if self.kind in ("RX", "RY", "RZ"):
            return {"RX": rx, "RY": ry, "RZ": rz}[self.kind](params[0])
        if self.kind == "CNOT":
            return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
        if self.kind == "CZ":
            return np.diag([1, 1, 1, -1]).astype(complex)
        return self.matrix

    def derivatives(self, params) -> list:
        """d(unitary)/d(angle) for every parameter slot of the gate."""
        if self.kind == "U3":
            return list(_u3_derivatives(*params))
        if self.kind in ("RX", "RY", "RZ"):
            pauli = {"RX": _X, "RY": _Y, "RZ": _Z}[self.kind]
            return [-0.5j * pauli @ self.unitary(params)]
        raise UnsupportedGateError(f"{self.kind} has no parameter-shift derivative")


@dataclass(frozen=True)
class ParamCircuit:
    width: int
    gates: tuple
    n_params: int
    offset: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.width < 1:
            raise ArgumentError("circuit width must be at least 1")
        if self.offset < 1:
            raise ArgumentError("circuit offset must be at least 1")
        seen = []
        for g in self.gates:
            if max(g.targets) > self.width or min(g.targets) < 1:
                raise ArgumentError(f"gate targets {g.targets} outside width {self.width}")
            seen.extend(g.param_slots)
        if sorted(seen) != list(range(self.n_params)):
            raise ArgumentError("every parameter slot must be used by exactly one gate")

    def at(self, offset: int) -> ParamCircuit:
        return ParamCircuit(self.width, self.gates, self.n_params, offset)

    def gate_params(self, gate, params):
        return [params[s] for s in gate.param_slots]

    def shiftable(self) -> bool:
        return all(g.kind in SHIFTABLE for g in self.gates if g.param_slots)

    def to_json(self) -> dict:
        gates = []
        for g in self.gates:
            entry = {"kind": g.kind, "targets": list(g.targets), "param_slots": list(g.param_slots)}
            if g.matrix is not None:
                entry["matrix"] = {"re": g.matrix.real.tolist(), "im": g.matrix.imag.tolist()}
            gates.append(entry)
        return {"width": self.width, "offset": self.offset, "gates": gates, "n_params": self.n_params}

    @classmethod
    def from_json(cls, obj) -> ParamCircuit:
        gates = []
        for g in obj["gates"]:
            mat = None
            if "matrix" in g:
                mat = np.asarray(g["matrix"]["re"]) + 1j * np.asarray(g["matrix"]["im"])
            gates.append(Gate(g["kind"], tuple(g["targets"]), tuple(g["param_slots"]), mat))
        return cls(obj["width"], tuple(gates), obj["n_params"], obj.get("offset", 1))


def build_hea(width: int, depth: int, offset: int = 1) -> ParamCircuit:
    """U3 column, then ``depth`` blocks of [CNOTs on (1,2),(3,4)..; CNOTs on (2,3),(4,5)..; U3 column]."""
    if width < 1:
        raise ArgumentError("HEA width must be at least 1")
    if depth < 0:
        raise ArgumentError("HEA depth must be nonnegative")
    gates = []
    slot = 0

    def u3_column():
        nonlocal slot
        for q in range(1, width + 1):
            gates.append(Gate("U3", (q,), (slot, slot + 1, slot + 2)))
            slot += 3

    u3_column()
    for _ in range(depth):
        for start in (1, 2):
            for q in range(start, width, 2):
                gates.append(Gate("CNOT", (q, q + 1)))
        u3_column()
    return ParamCircuit(width, tuple(gates), slot, offset)


# -- kernels ----------------------------------------------------------------

def apply_1q(vec: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    """Apply a 2x2 matrix to global register q (1-based) by strided bit-pair updates."""
    v = vec.reshape(1 << (q - 1), 2, 1 << (n - q))
    a0, a1 = v[:, 0, :], v[:, 1, :]
    out = np.empty_like(v)
    out[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    out[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return out.reshape(-1)


def _slicer(n, c, t, vc, vt):
    idx = [slice(None)] * n
    idx[c - 1], idx[t - 1] = vc, vt
    return tuple(idx)


def apply_cnot(vec: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    v = vec.reshape((2,) * n)
    out = v.copy()
    out[_slicer(n, c, t, 1, 0)] = v[_slicer(n, c, t, 1, 1)]
    out[_slicer(n, c, t, 1, 1)] = v[_slicer(n, c, t, 1, 0)]
    return out.reshape(-1)


def apply_cz(vec: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    out = vec.reshape((2,) * n).copy()
    out[_slicer(n, c, t, 1, 1)] *= -1
    return out.reshape(-1)


def apply_block(vec: np.ndarray, u: np.ndarray, first: int, width: int, n: int) -> np.ndarray:
    """Apply a 2^w x 2^w matrix to the contiguous registers first..first+w-1."""
    v = vec.reshape(1 << (first - 1), 1 << width, 1 << (n - first - width + 1))
    return np.einsum("ab,ibj->iaj", u, v).reshape(-1)


def apply_gate(vec, gate: Gate, params, n: int, offset: int = 1, inverse: bool = False):
    """Apply one gate given its own parameter values (not the circuit vector)."""
    base = offset - 1
    if gate.kind == "CNOT":
        return apply_cnot(vec, gate.targets[0] + base, gate.targets[1] + base, n)
    if gate.kind == "CZ":
        return apply_cz(vec, gate.targets[0] + base, gate.targets[1] + base, n)
    u = gate.unitary(params)
    if inverse:
        u = u.conj().T
    if len(gate.targets) == 1:
        return apply_1q(vec, u, gate.targets[0] + base, n)
    return apply_block(vec, u, gate.targets[0] + base, len(gate.targets), n)


def _check_fit(circuit: ParamCircuit, params, n: int):
    if len(params) != circuit.n_params:
        raise ArgumentError(f"expected {circuit.n_params} parameters, got {len(params)}")
    if circuit.offset + circuit.width - 1 > n:
        raise ArgumentError(
            f"circuit on registers {circuit.offset}..{circuit.offset + circuit.width - 1} exceeds n={n}"
        )


def run_circuit(vec: np.ndarray, circuit: ParamCircuit, params) -> np.ndarray:
    """Raw-array version of :func:`apply_circuit` without state validation."""
    n = _n_of(vec)
    params = np.asarray(params, dtype=float)
    _check_fit(circuit, params, n)
    for g in circuit.gates:
        vec = apply_gate(vec, g, circuit.gate_params(g, params), n, circuit.offset)
    return vec


def apply_circuit(state, circuit: ParamCircuit, params) -> StateVector:
    return StateVector(run_circuit(_amps(state), circuit, params))


def circuit_unitary(circuit: ParamCircuit, params, n: int | None = None) -> np.ndarray:
    """Dense unitary of the circuit on n registers (oracle for the kernels)."""
    n = n or circuit.offset + circuit.width - 1
    dim = 1 << n
    cols = [run_circuit(np.eye(dim, dtype=complex)[:, j], circuit, params) for j in range(dim)]
    return np.stack(cols, axis=1)


def embed(u: np.ndarray, first: int, n: int) -> np.ndarray:
    """Kronecker-embed a matrix acting on contiguous registers starting at ``first``."""
    width = int(u.shape[0]).bit_length() - 1
    left = np.eye(1 << (first - 1))
    right = np.eye(1 << (n - first - width + 1))
    return np.kron(np.kron(left, u), right)


def inverse_circuit(circuit: ParamCircuit, params):
    """Reversed gate list with negated angles.

    Rotations and CNOT/CZ invert at negated angle or are self-inverse; U3 also
    swaps its outer angles, U3(t, p, l)^-1 = U3(-t, -l, -p).
    """
    gates, new_params = [], []
    slot = 0
    for g in reversed(circuit.gates):
        p = circuit.gate_params(g, params)
        if g.kind == "U3":
            theta, phi, lam = p
            gates.append(Gate("U3", g.targets, (slot, slot + 1, slot + 2)))
            new_params.extend([-theta, -lam, -phi])
            slot += 3
        elif g.kind in ("RX", "RY", "RZ"):
            gates.append(Gate(g.kind, g.targets, (slot,)))
            new_params.append(-p[0])
            slot += 1
        elif g.kind == "FixedUnitary":
            gates.append(Gate(g.kind, g.targets, (), g.matrix.conj().T))
        else:
            gates.append(g)
    return ParamCircuit(circuit.width, tuple(gates), slot, circuit.offset), np.array(new_params)


def random_params(circuit: ParamCircuit, rng) -> np.ndarray:
    return rng.uniform(0.0, 2 * math.pi, size=circuit.n_params)


def haar_unitary(dim: int, rng) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    return haar_unitaries(dim, 1, rng)[0]


def haar_unitaries(dim: int, count: int, rng) -> np.ndarray:
    if dim < 2:
        raise ArgumentError("Haar unitaries need dimension >= 2")
    z = (rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def parameter_shift_pair(circuit: ParamCircuit, params, slot: int):
    if not 0 <= slot < circuit.n_params:
        raise ArgumentError(f"parameter slot {slot} outside [0, {circuit.n_params})")
    owner = next(g for g in circuit.gates if slot in g.param_slots)
    if owner.kind not in SHIFTABLE:
        raise UnsupportedGateError(f"{owner.kind} does not satisfy the parameter-shift rule")
    plus = np.array(params, dtype=float)
    minus = plus.copy()
    plus[slot] += math.pi / 2
    minus[slot] -= math.pi / 2
    return plus, minus
