"""Pure states, density matrices and the reduced-state quantities used for training.

Bit convention: register q_1 is the most significant bit of the basis index and
q_n the least significant. Keeping the first k registers therefore corresponds
to reshaping a state vector into a 2^k x 2^(n-k) matrix whose row index holds
the prefix bits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError, CapacityError, EncodingError, ParseError

MAX_STATE_REGISTERS = 24
MAX_DENSE_REGISTERS = 12
NORM_TOL = 1e-9


def _amps(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


def _n_of(vec: np.ndarray) -> int:
    n = int(vec.size).bit_length() - 1
    if n < 1 or vec.size != 1 << n:
        raise ArgumentError(f"state length {vec.size} is not a power of two >= 2")
    return n


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on ``n`` registers."""

    amplitudes: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = _n_of(amps)
        if n > MAX_STATE_REGISTERS:
            raise CapacityError(f"{n} registers exceeds the supported maximum {MAX_STATE_REGISTERS}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ArgumentError(f"state norm {norm:.12g} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "n", n)

    @classmethod
    def normalized(cls, amplitudes) -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise EncodingError("cannot normalize the zero vector")
        return cls(amps / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __len__(self):
        return self.amplitudes.size


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix on up to 12 registers."""

    matrix: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ArgumentError(f"density matrix must be square, got shape {mat.shape}")
        n = _n_of(mat[0]) if mat.shape[0] > 1 else 0
        if n > MAX_DENSE_REGISTERS:
            raise CapacityError(f"dense density matrices are limited to {MAX_DENSE_REGISTERS} registers")
        if np.max(np.abs(mat - mat.conj().T)) > NORM_TOL:
            raise ArgumentError("density matrix is not Hermitian")
        if abs(np.trace(mat) - 1.0) > NORM_TOL:
            raise ArgumentError(f"density matrix trace {np.trace(mat).real:.12g} differs from 1")
        if np.linalg.eigvalsh(mat).min() < -1e-8:
            raise ArgumentError("density matrix is not positive semidefinite")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_state(cls, state) -> DensityMatrix:
        vec = _amps(state)
        return cls(np.outer(vec, vec.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class RankSequence:
    ranks: tuple
    tolerance: float

    def __iter__(self):
        return iter(self.ranks)

    def __len__(self):
        return len(self.ranks)

    def __getitem__(self, i):
        return self.ranks[i]

    def as_list(self) -> list:
        return list(self.ranks)


def zero_state(n: int) -> StateVector:
    if n < 1:
        raise CapacityError("a state needs at least one register")
    if n > MAX_STATE_REGISTERS:
        raise CapacityError(f"{n} registers exceeds the supported maximum {MAX_STATE_REGISTERS}")
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps)


def _check_cut(n: int, k: int):
    if not 1 <= k <= n:
        raise ArgumentError(f"prefix length k={k} outside [1, {n}]")


def _pair(psi, phi):
    a, b = _amps(psi), _amps(phi)
    if a.shape != b.shape:
        raise ArgumentError(f"states have different lengths {a.size} and {b.size}")
    return a, b, _n_of(a)


def prefix_matrix(state, k: int) -> np.ndarray:
    """Reshape a state into the 2^k x 2^(n-k) matrix with prefix bits as rows."""
    vec = _amps(state)
    n = _n_of(vec)
    _check_cut(n, k)
    return vec.reshape(1 << k, 1 << (n - k))


def reduced_matrix(state, k: int) -> np.ndarray:
    """Raw 2^k x 2^k reduced matrix of the first k registers, without validation."""
    m = prefix_matrix(state, k)
    return m @ m.conj().T


def partial_trace_keep_prefix(state, k: int) -> DensityMatrix:
    """Reduced state of registers q_1..q_k."""
    vec = _amps(state)
    _check_cut(_n_of(vec), k)
    if k > MAX_DENSE_REGISTERS:
        raise CapacityError(f"dense reduced state on {k} registers exceeds {MAX_DENSE_REGISTERS}")
    return DensityMatrix(reduced_matrix(vec, k))


def _overlap(a: np.ndarray, b: np.ndarray, n: int, k: int) -> float:
    # tr[rho_k sigma_k] = ||A^dag B||_F^2; contract over whichever side is smaller.
    am = a.reshape(1 << k, 1 << (n - k))
    bm = b.reshape(1 << k, 1 << (n - k))
    if k <= n - k:
        ra = am @ am.conj().T
        rb = bm @ bm.conj().T
        return float(np.real(np.vdot(ra, rb)))
    g = am.conj().T @ bm
    return float(np.real(np.vdot(g, g)))


def _purity_of(a: np.ndarray, n: int, k: int) -> float:
    return _overlap(a, a, n, k)


def overlap_reduced(psi, phi, k: int) -> float:
    """tr[sigma_k rho_k] for the k-prefix reductions of two pure states."""
    a, b, n = _pair(psi, phi)
    _check_cut(n, k)
    return _overlap(a, b, n, k)


def hs_cost(psi, phi, k: int) -> float:
    """Squared Hilbert-Schmidt distance between the k-prefix reductions."""
    a, b, n = _pair(psi, phi)
    _check_cut(n, k)
    return _purity_of(a, n, k) + _purity_of(b, n, k) - 2.0 * _overlap(a, b, n, k)


def fidelity_pure(psi, phi) -> float:
    a, b, _ = _pair(psi, phi)
    return float(abs(np.vdot(a, b)) ** 2)


def purity(rho) -> float:
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    return float(np.real(np.vdot(mat, mat)))


def schmidt_coefficients(state, k: int) -> np.ndarray:
    """Singular values of the k-prefix reshaping, descending."""
    return np.linalg.svd(prefix_matrix(state, k), compute_uv=False)


def rank_sequence(state, tol: float = 1e-10) -> RankSequence:
    """Numerical rank of every prefix reduction; r_n is 1 for a pure state."""
    if not tol > 0:
        raise ArgumentError("rank tolerance must be positive")
    vec = _amps(state)
    n = _n_of(vec)
    ranks = []
    for k in range(1, n):
        s = schmidt_coefficients(vec, k)
        ranks.append(int(np.count_nonzero(s > tol * s[0])))
    ranks.append(1 if np.any(vec != 0) else 0)
    return RankSequence(tuple(ranks), tol)


def amplitude_encode(data, n: int) -> StateVector:
    """Zero-pad real data to length 2^n and normalize."""
    vec = np.asarray(data, dtype=float).reshape(-1)
    if vec.size == 0:
        raise EncodingError("cannot encode an empty vector")
    if n < 1:
        raise ArgumentError("register count must be positive")
    if vec.size > 1 << n:
        raise ArgumentError(f"data length {vec.size} exceeds 2^{n}")
    if not np.all(np.isfinite(vec)):
        raise EncodingError("data contains non-finite values")
    if not np.any(vec):
        raise EncodingError("cannot encode an all-zero vector")
    padded = np.zeros(1 << n)
    padded[: vec.size] = vec
    return StateVector(padded / np.linalg.norm(padded))


# -- import / export ---------------------------------------------------------

def state_to_csv(state, path):
    vec = _amps(state)
    lines = [f"{float(z.real)!r},{float(z.imag)!r}" for z in vec]
    Path(path).write_text("\n".join(lines) + "\n")


def state_to_json(state) -> dict:
    vec = _amps(state)
    return {"n": _n_of(vec), "re": vec.real.tolist(), "im": vec.imag.tolist()}


def state_from_json(obj) -> StateVector:
    try:
        n = int(obj["n"])
        vec = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed state JSON: {exc}") from exc
    if vec.size != 1 << n:
        raise ParseError(f"expected {1 << n} amplitudes for n={n}, got {vec.size}")
    return StateVector(vec)


def save_state_json(state, path):
    Path(path).write_text(json.dumps(state_to_json(state)))


def read_csv_rows(text: str) -> list:
    """Parse comma/whitespace separated numeric rows, reporting the failing line."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in line.replace(",", " ").split() if f]
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"cannot parse {raw!r} as numbers", line=lineno) from None
        if len(values) not in (1, 2):
            raise ParseError(f"expected 1 or 2 fields, got {len(values)}", line=lineno)
        rows.append((lineno, values))
    return rows


def load_state_csv(path) -> StateVector:
    rows = read_csv_rows(Path(path).read_text())
    for lineno, values in rows:
        if len(values) != 2:
            raise ParseError("expected a 're,im' pair", line=lineno)
    vec = np.array([complex(re, im) for _, (re, im) in rows])
    return StateVector(vec)


def load_state_json(path) -> StateVector:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return state_from_json(obj)


def register_count_for(length: int) -> int:
    return max(1, math.ceil(math.log2(length))) if length > 1 else 1
