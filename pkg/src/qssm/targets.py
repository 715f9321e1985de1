"""Target states for the learning experiments."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, CapacityError, EncodingError, NumericalError, ParseError
from .qstate import StateVector, amplitude_encode, read_csv_rows, state_from_json
from .rng import child_rng

MAX_TARGET_REGISTERS = 14
FAMILIES = ("ghz", "heisenberg_xxx", "heisenberg_xxz", "gaussian", "haar_random", "file", "product", "bell_product")


@dataclass(frozen=True)
class TargetSpec:
    family: str
    n: int
    delta: float = 1.0
    mu: float | None = None
    sigma: float = 1.0
    path: str | None = None
    seed: int = 0

    def validate(self) -> list:
        errors = []
        if self.family not in FAMILIES:
            errors.append(("family", f"must be one of {', '.join(FAMILIES)}"))
        if not isinstance(self.n, int) or self.n < 1:
            errors.append(("n", "must be a positive integer"))
        elif self.n > MAX_TARGET_REGISTERS:
            errors.append(("n", f"must be <= {MAX_TARGET_REGISTERS}"))
        if self.family == "gaussian" and not self.sigma > 0:
            errors.append(("sigma", "must be > 0"))
        if self.family == "heisenberg_xxz" and not math.isfinite(self.delta):
            errors.append(("delta", "must be a finite real"))
        if self.family == "file":
            if not self.path:
                errors.append(("path", "required for family 'file'"))
            elif not Path(self.path).exists():
                errors.append(("path", f"file {self.path} does not exist"))
        if self.family in ("ghz", "heisenberg_xxx", "heisenberg_xxz", "bell_product") and isinstance(self.n, int) and self.n < 2:
            errors.append(("n", f"family {self.family} needs n >= 2"))
        return errors

    def to_json(self) -> dict:
        return asdict(self)


def ghz(n: int) -> StateVector:
    if n < 2:
        raise ArgumentError("GHZ states need n >= 2")
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = amps[-1] = 1 / math.sqrt(2)
    return StateVector(amps)


def bell_product(n: int) -> StateVector:
    """(|00> + |11>)/sqrt(2) on registers 1, 2 followed by |0...0>."""
    if n < 2:
        raise ArgumentError("need n >= 2")
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1 / math.sqrt(2)
    amps[3 << (n - 2)] = 1 / math.sqrt(2)
    return StateVector(amps)


def product_zero(n: int) -> StateVector:
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1
    return StateVector(amps)


# -- Heisenberg chain ---------------------------------------------------------

def heisenberg_apply(vec: np.ndarray, n: int, delta: float) -> np.ndarray:
    """H v for H = sum_i X_i X_(i+1) + Y_i Y_(i+1) + delta Z_i Z_(i+1), open chain."""
    idx = np.arange(1 << n)
    out = np.zeros_like(vec)
    for i in range(1, n):
        # register i is bit n-i of the index
        bi = (idx >> (n - i)) & 1
        bj = (idx >> (n - i - 1)) & 1
        same = bi == bj
        out += delta * np.where(same, 1.0, -1.0) * vec
        # XX + YY maps |01> <-> |10> with amplitude 2 and kills |00>, |11>
        flip = idx ^ ((1 << (n - i)) | (1 << (n - i - 1)))
        out += np.where(same, 0.0, 2.0) * vec[flip]
    return out


def heisenberg_dense(n: int, delta: float) -> np.ndarray:
    dim = 1 << n
    eye = np.eye(dim, dtype=complex)
    return np.stack([heisenberg_apply(eye[:, j], n, delta) for j in range(dim)], axis=1)


def lanczos_ground(apply, dim: int, rng, krylov: int = 120, tol: float = 1e-9, max_restarts: int = 50):
    """Lowest eigenpair of a Hermitian operator by restarted Lanczos with full reorthogonalization.

    Each cycle builds an orthonormal Krylov basis from the current start vector
    and restarts from the lowest Ritz vector until ||H v - E v|| <= tol.
    """
    m = min(krylov, dim)
    v = rng.standard_normal(dim) + 0j
    v /= np.linalg.norm(v)
    residual = np.inf
    for _ in range(max_restarts):
        basis = np.zeros((m, dim), dtype=complex)
        alpha = np.zeros(m)
        beta = np.zeros(m)
        basis[0] = v
        size = m
        for j in range(m):
            w = apply(basis[j])
            alpha[j] = np.real(np.vdot(basis[j], w))
            w = w - alpha[j] * basis[j] - (beta[j - 1] * basis[j - 1] if j > 0 else 0)
            # full reorthogonalization, twice for numerical safety
            for _ in range(2):
                w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
            if j == m - 1:
                break
            b = np.linalg.norm(w)
            if b < 1e-12:
                size = j + 1
                break
            beta[j] = b
            basis[j + 1] = w / b
        tri = np.diag(alpha[:size]) + np.diag(beta[: size - 1], 1) + np.diag(beta[: size - 1], -1)
        evals, evecs = np.linalg.eigh(tri)
        v = evecs[:, 0] @ basis[:size]
        v /= np.linalg.norm(v)
        energy = float(evals[0])
        residual = float(np.linalg.norm(apply(v) - energy * v))
        if residual <= tol:
            return energy, v, residual
    raise NumericalError("Lanczos did not converge", residual)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-10)
    return v * (abs(v[nz[0]]) / v[nz[0]])


def heisenberg_ground(n: int, delta: float = 1.0, seed: int = 0):
    """Ground state and energy of the open Heisenberg XXZ chain (delta = 1 is XXX)."""
    if not 2 <= n <= MAX_TARGET_REGISTERS:
        raise ArgumentError(f"Heisenberg chains are supported for 2 <= n <= {MAX_TARGET_REGISTERS}")
    dim = 1 << n
    energy, vec, _ = lanczos_ground(lambda x: heisenberg_apply(x, n, delta), dim, child_rng(seed, "lanczos", n), tol=1e-10)
    return StateVector(_fix_phase(vec / np.linalg.norm(vec))), energy


def gaussian_state(n: int, mu: float | None = None, sigma: float = 1.0) -> StateVector:
    """Amplitudes sqrt(exp(-(x - mu)^2 / (2 sigma^2))) over x = 0..2^n - 1, normalized."""
    if not sigma > 0:
        raise ArgumentError("sigma must be positive")
    x = np.arange(1 << n, dtype=float)
    mu = (x[-1] / 2) if mu is None else mu
    amps = np.exp(-((x - mu) ** 2) / (4 * sigma**2))
    return StateVector(amps / np.linalg.norm(amps))


def haar_random_state(n: int, seed: int = 0) -> StateVector:
    if not 1 <= n <= MAX_TARGET_REGISTERS:
        raise CapacityError(f"random states are supported for 1 <= n <= {MAX_TARGET_REGISTERS}")
    rng = child_rng(seed, "haar_state", n)
    z = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector(z / np.linalg.norm(z))


# -- files ------------------------------------------------------------------

class LoadedTarget(NamedTuple):
    state: StateVector
    padded: bool
    normalized: bool


def load_target(path, n: int | None = None) -> LoadedTarget:
    """Load amplitudes from CSV ('re,im' pairs or one real per line) or JSON.

    JSON may be the state form {"n", "re", "im"} or a plain list of reals. Real
    vectors are zero-padded to 2^n and normalized.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith(("{", "[")):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
        if isinstance(obj, dict):
            if "n" in obj:
                n_file = int(obj["n"])
                if n is not None and n != n_file:
                    raise ArgumentError(f"file declares n={n_file} but n={n} was requested")
            vec = np.asarray(obj.get("re", []), dtype=float) + 1j * np.asarray(obj.get("im", []), dtype=float)
            return _finish(vec, n if n is not None else obj.get("n"))
        try:
            data = np.asarray(obj, dtype=float).reshape(-1)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"expected a list of numbers: {exc}") from exc
        return _finish(data.astype(complex), n)
    rows = read_csv_rows(text)
    widths = {len(v) for _, v in rows}
    if len(widths) > 1:
        lineno = next(ln for ln, v in rows if len(v) != len(rows[0][1]))
        raise ParseError("mixed 1- and 2-column rows", line=lineno)
    if not rows:
        raise EncodingError("file contains no amplitudes")
    vec = np.array([complex(*v) if len(v) == 2 else complex(v[0]) for _, v in rows])
    return _finish(vec, n)


def _finish(vec: np.ndarray, n) -> LoadedTarget:
    if vec.size == 0:
        raise EncodingError("file contains no amplitudes")
    if vec.size > 1 << MAX_TARGET_REGISTERS:
        raise CapacityError(f"{vec.size} amplitudes exceeds 2^{MAX_TARGET_REGISTERS}")
    if n is None:
        n = max(1, math.ceil(math.log2(vec.size)))
    n = int(n)
    if vec.size > 1 << n:
        raise ArgumentError(f"{vec.size} amplitudes do not fit in {n} registers")
    padded = vec.size < 1 << n
    if np.all(vec.imag == 0):
        state = amplitude_encode(vec.real, n)
    else:
        if not np.any(vec):
            raise EncodingError("cannot encode an all-zero vector")
        full = np.zeros(1 << n, dtype=complex)
        full[: vec.size] = vec
        state = StateVector(full / np.linalg.norm(full))
    normalized = abs(np.linalg.norm(vec) - 1.0) > 1e-9
    return LoadedTarget(state, padded, normalized)


def make_target(spec: TargetSpec) -> StateVector:
    errors = spec.validate()
    if errors:
        raise ArgumentError("; ".join(f"{k}: {m}" for k, m in errors))
    fam = spec.family
    if fam == "ghz":
        return ghz(spec.n)
    if fam == "heisenberg_xxx":
        return heisenberg_ground(spec.n, 1.0)[0]
    if fam == "heisenberg_xxz":
        return heisenberg_ground(spec.n, spec.delta)[0]
    if fam == "gaussian":
        return gaussian_state(spec.n, spec.mu, spec.sigma)
    if fam == "haar_random":
        return haar_random_state(spec.n, spec.seed)
    if fam == "product":
        return product_zero(spec.n)
    if fam == "bell_product":
        return bell_product(spec.n)
    return load_target(spec.path, spec.n).state
