import numpy as np
import pytest

from qssm.haar import chain_moment, closed_forms, estimate_moments, first_moment, product_moment, moment_operators


def clifford_group_1q():
    """The 24 single-register Clifford unitaries modulo phase, generated from H and S."""
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    s = np.diag([1, 1j])
    group = [np.eye(2, dtype=complex)]
    frontier = list(group)

    def key(u):
        idx = np.flatnonzero(np.abs(u.reshape(-1)) > 1e-9)[0]
        v = u.reshape(-1) * abs(u.reshape(-1)[idx]) / u.reshape(-1)[idx]
        return tuple(np.round(v, 8))

    seen = {key(group[0])}
    while frontier:
        new = []
        for u in frontier:
            for g in (h, s):
                w = g @ u
                if key(w) not in seen:
                    seen.add(key(w))
                    new.append(w)
        group.extend(new)
        frontier = new
    return group


def test_clifford_group_has_24_elements():
    assert len(clifford_group_1q()) == 24


def test_closed_forms_against_exact_2_design_average():
    rng = np.random.default_rng(3)
    a, b, c, d = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(4))
    group = clifford_group_1q()
    first = np.mean([np.trace(u.conj().T @ a @ u @ b) for u in group])
    chain = np.mean([np.trace(u.conj().T @ a @ u @ b @ u.conj().T @ c @ u @ d) for u in group])
    prod = np.mean([np.trace(u @ a @ u.conj().T @ b) * np.trace(u @ c @ u.conj().T @ d) for u in group])
    assert first == pytest.approx(first_moment(a, b), abs=1e-12)
    assert chain == pytest.approx(chain_moment(a, b, c, d), abs=1e-12)
    assert prod == pytest.approx(product_moment(a, b, c, d), abs=1e-12)


def test_first_moment_within_one_percent_at_dim_4():
    ops = moment_operators(4, np.random.default_rng(4))
    est = estimate_moments(*ops, 100_000, np.random.default_rng(40))
    assert abs(est["first"] - first_moment(ops[0], ops[1])) <= 0.01 * abs(first_moment(ops[0], ops[1]))


@pytest.mark.parametrize("dim", [2, 4])
def test_monte_carlo_moments_within_two_percent(dim):
    ops = moment_operators(dim, np.random.default_rng(dim))
    est = estimate_moments(*ops, 100_000, np.random.default_rng(100 + dim))
    for name, exact in closed_forms(*ops).items():
        assert abs(est[name] - exact) <= 0.02 * abs(exact), name
