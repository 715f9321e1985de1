import csv

import numpy as np
import pytest
from conftest import dense_reduced, random_state, seeds
from hypothesis import given, settings
from hypothesis import strategies as st

from qssm.baseline import (
    CSV_COLUMNS,
    VarianceExperimentConfig,
    draw_gradients,
    last_cut_weights,
    log2_slope,
    prop_s1_closed_form,
    purification_carrier,
    run_variance_experiment,
    summarize,
    train_global_qnn,
    write_variance_csv,
)
from qssm.errors import ArgumentError
from qssm.qstate import StateVector, zero_state
from qssm.sequential import TrainConfig
from qssm.targets import ghz, haar_random_state, heisenberg_ground


def test_closed_form_values():
    assert prop_s1_closed_form(0.0) == pytest.approx(8 / 9)
    assert prop_s1_closed_form(0.5) == pytest.approx(2 / 3)
    grid = np.linspace(0, 1, 200001)
    assert min(map(prop_s1_closed_form, grid)) == pytest.approx(16 / 27, abs=1e-6)
    with pytest.raises(ArgumentError):
        prop_s1_closed_form(1.5)


def test_last_cut_weights_of_ghz():
    assert last_cut_weights(ghz(5)) == pytest.approx((0.5, 0.5))


@settings(max_examples=15)
@given(n=st.integers(2, 6), seed=seeds, data=st.data())
def test_purification_carrier_reproduces_the_prefix(n, seed, data):
    target = random_state(n, np.random.default_rng(seed))
    # keep the Schmidt rank within the registers after the cut
    k = data.draw(st.integers(1, n))
    if 2 ** (k - 1) > 2 ** (n - k + 1):
        k = n // 2 + 1
    carrier = purification_carrier(target, k)
    assert np.linalg.norm(carrier) == pytest.approx(1.0)
    if k > 1:
        assert np.allclose(dense_reduced(carrier, k - 1), dense_reduced(target, k - 1), atol=1e-10)


@pytest.mark.parametrize("step", ["first", "middle", "last", "global"])
def test_gradient_mean_is_zero(step):
    values = draw_gradients(haar_random_state(5, 4), step, 500, seed=11, w_max=2, key=("mean", step))
    point = summarize("haar_random", 5, step, values)
    assert abs(point.mean) < 3 * point.stderr


def test_ghz_last_step_variance():
    values = draw_gradients(ghz(4), "last", 10_000, seed=1, w_max=2)
    assert values.var(ddof=1) == pytest.approx(2 / 3, rel=0.05)


@pytest.mark.parametrize("seed", [2, 3])
def test_last_step_variance_follows_cut_weights(seed):
    target = haar_random_state(3, seed)
    c1, _ = last_cut_weights(target)
    values = draw_gradients(target, "last", 10_000, seed=seed, w_max=2)
    assert values.var(ddof=1) == pytest.approx(prop_s1_closed_form(c1), rel=0.05)


def test_fast_global_sampler_matches_dense_route():
    target = haar_random_state(3, 0)
    fast = draw_gradients(target, "global", 4000, seed=5, w_max=2, key=("fast",))
    dense = draw_gradients(target, "global", 4000, seed=5, w_max=2, key=("dense",), dense_global=True)
    assert fast.var() == pytest.approx(dense.var(), rel=0.15)


def test_middle_step_width_two_doubles_ghz_variance():
    target = ghz(8)
    wide = draw_gradients(target, "middle", 3000, seed=0, w_max=2, key=("w2",)).var()
    narrow = draw_gradients(target, "middle", 3000, seed=0, w_max=1, key=("w1",)).var()
    assert 1.5 <= narrow / wide <= 3.0


def test_heisenberg_middle_below_first_and_flat():
    # the open chain pairs into dimers, so the middle cut alternates between
    # weakly and strongly entangled bonds; compare sizes with the same cut type
    variances = {}
    for n in (6, 10):
        target = heisenberg_ground(n)[0]
        for step in ("first", "middle"):
            variances[n, step] = draw_gradients(target, step, 1500, seed=3, w_max=4, key=(n, step)).var()
    assert all(variances[n, "middle"] < variances[n, "first"] for n in (6, 10))
    middle = [variances[6, "middle"], variances[10, "middle"]]
    assert max(middle) / min(middle) < 3


def test_global_training_examples():
    cfg = TrainConfig(depth=20, stop="threshold", tol=1e-4)
    bell = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert train_global_qnn(bell, cfg).fidelity >= 0.99
    res = train_global_qnn(zero_state(3), TrainConfig(depth=4, stop="threshold", tol=1e-4))
    assert res.fidelity >= 0.999 and len(res.trace) < 200


def test_experiment_output_and_thread_determinism(tmp_path):
    cfg = VarianceExperimentConfig(family="ghz", n_values=(4, 6), samples=40, seed=9)
    serial = run_variance_experiment(cfg)
    threaded = run_variance_experiment(cfg, threads=3)
    assert serial == threaded
    write_variance_csv(serial, tmp_path / "v.csv")
    with open(tmp_path / "v.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + 2 * 4 and all(len(r) == len(CSV_COLUMNS) for r in rows)
    assert np.isfinite(log2_slope(serial, "global"))


def test_experiment_config_validation():
    with pytest.raises(ArgumentError, match="steps"):
        VarianceExperimentConfig(steps=("sideways",))
    with pytest.raises(ArgumentError, match="n_values"):
        VarianceExperimentConfig(n_values=(4, 14))
