import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfloc.ensemble import (
    EFC,
    RANDOM_EIGENSTATE,
    EnsembleConfig,
    FermionPropagator,
    det_bound_experiment,
    eigenfunction_correlator,
    fit_decay,
    realization_values,
    run_ensemble,
    time_grid_from_json,
)
from pfloc.errors import FitError, SkipOverflowError, StructuralError
from pfloc.quasifree import make_kernel, spin_correlation
from pfloc.xychain import ChainParams, DisorderSpec, StateSpec, build_h, sample_disorder


def small_config(**kw):
    base = dict(
        N=8,
        realizations=6,
        disorder=DisorderSpec.uniform(-3, 3),
        state=StateSpec.thermal(1.0),
        time_grid=np.arange(0.0, 1.01, 0.5),
        pairs=((1, 2), (1, 3), (1, 4), (2, 6)),
        observables=((3, 3), (1, 1), EFC),
        seed=5,
    )
    base.update(kw)
    return EnsembleConfig(**base)


def test_fit_exact_exponential():
    d = np.arange(1, 11)
    f = fit_decay(d, np.exp(-0.5 * d))
    assert f.rate == pytest.approx(0.5) and f.r_squared == pytest.approx(1.0)


def test_fit_constant_means():
    f = fit_decay([1, 2, 3, 4], [0.3] * 4)
    assert f.rate == 0.0 and f.r_squared == 0.0


def test_fit_errors():
    with pytest.raises(FitError):
        fit_decay([1, 2, 3], [1.0, 0.0, 0.5])
    with pytest.raises(StructuralError):
        fit_decay([1, 1, 2], [1.0, 0.5, 0.2])
    with pytest.raises(StructuralError):
        fit_decay([1, 2], [1.0])


def test_time_grid_from_json():
    assert np.allclose(time_grid_from_json({"start": 0, "stop": 5, "step": 0.25}), 0.25 * np.arange(21))
    assert np.allclose(time_grid_from_json([0, 1.5]), [0, 1.5])
    with pytest.raises(StructuralError):
        time_grid_from_json({"start": 1, "stop": 0, "step": 0.1})


def test_config_validation_and_json():
    cfg = small_config()
    again = EnsembleConfig.from_json(cfg.to_json())
    assert again.to_json() == cfg.to_json()
    r = EnsembleConfig.from_json(small_config(state=RANDOM_EIGENSTATE).to_json())
    assert r.state == RANDOM_EIGENSTATE
    for bad in (dict(pairs=((1, 9),)), dict(pairs=()), dict(observables=((4, 1),)), dict(realizations=0), dict(state="hot")):
        with pytest.raises(StructuralError):
            small_config(**bad)
    assert cfg.with_seed(9).seed == 9 and len(cfg.rows) == 12


def test_efc_examples():
    dec = build_h(ChainParams(4, [0.0] * 3, [0.0] * 3, [0.3, 1.0, -0.5, 2.0]))
    assert eigenfunction_correlator(dec, 1, 3) == pytest.approx(0.0, abs=1e-12)
    h = build_h(ChainParams(5, [1.0] * 4, [0.4] * 4, [0.1, -0.7, 1.2, 0.5, -2.0]))
    for x in range(1, 6):
        assert eigenfunction_correlator(h, x, x, flavors=("+", "+")) == pytest.approx(1.0)
        assert eigenfunction_correlator(h, x, x) >= 1.0 - 1e-12
    assert eigenfunction_correlator(h, 1, 4) == pytest.approx(eigenfunction_correlator(h, 4, 1))
    assert eigenfunction_correlator(h, 2, 3, interval=(0.0, math.inf)) <= eigenfunction_correlator(h, 2, 3) + 1e-12
    with pytest.raises(StructuralError):
        eigenfunction_correlator(h, 0, 1)


@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_efc_bounded_by_cauchy_schwarz(N, seed):
    rng = np.random.default_rng(seed)
    h = build_h(ChainParams(N, rng.uniform(0.2, 1.5, N - 1), rng.uniform(-1, 1, N - 1), rng.uniform(-3, 3, N)))
    x, y = rng.integers(1, N + 1, 2)
    q = eigenfunction_correlator(h, int(x), int(y))
    assert 0.0 <= q <= 1.0 + 1e-12


def test_single_realization_constant_field_matches_direct_evaluation():
    cfg = small_config(realizations=1, disorder=DisorderSpec.constant(0.7, mu_value=1.0, gamma_value=0.3))
    res = run_ensemble(cfg)
    k = make_kernel(ChainParams.homogeneous(8, 1.0, 0.3, 0.7), StateSpec.thermal(1.0))
    for row in res.rows:
        xi, eta, w, w2 = row["pair_xi"], row["pair_eta"], row["w"], row["w2"]
        if (w, w2) == EFC:
            continue
        direct = max(abs(spin_correlation(k, xi, eta, t, w, w2)) for t in cfg.time_grid)
        assert row["mean"] == direct and row["stderr"] == 0.0 and row["n_effective"] == 1


def test_same_seed_identical_and_seed_matters():
    a, b = run_ensemble(small_config()), run_ensemble(small_config())
    assert a.to_csv() == b.to_csv()
    assert run_ensemble(small_config(seed=6)).to_csv() != a.to_csv()


def test_worker_count_does_not_change_output():
    cfg = small_config(realizations=5)
    assert run_ensemble(cfg, workers=1).to_csv() == run_ensemble(cfg, workers=3).to_csv()


def test_config_seed_overrides_disorder_seed():
    a = small_config(disorder=DisorderSpec.uniform(-3, 3, seed=1))
    b = small_config(disorder=DisorderSpec.uniform(-3, 3, seed=2))
    assert np.array_equal(realization_values(a, 0), realization_values(b, 0))


def test_skip_accounting():
    # decoupled sites with a common field: every mode energy coincides
    cfg = small_config(disorder=DisorderSpec.constant(1.0, mu_value=0.0), state=RANDOM_EIGENSTATE, realizations=4)
    with pytest.raises(SkipOverflowError) as e:
        run_ensemble(cfg)
    assert e.value.skipped == 4 and e.value.requested == 4
    assert e.value.result.effective == 0
    assert all(r["n_effective"] == 0 for r in e.value.result.rows)


def test_statistics_are_means_of_realizations():
    cfg = small_config(realizations=4)
    res = run_ensemble(cfg)
    vals = np.array([realization_values(cfg, i) for i in range(4)])
    got = np.array([r["mean"] for r in res.rows])
    assert np.allclose(got, vals.mean(axis=0), rtol=1e-14)
    se = np.array([r["stderr"] for r in res.rows])
    assert np.allclose(se, vals.std(axis=0, ddof=1) / 2.0, rtol=1e-12)


def test_summary_and_fits():
    res = run_ensemble(small_config())
    s = res.summary()
    assert s["effective"] == 6 and s["skipped"] == 0
    assert set(s["fits"]) == {"3,3", "1,1", "0,0"}


def test_grid_max_grows_with_grid():
    cfg = small_config(realizations=1)
    wide = small_config(realizations=1, time_grid=np.arange(0.0, 2.01, 0.5))
    assert np.all(realization_values(wide, 0) >= realization_values(cfg, 0))


def test_fermion_propagator_is_contraction():
    prop = FermionPropagator.from_params(sample_disorder(DisorderSpec.uniform(-4, 4), 10, 0), 1.0)
    for tau in (0.0, 0.7, -2.5):
        assert np.linalg.norm(prop(tau), 2) <= 1.0 + 1e-12
    with pytest.raises(StructuralError):
        FermionPropagator.from_params(ChainParams.homogeneous(3, 1.0, 0.5), 1.0)


def test_det_bound_experiment_small():
    p = sample_disorder(DisorderSpec.uniform(-4, 4, seed=2), 12, 0)
    reps = det_bound_experiment(p, 1.0, np.arange(0.0, 2.01, 0.5), 10, seed=1, max_n=3, time_samples=8)
    assert len(reps) == 10 and all(r.satisfied for r in reps)
    assert all(1 <= r.context["n"] <= 3 for r in reps)
