import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfloc.errors import PreconditionError, StructuralError
from pfloc.xychain import (
    ChainParams,
    DisorderSpec,
    StateSpec,
    build_block_form,
    build_h,
    check_kernel,
    check_simple,
    mode_index,
    sample_disorder,
    state_function,
    substream,
)


def random_params(rng, N):
    return ChainParams(N, rng.uniform(0.3, 1.5, N - 1), rng.uniform(-1, 1, N - 1), rng.uniform(-2, 2, N))


def test_mode_index():
    assert [mode_index(1, "+"), mode_index(1, "-"), mode_index(3, "+")] == [0, 1, 4]
    with pytest.raises(StructuralError):
        mode_index(1, "x")


def test_chain_params_validation():
    with pytest.raises(StructuralError):
        ChainParams(0, [], [], [])
    with pytest.raises(StructuralError):
        ChainParams(3, [1.0], [0.0, 0.0], [0, 0, 0])
    with pytest.raises(StructuralError):
        ChainParams(2, [np.nan], [0.0], [0, 0])
    p = ChainParams.homogeneous(4, 0.5, 0.2, 1.0)
    assert np.array_equal(p.nu, np.ones(4))
    q = ChainParams.from_json(p.to_json())
    assert np.array_equal(q.mu, p.mu) and np.array_equal(q.gamma, p.gamma)


def test_single_site_h():
    h = build_h(ChainParams(1, [], [], [0.7])).entries
    assert np.allclose(h, 0.7 * np.array([[0, -1j], [1j, 0]]))


@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_h_structure(N, seed):
    p = random_params(np.random.default_rng(seed), N)
    h = build_h(p).entries
    assert np.allclose(h, h.conj().T)
    # H = iK with K real skew
    k = -1j * h
    assert np.allclose(k.imag, 0) and np.allclose(k.real, -k.real.T)
    vals = np.linalg.eigvalsh(h)
    assert np.allclose(np.sort(vals), np.sort(-vals), atol=1e-10)
    assert np.allclose(vals, np.linalg.eigvalsh(build_block_form(p).entries), atol=1e-10)


def test_isotropic_block_form_is_anderson():
    p = ChainParams(3, [1.0, 1.0], [0.0, 0.0], [0.5, -1.0, 2.0])
    a = np.diag([-0.5, 1.0, -2.0]) + np.diag([1.0, 1.0], 1) + np.diag([1.0, 1.0], -1)
    expected = np.sort(np.concatenate([np.linalg.eigvalsh(a), -np.linalg.eigvalsh(a)]))
    assert np.allclose(np.linalg.eigvalsh(build_h(p).entries), expected)


def test_disorder_spec_validation_and_json():
    with pytest.raises(StructuralError):
        DisorderSpec.uniform(1.0, 1.0)
    with pytest.raises(StructuralError):
        DisorderSpec.gaussian(0.0, 0.0)
    with pytest.raises(StructuralError):
        DisorderSpec({"kind": "cauchy"})
    with pytest.raises(StructuralError):
        DisorderSpec.constant(1.0, seed=-1)
    d = DisorderSpec.gaussian(0.5, 2.0, mu_value=0.7, gamma_value=0.1, seed=9)
    assert DisorderSpec.from_json(d.to_json()) == d


def test_sample_disorder_deterministic_and_independent():
    spec = DisorderSpec.uniform(-4, 4, seed=3)
    a = sample_disorder(spec, 10, 5)
    assert np.array_equal(a.nu, sample_disorder(spec, 10, 5).nu)
    assert not np.array_equal(a.nu, sample_disorder(spec, 10, 6).nu)
    # site xi uses the xi-th draw, so a longer chain extends a shorter one
    assert np.array_equal(sample_disorder(spec, 4, 5).nu, a.nu[:4])
    assert np.all((a.nu >= -4) & (a.nu < 4))
    assert np.all(a.mu == 1.0) and np.all(a.gamma == 0.0)
    assert np.all(sample_disorder(DisorderSpec.constant(2.5), 3, 0).nu == 2.5)
    assert substream(1, 2, 0).uniform() != substream(1, 2, 1).uniform()


def test_state_spec_validation():
    for bad in (lambda: StateSpec.thermal(0.0), lambda: StateSpec.thermal(np.inf), lambda: StateSpec("eigenstate"),
                lambda: StateSpec.eigenstate([0, 2]), lambda: StateSpec("pure")):
        with pytest.raises(StructuralError):
            bad()
    for s in (StateSpec.thermal(1.5), StateSpec.ground(), StateSpec.eigenstate([1, 0]), StateSpec.twisted_thermal(2.0)):
        assert StateSpec.from_json(s.to_json()) == s


def test_state_functions():
    lam = np.array([0.5, 1.0, 2.0])
    x = np.concatenate([-lam, lam])
    assert np.allclose(state_function(StateSpec.thermal(0.8), lam)(x), 1 + np.tanh(0.8 * x))
    assert np.allclose(state_function(StateSpec.ground(), lam)(x), 1 + np.sign(x))
    assert np.allclose(state_function(StateSpec.twisted_thermal(0.8), lam)(x), 1 + 1 / np.tanh(0.8 * x))
    f = state_function(StateSpec.eigenstate([1, 0, 1]), lam)
    # occupied modes (alpha = 1) have f = 0 at +lambda and 2 at -lambda
    assert np.allclose(f(lam), [0, 2, 0])
    assert np.allclose(f(-lam), [2, 0, 2])
    assert np.allclose(f(-lam) + f(lam), 2)
    g = state_function(StateSpec.eigenstate([0, 0, 0]), lam)
    assert np.allclose(g(x), state_function(StateSpec.ground(), lam)(x))


def test_preconditions():
    check_simple(np.array([0.1, 0.2]))
    with pytest.raises(PreconditionError) as e:
        check_simple(np.array([0.5, 0.5]))
    assert e.value.gap == 0.0
    with pytest.raises(PreconditionError):
        check_kernel(np.array([0.0, 1.0]))
    with pytest.raises(PreconditionError):
        state_function(StateSpec.eigenstate([0, 1]), np.array([1.0, 1.0]))
    with pytest.raises(StructuralError):
        state_function(StateSpec.eigenstate([0, 1]), np.array([1.0, 2.0, 3.0]))


def test_decoupled_spectrum():
    h = build_h(ChainParams(2, [0.0], [0.0], [0.4, -1.5])).entries
    assert np.allclose(np.linalg.eigvalsh(h), [-1.5, -0.4, 0.4, 1.5])


def test_single_site_block_form():
    assert np.allclose(np.linalg.eigvalsh(build_block_form(ChainParams(1, [], [], [0.8])).entries), [-0.8, 0.8])


def test_uniform_sample_mean():
    spec = DisorderSpec.uniform(-1, 1, seed=11)
    assert abs(sample_disorder(spec, 10**5, 0).nu.mean()) < 0.02


def test_thermal_limits():
    lam = np.array([0.5, 1.0])
    assert state_function(StateSpec.thermal(1.0), lam)(0.0) == 1.0
    f = state_function(StateSpec.thermal(200.0), lam)
    assert f(0.5) == pytest.approx(2.0) and f(-0.5) == pytest.approx(0.0, abs=1e-12)
    g = state_function(StateSpec.eigenstate([1, 0, 0]), np.array([0.5, 1.0, 2.0]))
    assert g(-0.5) == 2 and g(0.5) == 0 and g(1.0) == 2 and g(2.0) == 2
