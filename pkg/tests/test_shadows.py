import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qudit_learn import bell, core, shadows
from qudit_learn.shadows import CliffordElement, SymplecticMat2


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_symplectic_group_order(d):
    assert len(shadows.enumerate_symplectic(d)) == d * (d * d - 1)


def test_bad_determinant():
    with pytest.raises(ValueError, match="determinant"):
        SymplecticMat2(1, 1, 1, 1, 3)


@pytest.mark.parametrize("d", [2, 3])
def test_every_clifford_conjugates_correctly(d):
    for cl in shadows.enumerate_cliffords(d):
        assert shadows.conjugation_deviation(cl) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([5, 7, 11, 13]), st.integers(0, 2**31))
def test_sampled_cliffords_match_oracle(d, seed):
    cl = shadows.sample_clifford(d, seed)
    U = shadows.synthesize_clifford(cl)
    assert np.allclose(U.conj().T @ U, np.eye(d), atol=1e-12)
    assert shadows.symplectic_of(U) == cl.symplectic
    assert shadows.conjugation_deviation(cl) < 1e-10


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_fourier_is_quarter_turn(d):
    # U^dag X U ~ Z for U = W
    C = shadows.symplectic_of(bell.fourier_matrix(d))
    assert C.apply(1, 0) == (0, 1)


def test_composition_rule():
    d = 5
    a, b = shadows.sample_symplectic(d, 1), shadows.sample_symplectic(d, 2)
    U = shadows.synthesize_clifford(CliffordElement(a)) @ shadows.synthesize_clifford(CliffordElement(b))
    assert shadows.symplectic_of(U) == b @ a


def test_enumeration_cap():
    with pytest.raises(ValueError, match="limited"):
        shadows.enumerate_cliffords(7)


@pytest.mark.parametrize("d", [2, 3])
def test_channel_average_and_inverse(d):
    A = core.random_density_matrix(d, 3).matrix + 0.3j * np.diag(np.arange(d))
    avg = shadows.measurement_channel_average(A, d)
    assert np.allclose(avg, shadows.measurement_channel(A, d), atol=1e-12)
    assert np.allclose(shadows.inverse_channel(shadows.measurement_channel(A, d), d), A, atol=1e-12)


def test_exact_moments_unbiased_and_oracle_variance():
    d = 3
    rho = core.random_density_matrix(d, 4)
    O = np.random.default_rng(0).normal(size=(d, d)) + 1j * np.random.default_rng(1).normal(size=(d, d))
    mean, second = shadows.exact_shadow_moments(O, rho)
    tr = np.trace(O @ rho.matrix)
    assert abs(mean - tr) < 1e-12
    assert abs(second - abs(tr) ** 2 - shadows.variance_oracle(O, rho)) < 1e-10


def test_displacement_variance_closed_form():
    d = 7
    rho = core.random_density_matrix(d, 5)
    for q, p in [(1, 0), (2, 3), (6, 6)]:
        D = core.displacement(d, q, p)
        y = np.trace(D @ rho.matrix)
        assert abs(shadows.variance_oracle(D, rho) - (d + 1 - abs(y) ** 2)) < 1e-9


def test_sampling_matches_values_and_is_seeded():
    d = 3
    rho = core.random_density_matrix(d, 6)
    s1 = shadows.shadow_sample(rho, 3000, 11)
    s2 = shadows.shadow_sample(rho, 3000, 11)
    assert s1.cliffords == s2.cliffords and np.array_equal(s1.outcomes, s2.outcomes)
    Os = [core.displacement(d, 1, 0), core.displacement_observable(d, 1, 2)]
    many = shadows.shadow_values_many(s1, Os)
    for k, O in enumerate(Os):
        assert np.allclose(many[:, k], shadows.shadow_values(s1, O), atol=1e-12)
        est, se = shadows.estimate_expectation(s1, O)
        assert abs(est - np.trace(O @ rho.matrix)) < 5 * se


def test_forced_clifford_hook():
    d = 3
    cl = shadows.sample_clifford(d, 2)
    s = shadows.shadow_sample(core.random_pure_state(d, 1), 10, 0, forced=cl)
    assert set(s.cliffords) == {cl}


def test_transition_estimate_needs_off_diagonal():
    d = 3
    s = shadows.shadow_sample(core.random_pure_state(d, 1), 10, 0)
    with pytest.raises(ValueError, match="i != j"):
        shadows.transition_estimate(s, shadows.sample_clifford(d, 0), 1, 1)


def test_fast_path_agrees_with_general_path():
    d = 5
    rho = core.random_density_matrix(d, 8)
    n = 20000
    fast = shadows.shadow_observable_means(rho, n, 1)
    nz = core.indices(d, include_identity=False)
    samples = shadows.shadow_sample(rho, n, 2)
    slow = shadows.shadow_values_many(samples, [core.displacement_observable(d, *i) for i in nz]).mean(axis=0)
    exact = np.array([np.trace(core.displacement_observable(d, *i) @ rho.matrix).real for i in nz])
    se = np.sqrt((d + 2) / n)
    assert np.max(np.abs(fast - exact)) < 5 * se
    assert np.max(np.abs(slow.real - exact)) < 5 * se


@pytest.mark.parametrize("k, d, rank", [(1, 2, 1), (1, 3, 1), (2, 2, 2), (2, 3, 2), (3, 2, 5)])
def test_small_twirls(k, d, rank):
    P = shadows.twirl_theory(k, d)
    assert np.max(np.abs(shadows.twirl_channel(k, d) - P)) < 1e-9
    assert round(np.trace(P).real) == rank


def test_unsupported_twirl():
    with pytest.raises(ValueError, match="unsupported"):
        shadows.twirl_channel(3, 5)
