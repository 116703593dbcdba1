import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qudit_learn import core
from qudit_learn.core import displacement, indices

PRIMES = [2, 3, 5, 7, 11, 13]
primes = st.sampled_from(PRIMES)
ints = st.integers(-40, 40)


def brute_displacement(d, q, p):
    """exp(i pi q p / d) X^q Z^p from explicit matrix powers."""
    X, Z = core.clock_shift(d)
    return np.exp(1j * np.pi * q * p / d) * np.linalg.matrix_power(X, q % d) @ \
        np.linalg.matrix_power(Z, p % d)


@settings(max_examples=200, deadline=None)
@given(primes, ints, ints)
def test_displacement_matches_brute_force(d, q, p):
    assert np.allclose(displacement(d, q, p), brute_displacement(d, q, p), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(primes, ints, ints)
def test_adjoint_conjugate_transpose_on_integers(d, q, p):
    D = displacement(d, q, p)
    assert np.allclose(D.conj().T, displacement(d, -q, -p), atol=1e-12)
    assert np.allclose(D.conj(), displacement(d, q, -p), atol=1e-12)
    assert np.allclose(D.T, displacement(d, -q, p), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(primes, ints, ints, st.integers(-3, 3), st.integers(-3, 3))
def test_representative_sign(d, q, p, m, n):
    s = core.representative_sign(d, q + m * d, p + n * d) * core.representative_sign(d, q, p)
    assert np.allclose(displacement(d, q + m * d, p + n * d), s * displacement(d, q, p), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(primes, ints, ints, ints, ints)
def test_commutation_phase(d, q, p, q2, p2):
    A, B = displacement(d, q, p), displacement(d, q2, p2)
    w = np.exp(2j * np.pi * (q * p2 - q2 * p) / d)
    assert np.allclose(B @ A, w * A @ B, atol=1e-11)


def test_three_dim_reference_matrix():
    w = np.exp(2j * np.pi / 3)
    # D_{1,1} = e^{i pi/3} X Z: column j -> row j+1 with w^j
    ref = np.zeros((3, 3), dtype=complex)
    for j in range(3):
        ref[(j + 1) % 3, j] = np.exp(1j * np.pi / 3) * w**j
    assert np.allclose(displacement(3, 1, 1), ref)


def test_canonical_adjoint_needs_sign():
    # the canonical representative of (-1, -1) at d = 3 differs by a sign
    assert np.allclose(displacement(3, 1, 1).conj().T, -displacement(3, 2, 2))


def test_displacements_are_read_only():
    with pytest.raises(ValueError):
        displacement(3, 1, 0)[0, 0] = 2


@pytest.mark.parametrize("d", [0, 1, 4, 9, 103])
def test_bad_dimension(d):
    with pytest.raises(ValueError, match="d must be prime|exceeds"):
        core.check_dimension(d)


def test_tensor_displacement():
    d = 3
    T = core.tensor_displacement(d, [1, 2], [0, 1])
    assert np.allclose(T, np.kron(displacement(d, 1, 0), displacement(d, 2, 1)))
    with pytest.raises(ValueError):
        core.tensor_displacement(3, [1] * 8, [0] * 8)


def test_observables_hermitian_and_bounded():
    d = 5
    for q, p in indices(d, include_identity=False):
        E = core.displacement_observable(d, q, p)
        assert np.allclose(E, E.conj().T)
        assert np.linalg.norm(E, 2) <= np.sqrt(2) + 1e-12


@pytest.mark.parametrize("bad, msg", [
    (np.array([[1, 1j], [0, 0]]), "Hermitian"),
    (np.eye(2), "trace"),
    (np.diag([1.5, -0.5]), "eigen"),
])
def test_density_validation(bad, msg):
    with pytest.raises(ValueError, match=msg):
        core.DensityMatrix(bad)


def test_project_psd():
    rho = core.project_psd(np.diag([0.7, 0.4, -0.1]))
    assert rho.min_eigenvalue >= 0
    assert np.isclose(np.trace(rho.matrix).real, 1)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3, 5, 7]), st.integers(0, 2**31))
def test_amplitudes_and_bloch_round_trip(d, seed):
    rho = core.random_density_matrix(d, seed)
    t = core.amplitudes(rho)
    for q, p in indices(d):
        assert abs(t[q, p] - np.trace(displacement(d, q, p) @ rho.matrix)) < 1e-12
    # non-canonical lookups pick up the representative sign
    assert abs(t.get(-1, -1) - np.trace(displacement(d, -1, -1) @ rho.matrix)) < 1e-12
    m, min_eig = core.bloch_reconstruct(t)
    assert np.allclose(m, rho.matrix, atol=1e-12)
    assert min_eig >= -1e-12


def test_spiked_state_amplitudes():
    d, eps = 5, 0.5
    rho = core.make_test_state(d, "spiked", idx=(1, 2), r=-1, eps=eps)
    t = core.amplitudes(rho)
    assert np.isclose(abs(t[1, 2]), eps / np.sqrt(2))
    nz = [(q, p) for q, p in indices(d, False) if abs(t[q, p]) > 1e-12]
    assert sorted(nz) == sorted([(1, 2), core.canonical(d, -1, -2)])
    with pytest.raises(ValueError):
        core.make_test_state(d, "spiked", idx=(0, 0), eps=eps)


def test_random_states_reproducible():
    a = core.random_pure_state(7, 11).matrix
    b = core.random_pure_state(7, 11).matrix
    assert np.array_equal(a, b)
