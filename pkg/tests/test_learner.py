import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qudit_learn import bell, core, learner
from qudit_learn.learner import LearnerConfig


def test_sample_count_formula():
    cfg = LearnerConfig(0.2, 0.1)
    assert learner.sample_count(cfg, 48) == math.ceil(8 * math.log(4 * 48 / 0.1) / 0.2**4)
    assert learner.sample_count(LearnerConfig(0.2, 0.1, 2.0), 48) >= 2 * learner.sample_count(cfg, 48) - 1
    assert learner.mmw_rounds(7, 0.1) == math.ceil(16 * math.log(7) / 0.01) == 3114


@pytest.mark.parametrize("kw", [{"epsilon": 0}, {"epsilon": 1}, {"epsilon": 0.1, "delta": 1},
                                {"epsilon": 0.1, "sample_multiplier": 0.5}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        LearnerConfig(**kw)


@settings(max_examples=200)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_principal_sqrt(v):
    r = learner.principal_sqrt(v)
    assert abs(r * r - v) <= 1e-9 * max(1, abs(v))
    # argument in (-pi/2, pi/2]: open right half-plane plus the positive imaginary axis
    assert r.real > 0 or (r.real == 0 and r.imag >= 0)


@pytest.mark.parametrize("d", [3, 5, 7])
def test_weighted_estimate_is_exact(d):
    rho = core.random_density_matrix(d, 21)
    P = bell.bell_distribution(rho, rho.conj()).probs
    t = core.amplitudes(rho)
    V = learner.estimate_v_all(P)
    for q, p in core.indices(d):
        assert abs(learner.estimate_v_weighted(P, (q, p)) - t[q, p] ** 2) < 1e-12
        assert abs(V[q, p] - t[q, p] ** 2) < 1e-12


def test_estimate_v_from_outcomes_matches_counts():
    d = 5
    rho = core.random_density_matrix(d, 2)
    out = bell.sample_bell(bell.bell_distribution(rho, rho.conj()), 5000, 1)
    counts = bell.outcome_counts(out, d)
    for idx in [(1, 0), (2, 3), (4, 4)]:
        assert abs(learner.estimate_v(out, idx, d) - learner.estimate_v_weighted(counts, idx)) < 1e-12


def test_algorithm1_spiked_state():
    d, eps = 5, 0.3
    rho = core.make_test_state(d, "spiked", idx=(1, 2), r=1, eps=0.5)
    t = core.amplitudes(rho)
    est = learner.algorithm1(rho, core.indices(d, False), LearnerConfig(eps), 0)
    for e in est:
        y = t[e.idx]
        if e.u_hat is None:
            assert abs(y) <= eps
        else:
            assert min(abs(e.u_hat - y), abs(e.u_hat + y)) <= np.sqrt(2) / (2 * np.sqrt(3)) * eps
    assert {e.idx for e in est if e.u_hat is not None} == {(1, 2), core.canonical(d, -1, -2)}


def test_mmw_update_is_gibbs():
    d = 3
    M = core.displacement_observable(d, 1, 0) / np.sqrt(2)
    w = learner.mmw_update([M, M], 0.5, d).matrix
    vals, vecs = np.linalg.eigh(M)
    ref = vecs @ np.diag(np.exp(-vals)) @ vecs.conj().T
    assert np.allclose(w, ref / np.trace(ref))
    with pytest.raises(ValueError):
        learner.mmw_update([2 * np.eye(d)], 0.5, d)


def test_find_hypothesis_regret_and_bound():
    d, eps = 7, 0.2
    rho = core.random_pure_state(d, 5)
    cfg = LearnerConfig(eps)
    mags = learner.algorithm1(rho, core.indices(d, False), LearnerConfig(eps / 2), 1)
    hyp = learner.find_hypothesis(rho, [m for m in mags if m.u_hat is not None], cfg, 2)
    assert not hyp.bound_exceeded
    assert hyp.error_count <= hyp.T
    regret, bound = learner.mmw_regret(hyp, d)
    assert regret <= bound + 1e-9
    for m in mags:
        if m.u_hat is not None:
            y_t = np.trace(core.displacement(d, *m.idx) @ hyp.omega.matrix)
            assert min(abs(y_t - m.u_hat), abs(y_t + m.u_hat)) < eps


def test_find_hypothesis_abort_flag():
    d = 7
    rho = core.random_pure_state(d, 5)
    mags = learner.algorithm1(rho, core.indices(d, False), LearnerConfig(0.1), 1)
    hyp = learner.find_hypothesis(rho, [m for m in mags if m.u_hat is not None],
                                  LearnerConfig(0.1), 2, max_errors=1)
    assert hyp.bound_exceeded and hyp.error_count == 2


@pytest.mark.parametrize("v, u, s, r", [(1, 1, 1, 1), (-1, 1, 1, -1), (1j, np.exp(1j * np.pi / 4), -1, -1),
                                        (-1j, np.exp(1j * np.pi / 4), 1, -1)])
def test_sign_from_phase(v, u, s, r):
    assert learner.sign_from_phase(complex(v), complex(u), s) == r


def test_learn_maximally_mixed_gives_zeros():
    res = learner.learn_amplitudes(core.make_test_state(5, "maximally_mixed"), LearnerConfig(0.3), 0)
    assert all(v == 0 for v in res.estimates.values())
    assert len(res.estimates) == 24


def test_learn_spiked_signs_and_reproducibility():
    d, eps = 5, 0.3
    rho = core.make_test_state(d, "spiked", idx=(2, 1), r=-1, eps=0.6)
    t = core.amplitudes(rho)
    a = learner.learn_amplitudes(rho, LearnerConfig(eps), 7)
    b = learner.learn_amplitudes(rho, LearnerConfig(eps), 7)
    assert a.estimates == b.estimates
    for idx, y_hat in a.estimates.items():
        assert abs(y_hat - t[idx]) <= eps
