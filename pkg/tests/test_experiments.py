import json
import math

import numpy as np
import pytest

from qudit_learn import core, experiments
from qudit_learn.experiments import ScalingReport


@pytest.mark.parametrize("d, m, k", [(3, 1, 2), (5, 2, 2), (3, 2, 4)])
def test_norm_lemma_examples(d, m, k):
    val, perm = experiments.norm_lemma_check(d, m, k)
    assert abs(val - d) < 1e-9 and perm


@pytest.mark.parametrize("d, k", [(3, 2), (3, 4), (5, 2)])
def test_e_norm_examples(d, k):
    val, tight = experiments.e_norm_check(d, k)
    assert val <= 2 ** (k / 2) * d + 1e-8
    assert tight


@pytest.mark.parametrize("args", [(2, 1, 2), (3, 1, 3), (3, 0, 2), (11, 1, 4)])
def test_norm_preconditions(args):
    with pytest.raises(ValueError):
        experiments.norm_lemma_check(*args)


def test_permutation_detector():
    assert experiments.is_permutation_matrix(np.eye(3)[[2, 0, 1]])
    assert not experiments.is_permutation_matrix(np.full((2, 2), 0.5))
    assert not experiments.is_permutation_matrix(np.diag([1, -1]))


@pytest.mark.parametrize("d, tol", [(2, 1e-12), (3, 1e-10)])
def test_tensor_commutation(d, tol):
    comm, trace_dev = experiments.tensor_commutation_check(d)
    assert comm < tol and trace_dev < 1e-12


def test_bare_displacements_do_not_commute():
    d = 3
    A, B = core.displacement(d, 1, 0), core.displacement(d, 0, 1)
    w = np.exp(2j * np.pi / d)
    assert experiments.commutator_norm(A, B) >= abs(w - 1) * math.sqrt(d) - 1e-9


def test_conjugate_reindexing():
    d = 5
    rho = core.random_density_matrix(d, 3)
    nz = core.indices(d, include_identity=False)
    tr = lambda m: np.array([np.trace(core.displacement_observable(d, *i) @ m).real for i in nz])
    assert np.allclose(experiments.conjugate_to_rho(d, tr(rho.matrix.conj())), tr(rho.matrix), atol=1e-13)


def test_zero_samples_defaults_to_no():
    for p in experiments.PROTOCOLS:
        assert experiments.distinguishing_trial(5, 0.5, p, 0, 3).decision == "NO"


def test_trial_reproducible():
    a = experiments.distinguishing_trial(5, 0.5, "single_copy_shadow", 300, 17)
    assert a == experiments.distinguishing_trial(5, 0.5, "single_copy_shadow", 300, 17)


@pytest.mark.parametrize("bad", [dict(eps=0), dict(eps=1), dict(protocol="x"), dict(d=4)])
def test_trial_preconditions(bad):
    kw = dict(d=5, eps=0.5, protocol="conjugate_bell", n=10, seed=0) | bad
    with pytest.raises(ValueError):
        experiments.distinguishing_trial(**kw)


def _trial_freq(truth, n, seeds=200):
    d, eps = 5, 0.5
    hits = total = 0
    s = 0
    while total < seeds:
        rec = experiments.distinguishing_trial(d, eps, "conjugate_bell", n, s)
        s += 1
        if rec.truth == truth:
            total += 1
            hits += rec.correct
    return hits / total


def test_conjugate_bell_no_side():
    assert _trial_freq("NO", 10**4) >= 0.95


def test_conjugate_bell_yes_side():
    n = math.ceil(64 * math.log(4 * 25) / 0.5**4)
    assert _trial_freq("YES", n) >= 0.9


def test_single_row_scan_and_round_trip():
    rep = experiments.scaling_scan([3], 0.5, ["conjugate_bell"], 1, 0)
    assert len(rep.rows) == 1
    again = ScalingReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert again == rep


def test_scan_independent_of_workers():
    a = experiments.scaling_scan([3, 5], 0.5, ["conjugate_bell"], 10, 4, workers=1)
    b = experiments.scaling_scan([3, 5], 0.5, ["conjugate_bell"], 10, 4, workers=2)
    assert a == b
    assert experiments.growth_factor(a, "conjugate_bell") > 0
