"""Distinguishing experiments, sample-complexity scans and norm lemmas.

The many-vs-one task: NO is the maximally mixed state, YES is a spiked
state (1/d)(I + r eps E_{q,p}) with uniformly random (q,p) != (0,0) and sign r.
Its amplitudes are y_{q,p} = r eps chi^* and y_{-q,-p} = r eps chi, so
|y| = eps/sqrt(2) and |y^2| = eps^2/2.

Decision rules:

* ``conjugate_bell``: n Bell samples of rho x rho^*; YES iff some nonzero
  index leaves the null branch of ``algorithm1`` run at precision eps/2,
  i.e. max |v_hat| > (2/3)(eps/2)^2.
* ``single_copy_shadow``: n Clifford shadows of rho; YES iff
  max |E_hat_{q,p}| > eps/2 (the spiked index has Tr(E rho) = r eps).
* ``single_copy_with_conjugate``: as above with samples alternating between
  rho and rho^*; a rho^* sample of E_{q,p} estimates Tr(E_{-q,p} rho).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bell import bell_distribution, outcome_counts, sample_bell
from .core import (DensityMatrix, check_dimension, displacement, displacement_observable,
                   indices, make_test_state, random_density_matrix,
                   representative_sign)
from .learner import estimate_v_all
from .rng import derive_seed, substream
from .shadows import shadow_observable_means

PROTOCOLS = ("conjugate_bell", "single_copy_shadow", "single_copy_with_conjugate")
MAX_NORM_DIM = 4096
SUCCESS_TARGET = 0.9
GRID_START = 16
GRID_MAX = 2**22


@dataclass(frozen=True)
class TrialRecord:
    d: int
    epsilon: float
    protocol: str
    n_samples: int
    decision: str
    truth: str
    seed: int

    @property
    def correct(self) -> bool:
        return self.decision == self.truth


@dataclass(frozen=True)
class ScalingRow:
    d: int
    protocol: str
    samples_to_success: int | None
    success_rate: float
    trials: int
    seed: int
    grid: tuple = ()


@dataclass(frozen=True)
class ScalingReport:
    epsilon: float
    target: float
    rows: tuple
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "target": self.target,
                "rows": [asdict(r) | {"grid": [list(g) for g in r.grid]} for r in self.rows],
                "metadata": dict(self.metadata)}

    @classmethod
    def from_dict(cls, data: dict) -> "ScalingReport":
        rows = tuple(ScalingRow(**(r | {"grid": tuple(tuple(g) for g in r["grid"])}))
                     for r in data["rows"])
        return cls(data["epsilon"], data["target"], rows, dict(data["metadata"]))


# ---------------------------------------------------------------- decision rules

def conjugate_bell_threshold(eps: float) -> float:
    """Null-branch threshold (2/3) eps'^2 of ``algorithm1`` at precision eps' = eps/2."""
    return 2 * (eps / 2) ** 2 / 3


def shadow_threshold(eps: float) -> float:
    return eps / 2


def _decide_conjugate_bell(rho: DensityMatrix, eps: float, n: int, rng) -> bool:
    counts = outcome_counts(sample_bell(bell_distribution(rho, rho.conj()), n, rng), rho.d)
    V = np.abs(estimate_v_all(counts))
    V[0, 0] = 0.0
    return bool(V.max() > conjugate_bell_threshold(eps))


def _decide_shadow(rho: DensityMatrix, eps: float, n: int, rng) -> bool:
    est = shadow_observable_means(rho, n, rng)
    return bool(np.abs(est).max() > shadow_threshold(eps))


def _decide_shadow_conjugate(rho: DensityMatrix, eps: float, n: int, rng) -> bool:
    d = rho.d
    n_rho, n_conj = (n + 1) // 2, n // 2
    est = n_rho * shadow_observable_means(rho, n_rho, rng)
    if n_conj:
        conj = shadow_observable_means(rho.conj(), n_conj, rng)
        est = est + n_conj * conjugate_to_rho(d, conj)
    return bool(np.abs(est / n).max() > shadow_threshold(eps))


def conjugate_to_rho(d: int, values: np.ndarray) -> np.ndarray:
    """Re-index values of Tr(E_k rho^*) as values of Tr(E_k rho).

    Tr(E_{q,p} rho^*) = Tr(E_{-q,p} rho), and E_{-q,p} equals the canonical
    E_{(-q) mod d, p} up to the representative sign.
    """
    nz = indices(d, include_identity=False)
    pos = {qp: k for k, qp in enumerate(nz)}
    out = np.empty_like(values)
    for k, (q, p) in enumerate(nz):
        src = ((-q) % d, p)
        out[k] = representative_sign(d, -src[0], p) * values[pos[src]]
    return out


_RULES = {
    "conjugate_bell": _decide_conjugate_bell,
    "single_copy_shadow": _decide_shadow,
    "single_copy_with_conjugate": _decide_shadow_conjugate,
}


def distinguishing_trial(d: int, eps: float, protocol: str, n: int, seed: int) -> TrialRecord:
    """One many-vs-one trial with a fair coin for the truth."""
    d = check_dimension(d)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if protocol not in _RULES:
        raise ValueError(f"unknown protocol {protocol!r}; choose from {PROTOCOLS}")
    rng = substream(seed)
    yes = bool(rng.random() < 0.5)
    if yes:
        k = int(rng.integers(1, d * d))
        r = 1 if rng.random() < 0.5 else -1
        rho = make_test_state(d, "spiked", idx=divmod(k, d), r=r, eps=eps)
    else:
        rho = make_test_state(d, "maximally_mixed")
    decision = _RULES[protocol](rho, eps, n, rng) if n > 0 else False
    return TrialRecord(d, eps, protocol, int(n), "YES" if decision else "NO",
                       "YES" if yes else "NO", int(seed))


# ---------------------------------------------------------------- scaling

def trial_seed(seed: int, d: int, protocol: str, trial: int) -> int:
    """Seed of trial ``trial``; shared across sample sizes (common random numbers)."""
    return derive_seed(seed, d, PROTOCOLS.index(protocol), trial)


def success_rate(d: int, eps: float, protocol: str, n: int, trials: int, seed: int) -> float:
    hits = sum(distinguishing_trial(d, eps, protocol, n, trial_seed(seed, d, protocol, t)).correct
               for t in range(trials))
    return hits / trials


def samples_to_success(d: int, eps: float, protocol: str, trials: int, seed: int,
                       target: float = SUCCESS_TARGET) -> ScalingRow:
    """Smallest grid size reaching ``target`` success.

    The grid doubles from GRID_START; the bracket [n/2, n] is then refined by
    one bisection step.
    """
    grid = []

    def rate(n):
        r = success_rate(d, eps, protocol, n, trials, seed)
        grid.append((n, r))
        return r

    n, r = GRID_START, rate(GRID_START)
    while r < target:
        if n >= GRID_MAX:
            return ScalingRow(d, protocol, None, r, trials, seed, tuple(grid))
        n *= 2
        r = rate(n)
    if n > GRID_START:
        mid = (n // 2 + n) // 2
        r_mid = rate(mid)
        if r_mid >= target:
            n, r = mid, r_mid
    return ScalingRow(d, protocol, n, r, trials, seed, tuple(grid))


def _scan_job(args):
    return samples_to_success(*args)


def scaling_scan(d_list, eps: float, protocols, trials: int, seed: int,
                 workers: int = 1, target: float = SUCCESS_TARGET) -> ScalingReport:
    """samples_to_success for every (d, protocol); workers do not change results."""
    for d in d_list:
        check_dimension(d)
    for p in protocols:
        if p not in _RULES:
            raise ValueError(f"unknown protocol {p!r}")
    jobs = [(d, eps, p, trials, seed, target) for p in protocols for d in d_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_scan_job, jobs))
    else:
        rows = [_scan_job(j) for j in jobs]
    meta = {"seed": seed, "trials": trials, "grid_start": GRID_START, "grid_ratio": 2,
            "refinement": "one bisection step"}
    return ScalingReport(eps, target, tuple(rows), meta)


def growth_factor(report: ScalingReport, protocol: str) -> float:
    """samples_to_success at the largest d divided by that at the smallest d."""
    rows = sorted((r for r in report.rows if r.protocol == protocol), key=lambda r: r.d)
    if not rows or rows[0].samples_to_success is None or rows[-1].samples_to_success is None:
        return math.nan
    return rows[-1].samples_to_success / rows[0].samples_to_success


# ---------------------------------------------------------------- norm lemmas

def _check_norm_args(d: int, k: int):
    d = check_dimension(d)
    if d == 2:
        raise ValueError("norm lemmas are stated for odd prime d")
    if k < 2 or k % 2:
        raise ValueError(f"k must be a positive even integer, got {k}")
    if d**k > MAX_NORM_DIM:
        raise ValueError(f"d^k = {d**k} exceeds cap {MAX_NORM_DIM}")
    return d


def _kron_power(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def displacement_tensor_sum(d: int, m: int, k: int) -> np.ndarray:
    """sum_{q,p} D_{q,p}^{(x)m} (x) D_{-q,-p}^{(x)(k-m)}."""
    d = _check_norm_args(d, k)
    if not 1 <= m <= k:
        raise ValueError(f"need 1 <= m <= k, got m={m}, k={k}")
    return sum(_kron_power([displacement(d, q, p)] * m + [displacement(d, -q, -p)] * (k - m))
               for q, p in indices(d))


def is_permutation_matrix(P: np.ndarray, tol: float = 1e-9) -> bool:
    A = np.abs(P)
    if np.any((A > tol) & (np.abs(P - 1) > tol)):
        return False
    ones = A > 0.5
    return bool(np.all(ones.sum(axis=0) == 1) and np.all(ones.sum(axis=1) == 1))


def norm_lemma_check(d: int, m: int, k: int) -> tuple[float, bool]:
    """Operator norm of the displacement tensor sum and whether it equals d times a permutation."""
    S = displacement_tensor_sum(d, m, k)
    return float(np.linalg.norm(S, 2)), is_permutation_matrix(S / d)


def e_norm_check(d: int, k: int) -> tuple[float, bool]:
    """||sum_{q,p} E_{q,p}^{(x)k}||_op (with E_{0,0} = I), and whether it is <= 2d.

    Raises AssertionError if the proven bound 2^{k/2} d is violated.
    """
    d = _check_norm_args(d, k)
    S = sum(_kron_power([displacement_observable(d, q, p) if (q, p) != (0, 0)
                         else np.eye(d, dtype=complex)] * k)
            for q, p in indices(d))
    val = float(np.linalg.norm(S, 2))
    bound = 2 ** (k / 2) * d
    assert val <= bound + 1e-8, f"E-norm lemma violated: {val} > {bound}"
    return val, val <= 2 * d + 1e-8


def tensor_commutation_check(d: int, n_states: int = 3, seed: int = 0) -> tuple[float, float]:
    """Commutators of the family D_{q,p} x D_{-q,p} and the rho x rho^* trace identity.

    Returns (max commutator Frobenius norm over all index pairs,
    max |Tr((D x D_{-q,p})(rho x rho^*)) - Tr(D rho)^2| over random states).
    """
    d = check_dimension(d)
    if d > 13:
        raise ValueError("tensor_commutation_check is limited to d <= 13")
    idx = indices(d)
    A = np.stack([displacement(d, q, p) for q, p in idx])
    B = np.stack([displacement(d, -q, p) for q, p in idx])
    worst = 0.0
    for i in range(len(idx)):
        X, Xp = A[i] @ A, A @ A[i]
        Y, Yp = B[i] @ B, B @ B[i]
        worst = max(worst, max(_kron_difference_norm(X[j], Y[j], Xp[j], Yp[j])
                               for j in range(len(idx))))
    trace_dev = 0.0
    for s in range(n_states):
        rho = random_density_matrix(d, substream(seed, s)).matrix
        for q, p in idx:
            lhs = np.trace(A[q * d + p] @ rho) * np.trace(B[q * d + p] @ rho.conj())
            rhs = np.trace(A[q * d + p] @ rho) ** 2
            trace_dev = max(trace_dev, abs(lhs - rhs))
    return worst, trace_dev


def _monomial(M: np.ndarray):
    """(row of the nonzero entry per column, its value), or None if not monomial."""
    rows = np.argmax(np.abs(M) > 1e-12, axis=0)
    vals = M[rows, np.arange(M.shape[1])]
    if np.count_nonzero(np.abs(M) > 1e-12) != M.shape[1]:
        return None
    return rows, vals


def _kron_difference_norm(X, Y, Xp, Yp) -> float:
    """||X (x) Y - Xp (x) Yp||_F without cancellation for monomial factors."""
    mx, my, mxp, myp = (_monomial(M) for M in (X, Y, Xp, Yp))
    if None in (mx, my, mxp, myp) or not (np.array_equal(mx[0], mxp[0])
                                          and np.array_equal(my[0], myp[0])):
        return float(np.linalg.norm(np.kron(X, Y) - np.kron(Xp, Yp)))
    diff = np.outer(mx[1], my[1]) - np.outer(mxp[1], myp[1])
    return float(np.linalg.norm(diff))


def commutator_norm(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.linalg.norm(A @ B - B @ A))
