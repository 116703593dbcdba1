"""Learning displacement amplitudes from Bell samples of rho x rho^*.

* :func:`algorithm1` estimates y^2 for each index from Bell outcomes and
  returns the magnitude up to a sign.
* :func:`find_hypothesis` runs matrix multiplicative weights (MMW) over
  density matrices until a hypothesis omega reproduces every magnitude.
* :func:`algorithm2` resolves the signs from Bell samples of rho x omega^*.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .bell import bell_distribution, outcome_counts, sample_bell
from .core import (DensityMatrix, as_density, canonical,
                   check_dimension, displacement, indices)
from .rng import SeedLike, as_generator, derive_seed, substream

log = logging.getLogger(__name__)

SIGN_SAMPLE_CONSTANT = 25.0


@dataclass(frozen=True)
class LearnerConfig:
    epsilon: float
    delta: float = 0.1
    sample_multiplier: float = 1.0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.sample_multiplier >= 1:
            raise ValueError(f"sample_multiplier must be >= 1, got {self.sample_multiplier}")


@dataclass(frozen=True)
class MagnitudeEstimate:
    """v_hat estimates y^2; u_hat is its principal square root or None."""

    idx: tuple[int, int]
    v_hat: complex
    u_hat: complex | None


@dataclass(frozen=True)
class SignedEstimate:
    idx: tuple[int, int]
    y_hat: complex


@dataclass(frozen=True)
class MMWStep:
    """One ERROR event: index, exact y~ = Tr(D omega), chosen sign, loss Tr(M omega)."""

    idx: tuple[int, int]
    y_tilde: complex
    sign: int
    c: complex
    loss: float
    loss_sq: float


@dataclass(frozen=True)
class HypothesisState:
    omega: DensityMatrix
    error_count: int
    sign_guesses: dict
    T: int
    beta: float
    passes: int = 0
    bound_exceeded: bool = False
    history: tuple = field(default=(), repr=False)


# ---------------------------------------------------------------- sample sizes

def sample_count(cfg: LearnerConfig, M: int) -> int:
    """N = ceil(c * 8 ln(4M/delta) / eps^4)."""
    M = max(int(M), 1)
    return math.ceil(cfg.sample_multiplier * 8 * math.log(4 * M / cfg.delta) / cfg.epsilon**4)


def mmw_rounds(d: int, eps: float) -> int:
    """T = ceil(16 ln(d) / eps^2)."""
    return math.ceil(16 * math.log(d) / eps**2)


def sign_sample_count(eps: float) -> int:
    return math.ceil(SIGN_SAMPLE_CONSTANT / eps**2)


# ---------------------------------------------------------------- estimators

def bell_phase(d: int, q: int, p: int, a, b):
    """exp(2 pi i (a p - b q)/d), vectorized over outcomes."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.exp(2j * np.pi * ((a * p - b * q) % d) / d)


def estimate_v(outcomes, idx, d: int) -> complex:
    """Empirical mean of the Bell phase over an (N, 2) outcome array."""
    out = np.asarray(outcomes, dtype=int).reshape(-1, 2)
    if len(out) == 0:
        raise ValueError("estimate_v needs at least one outcome")
    q, p = idx
    if canonical(d, q, p) == (0, 0):
        return 1.0 + 0j
    return complex(bell_phase(d, q, p, out[:, 0], out[:, 1]).mean())


def estimate_v_weighted(weights: np.ndarray, idx) -> complex:
    """Phase mean under weights[a, b] (counts or exact probabilities)."""
    w = np.asarray(weights, dtype=float)
    d = w.shape[0]
    q, p = idx
    a = np.arange(d)
    ph = bell_phase(d, q, p, a[:, None], a[None, :])
    return complex((w * ph).sum() / w.sum())


def estimate_v_all(weights: np.ndarray) -> np.ndarray:
    """Phase means for every index at once, as a [q, p] array (O(d^4))."""
    w = np.asarray(weights, dtype=float)
    d = w.shape[0]
    a = np.arange(d)
    F = np.exp(2j * np.pi * (np.outer(a, a) % d) / d)       # F[a, p] = w^{a p}
    # v[q, p] = sum_{a,b} w[a,b] w^{a p} w^{-b q}
    return (F.conj() @ w.T @ F) / w.sum()


def principal_sqrt(v: complex) -> complex:
    """Square root with argument in (-pi/2, pi/2]."""
    r = complex(np.sqrt(complex(v)))
    if r.real < 0 or (r.real == 0 and r.imag < 0):
        r = -r
    return r


def magnitude_from_v(idx, v: complex, eps: float) -> MagnitudeEstimate:
    if abs(v) <= 2 * eps**2 / 3:
        return MagnitudeEstimate(idx, v, None)
    return MagnitudeEstimate(idx, v, principal_sqrt(v))


def _conj_outcome_counts(rho, sigma, n: int, seed: SeedLike) -> np.ndarray:
    dist = bell_distribution(rho, sigma)
    return outcome_counts(sample_bell(dist, n, seed), dist.d)


def algorithm1(rho, idx_list: Sequence, cfg: LearnerConfig, seed: SeedLike) -> list[MagnitudeEstimate]:
    """Estimate |y_{q,p}| up to sign from Bell samples of rho x rho^*."""
    rho = as_density(rho)
    d = check_dimension(rho.d)
    idx_list = [canonical(d, *i) for i in idx_list]
    if not idx_list:
        return []
    N = sample_count(cfg, len(idx_list))
    counts = _conj_outcome_counts(rho, rho.conj(), N, seed)
    V = estimate_v_all(counts)
    return [magnitude_from_v(i, complex(V[i]), cfg.epsilon) for i in idx_list]


def measure_sign_samples(rho, idx, n: int, seed: SeedLike) -> complex:
    """Mean eigenvalue over n measurements of rho in the eigenbasis of D_{q,p}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rho = as_density(rho)
    d = rho.d
    # D is normal, so its complex Schur form is diagonal with a unitary basis
    T, Q = scipy.linalg.schur(displacement(d, *idx), output="complex")
    lam = np.diag(T)
    p = np.clip(np.einsum("ji,jk,ki->i", Q.conj(), rho.matrix, Q).real, 0, None)
    rng = as_generator(seed)
    k = rng.choice(d, size=n, p=p / p.sum())
    return complex(lam[k].mean())


# ---------------------------------------------------------------- MMW

def _gibbs(S: np.ndarray, beta: float) -> np.ndarray:
    w, V = np.linalg.eigh(S)
    x = -beta * (w - w.min())
    g = np.exp(x)
    return (V * (g / g.sum())) @ V.conj().T


def mmw_update(loss_history: Iterable[np.ndarray], beta: float, d: int) -> DensityMatrix:
    """omega = exp(-beta sum M) / tr, via Hermitian eigendecomposition."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    S = np.zeros((d, d), dtype=complex)
    for M in loss_history:
        M = np.asarray(M, dtype=complex)
        if np.max(np.abs(M - M.conj().T)) > 1e-9:
            raise ValueError("loss matrix is not Hermitian")
        if np.linalg.norm(M, 2) > 1 + 1e-9:
            raise ValueError("loss matrix has operator norm > 1")
        S += M
    return DensityMatrix(_gibbs((S + S.conj().T) / 2, beta))


def loss_matrix(E: np.ndarray, c: complex) -> np.ndarray:
    """M = (c^* E + c E^dag) / (2|c|)."""
    return (np.conj(c) * E + c * E.conj().T) / (2 * abs(c))


def find_hypothesis(rho, estimates: Sequence[MagnitudeEstimate], cfg: LearnerConfig,
                    seed: int, max_errors: int | None = None) -> HypothesisState:
    """MMW search for omega with |Tr(D omega) - s u_hat| < eps for every tracked index.

    ``cfg.epsilon`` is the target precision of this search. An ERROR at an
    index fires when both signs miss; the sign r is then measured with
    ceil(25/eps^2) single-copy samples. The search aborts with
    ``bound_exceeded=True`` once the error count passes T + 1.
    """
    rho = as_density(rho)
    d = rho.d
    eps = cfg.epsilon
    T = mmw_rounds(d, eps)
    beta = math.sqrt(math.log(d) / T)
    limit = T + 1 if max_errors is None else max_errors
    tracked = [e for e in estimates if e.u_hat is not None and canonical(d, *e.idx) != (0, 0)]
    n_sign = sign_sample_count(eps)

    S = np.zeros((d, d), dtype=complex)
    omega = np.eye(d, dtype=complex) / d
    signs: dict = {}
    history = []
    errors = 0
    passes = 0
    exceeded = False
    while tracked and not exceeded:
        passes += 1
        clean = True
        for est in tracked:
            D = displacement(d, *est.idx)
            y_t = complex(np.trace(D @ omega))
            u = est.u_hat
            if min(abs(y_t - u), abs(y_t + u)) < eps:
                continue
            clean = False
            y_s = measure_sign_samples(rho, est.idx, n_sign, substream(seed, 1, errors))
            r = 1 if abs(u - y_s) <= abs(-u - y_s) else -1
            signs[est.idx] = r
            c = y_t - r * u
            M = loss_matrix(D, c)
            history.append(MMWStep(est.idx, y_t, r, c,
                                   float(np.trace(M @ omega).real),
                                   float(np.trace(M @ M @ omega).real)))
            errors += 1
            if errors > limit:
                exceeded = True
                log.warning("MMW error count %d exceeded T+1 = %d (d=%d, eps=%g)",
                            errors, limit, d, eps)
                break
            S += M
            omega = _gibbs((S + S.conj().T) / 2, beta)
        if clean:
            break
    return HypothesisState(DensityMatrix(omega), errors, signs, T, beta, passes,
                           exceeded, tuple(history))


def mmw_regret(state: HypothesisState, d: int) -> tuple[float, float]:
    """Replay the recorded losses; return (regret, MMW bound).

    regret = sum_t Tr(M_t omega_t) - lambda_min(sum_t M_t)
    bound  = beta sum_t Tr(M_t^2 omega_t) + ln(d) / beta
    """
    if not state.history:
        return 0.0, math.log(d) / state.beta
    S = sum(loss_matrix(displacement(d, *s.idx), s.c) for s in state.history)
    lam = float(np.linalg.eigvalsh((S + S.conj().T) / 2)[0])
    total = sum(s.loss for s in state.history)
    sq = sum(s.loss_sq for s in state.history)
    return total - lam, state.beta * sq + math.log(d) / state.beta


def _wrap(x: float) -> float:
    """Angle wrapped into (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


def sign_from_phase(v: complex, u: complex, s: int) -> int:
    """+s if arg(v) - 2 arg(u) lies within pi/2 (mod 2 pi), else -s."""
    return s if abs(_wrap(np.angle(v) - 2 * np.angle(u))) <= math.pi / 2 else -s


def algorithm2(rho, estimates: Sequence[MagnitudeEstimate], cfg: LearnerConfig,
               seed: int) -> tuple[list[SignedEstimate], HypothesisState]:
    """Signs of the non-null magnitudes via a hypothesis state omega.

    ``estimates`` come from :func:`algorithm1` at precision eps/2 and the MMW
    search also runs at eps/2. Bell samples of rho x omega^* then give
    v ~ y Tr(D omega) ~ r s u^2, which fixes the sign r relative to the
    hypothesis sign s. Returns the signed list and the hypothesis.
    """
    rho = as_density(rho)
    d = rho.d
    tracked = [e for e in estimates if e.u_hat is not None and canonical(d, *e.idx) != (0, 0)]
    hyp = find_hypothesis(rho, tracked, replace(cfg, epsilon=cfg.epsilon / 2), derive_seed(seed, 2))
    out = [SignedEstimate(e.idx, 1.0 + 0j) for e in estimates
           if e.u_hat is not None and canonical(d, *e.idx) == (0, 0)]
    if not tracked:
        return out, hyp
    N = sample_count(cfg, len(estimates))
    counts = _conj_outcome_counts(rho, hyp.omega.conj(), N, substream(seed, 3))
    V = estimate_v_all(counts)
    for e in tracked:
        y_t = complex(np.trace(displacement(d, *e.idx) @ hyp.omega.matrix))
        s = 1 if abs(y_t - e.u_hat) <= abs(y_t + e.u_hat) else -1
        r = sign_from_phase(complex(V[e.idx]), e.u_hat, s)
        out.append(SignedEstimate(e.idx, r * e.u_hat))
    return out, hyp


@dataclass(frozen=True)
class LearnResult:
    """Signed estimates for every requested index (null magnitudes -> 0)."""

    d: int
    epsilon: float
    estimates: dict
    magnitudes: tuple
    hypothesis: HypothesisState


def learn_amplitudes(rho, cfg: LearnerConfig, seed: int, idx_list: Sequence | None = None) -> LearnResult:
    """``algorithm1`` at eps/2 followed by ``algorithm2`` at eps."""
    rho = as_density(rho)
    d = rho.d
    idx_list = indices(d, include_identity=False) if idx_list is None else \
        [canonical(d, *i) for i in idx_list]
    mags = algorithm1(rho, idx_list, replace(cfg, epsilon=cfg.epsilon / 2), substream(seed, 0))
    signed, hyp = algorithm2(rho, mags, cfg, derive_seed(seed, 1))
    est = {i: 0j for i in idx_list}
    est.update({s.idx: s.y_hat for s in signed})
    return LearnResult(d, cfg.epsilon, est, tuple(mags), hyp)
