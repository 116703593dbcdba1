"""Generalized Bell basis and exact Bell-measurement statistics.

|Phi_{a,b}> = d^{-1/2} sum_j w^{b j} |j+a>|-j>. Two-qudit vectors use the
row-major index ``first * d + second``. The n-register version uses the same
formula with multi-indices, registers ordered (rho_1..rho_n, sigma_1..sigma_n).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import DensityMatrix, check_dimension, clock_shift, displacement, indices
from .rng import SeedLike, as_generator

MAX_JOINT_DIM = 4096


def bell_state(d: int, a: int, b: int) -> np.ndarray:
    """The d^2-component unit vector |Phi_{a,b}>."""
    d = check_dimension(d)
    j = np.arange(d)
    v = np.zeros((d, d), dtype=complex)
    v[(j + a) % d, (-j) % d] = np.exp(2j * np.pi * ((b * j) % d) / d)
    return v.ravel() / np.sqrt(d)


def bell_basis(d: int) -> np.ndarray:
    """Columns are |Phi_{a,b}> in outcome order a * d + b."""
    return np.stack([bell_state(d, a, b) for a in range(d) for b in range(d)], axis=1)


def bell_eigenvalue(d: int, q: int, p: int, a: int, b: int) -> complex:
    """Eigenvalue exp(2 pi i (a p - b q)/d) of D_{q,p} x D_{-q,p} on |Phi_{a,b}>."""
    return complex(np.exp(2j * np.pi * ((a * p - b * q) % d) / d))


def phase_table(d: int, q: int, p: int) -> np.ndarray:
    """bell_eigenvalue for every outcome, as a [a, b] array."""
    a = np.arange(d)
    return np.exp(2j * np.pi * ((np.outer(a, np.full(d, p)) - np.outer(np.full(d, q), a)) % d) / d)


@dataclass(frozen=True, eq=False)
class BellDistribution:
    """Outcome probabilities ``probs[a, b]`` of a Bell-basis measurement.

    For n registers ``probs`` has shape (d^n, d^n) with multi-indices in
    mixed radix d (first register most significant).
    """

    d: int
    probs: np.ndarray
    n: int = 1

    def __post_init__(self):
        P = np.array(self.probs, dtype=float)
        D = self.d ** self.n
        if P.shape != (D, D):
            raise ValueError(f"expected probability array of shape {(D, D)}, got {P.shape}")
        if np.any(P < -1e-12) or abs(P.sum() - 1) > 1e-10:
            raise ValueError(f"invalid distribution (sum={P.sum()!r}, min={P.min()!r})")
        P = np.clip(P, 0.0, None)
        P.setflags(write=False)
        object.__setattr__(self, "probs", P)

    @classmethod
    def point_mass(cls, d: int, a: int, b: int) -> "BellDistribution":
        P = np.zeros((d, d))
        P[a % d, b % d] = 1.0
        return cls(d, P)

    @classmethod
    def uniform(cls, d: int) -> "BellDistribution":
        return cls(d, np.full((d, d), 1.0 / d**2))


def _register_maps(d: int, n: int):
    """Digit matrix, addition table and negation map of Z_d^n in mixed radix."""
    D = d**n
    digits = np.array(np.unravel_index(np.arange(D), (d,) * n)).T      # [x, register]
    add = np.ravel_multi_index(((digits[:, None, :] + digits[None, :, :]) % d).T, (d,) * n).T
    neg = np.ravel_multi_index(((-digits) % d).T, (d,) * n)
    return digits, add, neg


def bell_distribution(rho, sigma, n: int = 1) -> BellDistribution:
    """Exact P(a, b) = <Phi_{a,b}| rho x sigma |Phi_{a,b}>.

    Uses P(a,b) = d^{-n} sum_{j,j'} w^{b.(j'-j)} rho[j+a, j'+a] sigma[-j, -j'],
    so the d^{2n} x d^{2n} joint matrix is never formed. O(D^4) for D = d^n.
    """
    r = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    s = np.asarray(getattr(sigma, "matrix", sigma), dtype=complex)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: rho {r.shape} vs sigma {s.shape}")
    D = r.shape[0]
    d = round(D ** (1.0 / n))
    if d**n != D:
        raise ValueError(f"dimension {D} is not d^{n}")
    check_dimension(d)
    if D > MAX_JOINT_DIM:
        raise ValueError(f"dimension {D} exceeds cap {MAX_JOINT_DIM}")
    digits, add, neg = _register_maps(d, n)
    F = np.exp(2j * np.pi * ((digits @ digits.T) % d) / d)    # F[b, j] = w^{b.j}
    s_neg = s[np.ix_(neg, neg)]
    P = np.empty((D, D))
    for a in range(D):
        sh = add[a]
        K = r[np.ix_(sh, sh)] * s_neg                             # K[j, j']
        # sum_{j,j'} conj(F[b,j]) K[j,j'] F[b,j']
        P[a] = np.einsum("bj,bj->b", F.conj() @ K, F).real / D
    return BellDistribution(d, P, n)


def bell_distribution_dense(rho, sigma) -> BellDistribution:
    """Test oracle: project the explicit joint matrix onto each Bell vector."""
    r = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    s = np.asarray(getattr(sigma, "matrix", sigma), dtype=complex)
    d = r.shape[0]
    B = bell_basis(d)
    joint = np.kron(r, s)
    P = np.einsum("ia,ij,ja->a", B.conj(), joint, B).real
    return BellDistribution(d, P.reshape(d, d))


def bell_distribution_rank1(psi) -> BellDistribution:
    """Distribution for a pure joint state psi on C^d x C^d (no product assumption)."""
    psi = np.asarray(psi, dtype=complex).ravel()
    d = round(np.sqrt(psi.size))
    amp = bell_basis(d).conj().T @ psi
    P = np.abs(amp) ** 2
    return BellDistribution(d, (P / P.sum()).reshape(d, d))


def sample_bell(dist: BellDistribution, n: int, seed: SeedLike) -> np.ndarray:
    """Draw n i.i.d. outcomes by inverse CDF; returns an (n, 2) int array of (a, b).

    For n-register distributions a and b are mixed-radix multi-indices.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = as_generator(seed)
    flat = dist.probs.ravel()
    cdf = np.cumsum(flat)
    cdf /= cdf[-1]
    k = np.searchsorted(cdf, rng.random(n), side="right")
    k = np.minimum(k, flat.size - 1)
    D = dist.probs.shape[0]
    return np.stack([k // D, k % D], axis=1)


def sample_bell_product(dists: list[BellDistribution], n: int, seed: SeedLike) -> np.ndarray:
    """Per-register Bell sampling for product inputs; returns (n, registers, 2)."""
    rng = as_generator(seed)
    return np.stack([sample_bell(dist, n, rng) for dist in dists], axis=1)


def outcome_counts(outcomes: np.ndarray, d: int) -> np.ndarray:
    """Histogram of (a, b) outcomes as a [a, b] count array."""
    outcomes = np.asarray(outcomes, dtype=int).reshape(-1, 2)
    c = np.bincount(outcomes[:, 0] * d + outcomes[:, 1], minlength=d * d)
    return c.reshape(d, d)


@lru_cache(maxsize=None)
def fourier_matrix(d: int) -> np.ndarray:
    """W|b> = d^{-1/2} sum_j exp(-2 pi i b j / d)|j>."""
    j = np.arange(d)
    W = np.exp(-2j * np.pi * (np.outer(j, j) % d) / d) / np.sqrt(d)
    W.setflags(write=False)
    return W


def cx_matrix(d: int) -> np.ndarray:
    """CX|j>|l> = |j+l>|l>."""
    C = np.zeros((d * d, d * d))
    for j in range(d):
        for l in range(d):
            C[((j + l) % d) * d + l, j * d + l] = 1.0
    return C


def bell_circuit_check(d: int) -> float:
    """Max deviation of CX^{-1} (I x W)|a>|b> from |Phi_{a,b}> over all a, b."""
    d = check_dimension(d)
    circuit = cx_matrix(d).T @ np.kron(np.eye(d), fourier_matrix(d))
    dev = 0.0
    for a in range(d):
        for b in range(d):
            dev = max(dev, float(np.max(np.abs(circuit[:, a * d + b] - bell_state(d, a, b)))))
    return dev


def fourier_conjugation_check(d: int) -> float:
    """Max entry deviation of W X W^dag from Z."""
    X, Z = clock_shift(d)
    W = fourier_matrix(d)
    return float(np.max(np.abs(W @ X @ W.conj().T - Z)))


def eigen_equation_check(d: int) -> float:
    """Max deviation of (D_{q,p} x D_{-q,p})|Phi_{a,b}> from its eigenvalue multiple."""
    d = check_dimension(d)
    # (A x B) vec(M) = vec(A M B^T), with Phi_{a,b} reshaped to a d x d matrix
    phis = bell_basis(d).T.reshape(d * d, d, d)
    dev = 0.0
    for q, p in indices(d):
        A = displacement(d, q, p)
        B = displacement(d, -q, p)
        out = np.einsum("ij,njk,lk->nil", A, phis, B)
        lam = phase_table(d, q, p).ravel()
        dev = max(dev, float(np.max(np.abs(out - lam[:, None, None] * phis))))
    return dev


def bell_gram_deviation(d: int) -> float:
    B = bell_basis(d)
    return float(np.max(np.abs(B.conj().T @ B - np.eye(d * d))))
