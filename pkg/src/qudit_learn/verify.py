"""Invariant suite: algebraic identities checked numerically for one dimension.

Each check returns a maximum absolute deviation that must stay below its
tolerance. ``run_suite`` collects them into rows for the CLI and the tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bell, core, experiments
from .core import displacement, displacement_observable, indices
from .rng import substream

TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    check: str
    d: int
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def _all_D(d):
    return np.stack([displacement(d, q, p) for q, p in indices(d)])


def check_clock_shift(d):
    X, Z = core.clock_shift(d)
    w = np.exp(2j * np.pi / d)
    return float(np.max(np.abs(Z @ X - w * X @ Z)))


def check_action(d):
    """<j+q|D|j> = exp(i pi (q + 2j) p / d), zero elsewhere, unitary."""
    dev = 0.0
    j = np.arange(d)
    for q, p in indices(d):
        D = displacement(d, q, p)
        ref = np.zeros((d, d), dtype=complex)
        ref[(j + q) % d, j] = np.exp(1j * np.pi * (q + 2 * j) * p / d)
        dev = max(dev, np.max(np.abs(D - ref)), np.max(np.abs(D.conj().T @ D - np.eye(d))))
    return float(dev)


def check_adjoint(d):
    return max(float(np.max(np.abs(displacement(d, q, p).conj().T - displacement(d, -q, -p))))
               for q, p in indices(d))


def check_conjugate(d):
    return max(float(np.max(np.abs(displacement(d, q, p).conj() - displacement(d, q, -p))))
               for q, p in indices(d))


def check_transpose(d):
    return max(float(np.max(np.abs(displacement(d, q, p).T - displacement(d, -q, p))))
               for q, p in indices(d))


def check_commutation(d):
    """D_{q',p'} D_{q,p} = w^{q p' - q' p} D_{q,p} D_{q',p'} for all pairs."""
    A = _all_D(d)
    idx = np.array(indices(d))
    dev = 0.0
    for i, (q, p) in enumerate(idx):
        lhs = A @ A[i]                       # D_{q',p'} D_{q,p}
        rhs = A[i] @ A                       # D_{q,p} D_{q',p'}
        ph = np.exp(2j * np.pi * ((q * idx[:, 1] - idx[:, 0] * p) % d) / d)
        dev = max(dev, float(np.max(np.abs(lhs - ph[:, None, None] * rhs))))
    return dev


def check_power(d):
    """D_{q,p}^k = D_{kq,kp} with integer indices, k = 0..2d."""
    dev = 0.0
    for q, p in indices(d):
        D = displacement(d, q, p)
        P = np.eye(d, dtype=complex)
        for k in range(2 * d + 1):
            dev = max(dev, float(np.max(np.abs(P - displacement(d, k * q, k * p)))))
            P = P @ D
    return dev


def check_power_reduced(d):
    """D_{q,p}^k = s * D_{kq mod d, kp mod d} with the representative sign s."""
    dev = 0.0
    for q, p in indices(d):
        D = displacement(d, q, p)
        P = np.eye(d, dtype=complex)
        for k in range(2 * d + 1):
            s = core.representative_sign(d, k * q, k * p)
            dev = max(dev, float(np.max(np.abs(P - s * displacement(d, (k * q) % d, (k * p) % d)))))
            P = P @ D
    return dev


def check_hilbert_schmidt(d):
    V = _all_D(d).reshape(d * d, d * d)
    return float(np.max(np.abs(V.conj() @ V.T - d * np.eye(d * d))))


def check_vectorization(d):
    """(D_{q,p} x D_{q,p}^*) vec(D_{a,b}) = w^{a p - q b} vec(D_{a,b})."""
    A = _all_D(d)
    idx = np.array(indices(d))
    dev = 0.0
    for i, (q, p) in enumerate(idx):
        # (P x P^*) vec(Q) = vec(P Q P^dag) for row-major vec
        out = A[i] @ A @ A[i].conj().T
        ph = np.exp(2j * np.pi * ((idx[:, 0] * p - q * idx[:, 1]) % d) / d)
        dev = max(dev, float(np.max(np.abs(out - ph[:, None, None] * A))))
    return dev


def check_observables(d):
    """E Hermitian, ||E|| <= sqrt 2, Tr(E E') = d delta, E^* = E^T = E_{-q,p}."""
    Es = np.stack([displacement_observable(d, q, p) for q, p in indices(d)])
    dev = 0.0
    for (q, p), E in zip(indices(d), Es):
        dev = max(dev, np.max(np.abs(E - E.conj().T)),
                  max(0.0, np.linalg.norm(E, 2) - np.sqrt(2)),
                  np.max(np.abs(E.conj() - displacement_observable(d, -q, p))),
                  np.max(np.abs(E.T - displacement_observable(d, -q, p))))
    V = Es.reshape(d * d, d * d)
    gram = V.conj() @ V.T               # Tr(E^dag E') = Tr(E E') for Hermitian E
    dev = max(dev, np.max(np.abs(gram - d * np.eye(d * d))))
    return float(dev)


def check_amplitudes(d, seed=0, n_states=3):
    """Exact amplitudes, conjugation symmetry, Bloch round trip, rho x rho^* identity."""
    dev = 0.0
    for s in range(n_states):
        rho = core.random_density_matrix(d, substream(seed, d, s))
        t = core.amplitudes(rho)
        for q, p in indices(d):
            D = displacement(d, q, p)
            y = np.trace(D @ rho.matrix)
            yc = np.trace(D.T @ rho.matrix.conj())
            dev = max(dev, abs(t[q, p] - y), abs(np.conj(t[q, p]) - t[-q, -p]), abs(y * yc - y * y))
        m, _ = core.bloch_reconstruct(t)
        dev = max(dev, np.max(np.abs(m - rho.matrix)))
    return float(dev)


def check_bell_moments(d, seed=0, n_states=3):
    """sum_{a,b} P(a,b) w^{a p - b q} = y_{q,p}^2 for sigma = rho^*."""
    dev = 0.0
    for s in range(n_states):
        rho = core.random_density_matrix(d, substream(seed, 100 + d, s))
        P = bell.bell_distribution(rho, rho.conj()).probs
        t = core.amplitudes(rho)
        for q, p in indices(d):
            dev = max(dev, abs((P * bell.phase_table(d, q, p)).sum() - t[q, p] ** 2))
    return float(dev)


def check_fourier(d):
    """W^dag X W = Z and W^dag Z W = X^dag for W|b> = sum_j exp(-2 pi i b j/d)|j>/sqrt d."""
    X, Z = core.clock_shift(d)
    W = bell.fourier_matrix(d)
    return float(max(np.max(np.abs(W.conj().T @ X @ W - Z)),
                     np.max(np.abs(W.conj().T @ Z @ W - X.conj().T))))


def check_tensor_commutation(d):
    return experiments.tensor_commutation_check(d)[0]


CHECKS = {
    "clock_shift": check_clock_shift,
    "displacement_action": check_action,
    "adjoint": check_adjoint,
    "conjugate": check_conjugate,
    "transpose": check_transpose,
    "commutation": check_commutation,
    "power": check_power,
    "power_reduced_signed": check_power_reduced,
    "hilbert_schmidt": check_hilbert_schmidt,
    "vectorization": check_vectorization,
    "observables": check_observables,
    "amplitudes": check_amplitudes,
    "bell_orthonormal": bell.bell_gram_deviation,
    "bell_eigen": bell.eigen_equation_check,
    "bell_circuit": bell.bell_circuit_check,
    "bell_moments": check_bell_moments,
    "fourier": check_fourier,
    "tensor_commutation": check_tensor_commutation,
}


def run_suite(d: int, checks=None, tol: float = TOL) -> list[CheckResult]:
    d = core.check_dimension(d)
    names = list(CHECKS) if checks is None else list(checks)
    return [CheckResult(name, d, float(CHECKS[name](d)), tol) for name in names]
