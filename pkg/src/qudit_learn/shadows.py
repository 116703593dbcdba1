"""Single-qudit Clifford group, classical shadows and twirl channels.

A Clifford element is a pair (C, pauli) with C in SL(2, Z_d). Its unitary
U = D_pauli U_C satisfies ``U^dag D_v U  ~  D_{C v}`` (equal up to a phase),
so products compose as ``U_1 U_2 <-> C_2 C_1``.

Generators used for synthesis (valid for every prime d, including 2):

* ``W`` (Fourier, ``|b> -> d^{-1/2} sum_j exp(-2 pi i b j/d)|j>``) <-> [[0,-1],[1,0]]
* ``P_c = diag(exp(-i pi c j (j+d) / d))``                      <-> [[1,0],[c,1]]
* ``W P_{-b} W^dag``                                           <-> [[1,b],[0,1]]

Superoperators are written in the orthonormal Liouville basis
|D_{q,p}>> = D_{q,p}/sqrt(d), index ``q * d + p``, with
``S_U[alpha, beta] = <<D_alpha| U^dag D_beta U>>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import DensityMatrix, canonical, check_dimension, displacement, indices
from .bell import fourier_matrix
from .rng import SeedLike, as_generator

MAX_ENUM_DIM = 5


@dataclass(frozen=True)
class SymplecticMat2:
    """[[a, b], [c, e]] over Z_d with a e - b c = 1 (mod d)."""

    a: int
    b: int
    c: int
    e: int
    d: int

    def __post_init__(self):
        d = self.d
        for name in "abce":
            object.__setattr__(self, name, int(getattr(self, name)) % d)
        if (self.a * self.e - self.b * self.c) % d != 1:
            raise ValueError(f"determinant of {self.as_array().tolist()} is not 1 mod {d}")

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.e]])

    def apply(self, q: int, p: int) -> tuple[int, int]:
        return (self.a * q + self.b * p) % self.d, (self.c * q + self.e * p) % self.d

    def __matmul__(self, other: "SymplecticMat2") -> "SymplecticMat2":
        m = self.as_array() @ other.as_array()
        return SymplecticMat2(*m.ravel(), d=self.d)

    @classmethod
    def identity(cls, d: int) -> "SymplecticMat2":
        return cls(1, 0, 0, 1, d)

    @classmethod
    def from_array(cls, m, d: int) -> "SymplecticMat2":
        m = np.asarray(m)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1], d)


@dataclass(frozen=True)
class CliffordElement:
    symplectic: SymplecticMat2
    pauli: tuple[int, int] = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "pauli", canonical(self.d, *self.pauli))

    @property
    def d(self) -> int:
        return self.symplectic.d


@dataclass(frozen=True)
class ShadowSamples:
    """A batch of shadow samples in struct-of-arrays form.

    ``cliffords[i]`` and ``outcomes[i]`` make one sample (U_i, b_i).
    """

    d: int
    cliffords: tuple
    outcomes: np.ndarray

    def __len__(self):
        return len(self.outcomes)


# ---------------------------------------------------------------- SL(2, Z_d)

def sample_symplectic(d: int, seed: SeedLike) -> SymplecticMat2:
    """Uniform element of SL(2, Z_d)."""
    d = check_dimension(d)
    rng = as_generator(seed)
    k = int(rng.integers(1, d * d))          # first column (a, c) != (0, 0)
    a, c = divmod(k, d)
    t = int(rng.integers(d))                 # d completions of the determinant
    if a != 0:
        b = t
        e = ((1 + b * c) * pow(a, -1, d)) % d
    else:
        e = t
        b = (-pow(c, -1, d)) % d
    return SymplecticMat2(a, b, c, e, d)


def enumerate_symplectic(d: int) -> list[SymplecticMat2]:
    d = check_dimension(d)
    out = []
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for e in range(d):
                    if (a * e - b * c) % d == 1:
                        out.append(SymplecticMat2(a, b, c, e, d))
    return out


def sample_clifford(d: int, seed: SeedLike) -> CliffordElement:
    rng = as_generator(seed)
    C = sample_symplectic(d, rng)
    q, p = rng.integers(d, size=2)
    return CliffordElement(C, (int(q), int(p)))


def enumerate_cliffords(d: int) -> list[CliffordElement]:
    """All (symplectic, Pauli offset) pairs, d^3 (d^2 - 1) elements."""
    d = check_dimension(d)
    if d > MAX_ENUM_DIM:
        raise ValueError(f"enumeration is limited to d <= {MAX_ENUM_DIM}, got d={d}")
    return [CliffordElement(C, v) for C in enumerate_symplectic(d) for v in indices(d)]


# ---------------------------------------------------------------- synthesis

def phase_gate(d: int, c: int) -> np.ndarray:
    """diag(exp(-i pi c j (j+d) / d)), the unitary of [[1,0],[c,1]]."""
    j = np.arange(d)
    m = (c * j * (j + d)) % (2 * d)
    return np.diag(np.exp(-1j * np.pi * m / d))


def shear_gate(d: int, b: int) -> np.ndarray:
    """Unitary of [[1,b],[0,1]]."""
    W = fourier_matrix(d)
    return W @ phase_gate(d, -b) @ W.conj().T


def _fix_phase(U: np.ndarray) -> np.ndarray:
    flat = U.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-12))
    return U * (abs(flat[k]) / flat[k])


@lru_cache(maxsize=8192)
def _symplectic_unitary(C: SymplecticMat2) -> np.ndarray:
    d = C.d
    a, b, c, e = C.a, C.b, C.c, C.e
    if c == 0:
        # C = C' L_{-1} with C' = C L_1, whose lower-left entry e is nonzero
        Cp = C @ SymplecticMat2(1, 0, 1, 1, d)
        U = phase_gate(d, -1) @ _symplectic_unitary(Cp)
    else:
        # C = R_x L_c R_y  <->  U = U(R_y) U(L_c) U(R_x)
        cinv = pow(c, -1, d)
        x = ((a - 1) * cinv) % d
        y = ((e - 1) * cinv) % d
        U = shear_gate(d, y) @ phase_gate(d, c) @ shear_gate(d, x)
    U = _fix_phase(U)
    U.setflags(write=False)
    return U


def synthesize_clifford(elem: CliffordElement) -> np.ndarray:
    """Unitary U = D_pauli U_C with the first nonzero entry real positive."""
    U = _symplectic_unitary(elem.symplectic)
    if elem.pauli != (0, 0):
        U = _fix_phase(displacement(elem.d, *elem.pauli) @ U)
    return U


def symplectic_of(U: np.ndarray, tol: float = 1e-9) -> SymplecticMat2:
    """Read off C from U^dag D_v U ~ D_{Cv} (test oracle)."""
    d = U.shape[0]
    cols = []
    for v in [(1, 0), (0, 1)]:
        M = U.conj().T @ displacement(d, *v) @ U
        for q, p in indices(d):
            ov = np.trace(displacement(d, q, p).conj().T @ M) / d
            if abs(abs(ov) - 1) < tol:
                cols.append((q, p))
                break
        else:
            raise ValueError("U does not normalize the displacement group")
    return SymplecticMat2(cols[0][0], cols[1][0], cols[0][1], cols[1][1], d)


def conjugation_deviation(elem: CliffordElement) -> float:
    """Max over (q,p) of the phase-stripped |U^dag D_v U - D_{Cv}|."""
    d = elem.d
    U = synthesize_clifford(elem)
    dev = 0.0
    for q, p in indices(d):
        M = U.conj().T @ displacement(d, q, p) @ U
        T = displacement(d, *elem.symplectic.apply(q, p))
        ph = np.trace(T.conj().T @ M) / d
        dev = max(dev, abs(abs(ph) - 1), float(np.max(np.abs(M - ph * T))))
    return dev


# ---------------------------------------------------------------- channels

def measurement_channel(A: np.ndarray, d: int) -> np.ndarray:
    """M(A) = (tr(A) I + A) / (d + 1)."""
    A = _square(A, d)
    return (np.trace(A) * np.eye(d) + A) / (d + 1)


def inverse_channel(A: np.ndarray, d: int) -> np.ndarray:
    """M^{-1}(A) = (d + 1) A - tr(A) I."""
    A = _square(A, d)
    return (d + 1) * A - np.trace(A) * np.eye(d)


def _square(A, d):
    A = np.asarray(A, dtype=complex)
    if A.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got shape {A.shape}")
    return A


def _unitaries(cliffords: Sequence[CliffordElement]) -> np.ndarray:
    return np.stack([synthesize_clifford(c) for c in cliffords])


def measurement_channel_average(A: np.ndarray, d: int,
                                cliffords: Sequence[CliffordElement] | None = None) -> np.ndarray:
    """Group-average oracle: E_U sum_b <b|U A U^dag|b> U^dag|b><b|U."""
    A = _square(A, d)
    Us = _unitaries(cliffords if cliffords is not None else enumerate_cliffords(d))
    probs = np.einsum("ubj,jk,ubk->ub", Us, A, Us.conj())
    out = np.einsum("ub,ubj,ubk->jk", probs, Us.conj(), Us)
    return out / len(Us)


# ---------------------------------------------------------------- sampling

@lru_cache(maxsize=16)
def _symplectic_table(d: int):
    Cs = enumerate_symplectic(d)
    Us = np.stack([_symplectic_unitary(C) for C in Cs])
    return Cs, Us


def shadow_sample(rho, n: int, seed: SeedLike, forced: CliffordElement | None = None) -> ShadowSamples:
    """n single-copy Clifford-basis measurements of rho.

    ``forced`` fixes the Clifford of every sample (test hook).
    """
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    d = check_dimension(rho.d)
    rng = as_generator(seed)
    if forced is not None:
        U = synthesize_clifford(forced)
        p = np.clip(np.einsum("bj,jk,bk->b", U, rho.matrix, U.conj()).real, 0, None)
        outcomes = rng.choice(d, size=n, p=p / p.sum())
        return ShadowSamples(d, (forced,) * n, outcomes)
    Cs, Us = _symplectic_table(d)
    # outcome distribution for U_C; the Pauli offset only shifts it
    base = np.clip(np.einsum("ubj,jk,ubk->ub", Us, rho.matrix, Us.conj()).real, 0, None)
    ci = rng.integers(len(Cs), size=n)
    off = rng.integers(d, size=(n, 2))
    b0 = _inverse_cdf(base[ci], rng)
    # <b|D_v Y D_v^dag|b> = Y[b - q, b - q]
    outcomes = (b0 + off[:, 0]) % d
    cliffs = tuple(CliffordElement(Cs[i], (int(q), int(p))) for i, (q, p) in zip(ci, off))
    return ShadowSamples(d, cliffs, outcomes)


def _inverse_cdf(P: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(P, axis=1)
    u = rng.random(P.shape[0]) * cdf[:, -1]
    return np.minimum((cdf <= u[:, None]).sum(axis=1), P.shape[1] - 1)


def shadow_values(samples: ShadowSamples, O: np.ndarray) -> np.ndarray:
    """Per-sample estimator (d+1) <b|U O U^dag|b> - tr(O)."""
    d = samples.d
    O = _square(O, d)
    if len(samples) == 0:
        raise ValueError("no shadow samples")
    cache = {}
    vals = np.empty(len(samples), dtype=complex)
    trO = np.trace(O)
    for i, (cl, b) in enumerate(zip(samples.cliffords, samples.outcomes)):
        diag = cache.get(cl)
        if diag is None:
            U = synthesize_clifford(cl)
            diag = cache[cl] = np.einsum("bj,jk,bk->b", U, O, U.conj())
        vals[i] = (d + 1) * diag[b] - trO
    return vals


def shadow_values_many(samples: ShadowSamples, Os: Sequence[np.ndarray]) -> np.ndarray:
    """shadow_values for several observables at once; column k belongs to Os[k]."""
    d = samples.d
    if len(samples) == 0:
        raise ValueError("no shadow samples")
    Os = np.stack([_square(O, d) for O in Os])
    trO = np.einsum("kjj->k", Os)
    cache = {}
    vals = np.empty((len(samples), len(Os)), dtype=complex)
    for i, (cl, b) in enumerate(zip(samples.cliffords, samples.outcomes)):
        diag = cache.get(cl)
        if diag is None:
            U = synthesize_clifford(cl)
            diag = cache[cl] = np.einsum("bj,kjl,bl->bk", U, Os, U.conj())
        vals[i] = (d + 1) * diag[b] - trO
    return vals


def estimate_expectation(samples: ShadowSamples, O: np.ndarray) -> tuple[complex, float]:
    """Shadow estimate of Tr(O rho) and its standard error."""
    vals = shadow_values(samples, O)
    n = len(vals)
    se = float(np.sqrt(np.var(vals) / n)) if n > 1 else float("inf")
    return complex(vals.mean()), se


def transition_observable(elem: CliffordElement, i: int, j: int) -> np.ndarray:
    """O = U|j><i|U^dag, whose expectation is <i|U^dag rho U|j>."""
    U = synthesize_clifford(elem)
    d = elem.d
    return np.outer(U[:, j % d], U[:, i % d].conj())


def transition_estimate(samples: ShadowSamples, elem: CliffordElement, i: int, j: int) -> tuple[complex, float]:
    """Estimate <i|U^dag rho U|j> for i != j."""
    if i % samples.d == j % samples.d:
        raise ValueError("transition_estimate needs i != j: diagonal elements have "
                         "variance growing like d, outside the bounded-variance regime")
    return estimate_expectation(samples, transition_observable(elem, i, j))


def exact_shadow_moments(O: np.ndarray, rho, cliffords: Sequence[CliffordElement] | None = None):
    """Exhaustive mean and E|o|^2 of the shadow estimator over (Clifford, outcome)."""
    rho = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    d = rho.shape[0]
    O = _square(O, d)
    Us = _unitaries(cliffords if cliffords is not None else enumerate_cliffords(d))
    p = np.einsum("ubj,jk,ubk->ub", Us, rho, Us.conj()).real
    v = (d + 1) * np.einsum("ubj,jk,ubk->ub", Us, O, Us.conj()) - np.trace(O)
    n = len(Us)
    return complex((p * v).sum() / n), float((p * np.abs(v) ** 2).sum() / n)


def variance_oracle(O: np.ndarray, rho) -> float:
    """Closed-form variance of the single-sample Clifford shadow estimate of O."""
    rho = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    d = rho.shape[0]
    check_dimension(d)
    O = _square(O, d)
    O0 = O - np.trace(O) * np.eye(d) / d
    total = (d + 1) / d * np.vdot(O0, O0)
    acc = 0j
    for k in range(1, d - 1):
        for q, p in indices(d, include_identity=False):
            D1 = displacement(d, q, p)
            Dk = displacement(d, k * q, k * p)
            acc += (np.trace(D1.conj().T @ O0) * np.trace(Dk.conj().T @ O0.conj().T)
                    * np.trace(Dk @ D1 @ rho))
    total += (d + 1) / d**2 * acc - abs(np.trace(O0 @ rho)) ** 2
    if abs(total.imag) > 1e-9 * max(1.0, abs(total.real)):
        raise ArithmeticError(f"variance has imaginary part {total.imag:.3g}")
    return float(total.real)


# ---------------------------------------------------------------- twirls

_TWIRL_SUPPORT = {1: (2, 3, 5), 2: (2, 3, 5), 3: (2, 3)}


def _check_twirl(k: int, d: int):
    if k not in _TWIRL_SUPPORT or d not in _TWIRL_SUPPORT[k]:
        raise ValueError(f"unsupported twirl (k={k}, d={d}); supported: {_TWIRL_SUPPORT}")


def liouville_basis(d: int) -> np.ndarray:
    """Stack of D_{q,p}/sqrt(d) in index order q*d + p."""
    return np.stack([displacement(d, q, p) for q, p in indices(d)]) / np.sqrt(d)


def liouville_vector(A: np.ndarray) -> np.ndarray:
    """Coefficients of the normalized |A>> in the displacement basis."""
    d = A.shape[0]
    B = liouville_basis(d)
    v = np.einsum("aij,ij->a", B.conj(), A)
    return v / np.linalg.norm(v)


def superoperator(U: np.ndarray) -> np.ndarray:
    """S[alpha, beta] = <<D_alpha| U^dag D_beta U>> for the map A -> U^dag A U."""
    d = U.shape[0]
    B = liouville_basis(d)
    img = np.einsum("ji,bjk,kl->bil", U.conj(), B, U)       # U^dag B_beta U
    return np.einsum("aij,bij->ab", B.conj(), img)


def twirl_channel(k: int, d: int) -> np.ndarray:
    """Brute-force average of S_U^{(x)k} over enumerate_cliffords(d)."""
    _check_twirl(k, d)
    dim = d ** (2 * k)
    acc = np.zeros((dim, dim), dtype=complex)
    for cl in enumerate_cliffords(d):
        S = superoperator(synthesize_clifford(cl))
        T = S
        for _ in range(k - 1):
            T = np.kron(T, S)
        acc += T
    return acc / len(enumerate_cliffords(d))


def _kron_vec(*mats) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for m in mats:
        out = np.kron(out, liouville_vector(m))
    return out


def twirl_theory(k: int, d: int) -> np.ndarray:
    """Projector onto the Clifford-invariant subspace built from the closed-form states."""
    _check_twirl(k, d)
    I = np.eye(d, dtype=complex)
    nz = indices(d, include_identity=False)

    def D(q, p):
        return displacement(d, q, p)

    def dag(A):
        return A.conj().T

    vecs = [_kron_vec(*([I] * k))]
    if k == 2:
        vecs.append(sum(_kron_vec(D(q, p), dag(D(q, p))) for q, p in nz))
    elif k == 3:
        vecs.append(sum(_kron_vec(I, D(q, p), dag(D(q, p))) for q, p in nz))
        vecs.append(sum(_kron_vec(D(q, p), I, dag(D(q, p))) for q, p in nz))
        vecs.append(sum(_kron_vec(D(q, p), dag(D(q, p)), I) for q, p in nz))
        for m in range(1, d - 1):
            vecs.append(sum(_kron_vec(D(q, p), D(m * q, m * p), dag(D(q, p)) @ dag(D(m * q, m * p)))
                            for q, p in nz))
        for l in range(1, d):
            terms = [_kron_vec(D(q1, p1), D(q2, p2), dag(D(q1, p1)) @ dag(D(q2, p2)))
                     for q1, p1 in indices(d) for q2, p2 in indices(d)
                     if (p1 * q2 - q1 * p2) % d == l]
            vecs.append(sum(terms))
    dim = d ** (2 * k)
    P = np.zeros((dim, dim), dtype=complex)
    for v in vecs:
        v = v / np.linalg.norm(v)
        P += np.outer(v, v.conj())
    return P


# ---------------------------------------------------------------- fast path

@lru_cache(maxsize=4)
def _observable_diagonals(d: int) -> np.ndarray:
    """G[u, b, k] = <b|U_u E_k U_u^dag|b> for every symplectic unitary U_u and
    every displacement observable E_k, k over nonzero indices."""
    from .core import displacement_observable
    _, Us = _symplectic_table(d)
    Es = np.stack([displacement_observable(d, q, p) for q, p in indices(d, include_identity=False)])
    # <b|U E U^dag|b> = sum_{jk} U[b,j] conj(U[b,k]) E[j,k]
    R = np.einsum("ubj,ubk->ubjk", Us, Us.conj()).reshape(len(Us), d, d * d)
    G = (R @ Es.reshape(len(Es), d * d).T).real
    G.setflags(write=False)
    return G


def shadow_observable_means(rho, n: int, seed: SeedLike) -> np.ndarray:
    """Shadow estimates of Tr(E_{q,p} rho) for every nonzero (q,p) from n samples.

    Equivalent to :func:`shadow_sample` followed by :func:`estimate_expectation`
    for each E_{q,p}; the Pauli offset cancels in (d+1)<b|U E U^dag|b>, so only
    the symplectic part and the unshifted outcome are drawn.
    """
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    d = rho.d
    rng = as_generator(seed)
    G = _observable_diagonals(d)
    _, Us = _symplectic_table(d)
    if n == 0:
        return np.zeros(G.shape[2])
    base = np.clip(np.einsum("ubj,jk,ubk->ub", Us, rho.matrix, Us.conj()).real, 0, None)
    ci = rng.integers(len(Us), size=n)
    b0 = _inverse_cdf(base[ci], rng)
    return (d + 1) * G[ci, b0].mean(axis=0)
