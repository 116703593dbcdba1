"""Clock, shift and displacement operators in prime dimension d.

Conventions
-----------
``X|j> = |j+1>``, ``Z|j> = w^j |j>`` with ``w = exp(2 pi i / d)`` and
``D_{q,p} = exp(i pi q p / d) X^q Z^p``.

The half-angle phase is not periodic in q or p: ``D_{q+d,p} = (-1)^p D_{q,p}``
and ``D_{q,p+d} = (-1)^q D_{q,p}``. :func:`displacement` therefore evaluates
the formula on the integers it is given, which is what makes identities such
as ``D^dag_{q,p} = D_{-q,-p}`` hold literally, including at d = 2. Tables of
amplitudes are keyed by the canonical representative in ``[0, d)`` and
:meth:`AmplitudeTable.get` applies the sign rule for other representatives.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping, Sequence

import numpy as np

from .rng import SeedLike, as_generator

MAX_DIM = 101
MAX_TENSOR_DIM = 4096
CHI = (1 + 1j) / 2

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-9


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def check_dimension(d, cap: int = MAX_DIM) -> int:
    """Validate a qudit dimension and return it as a plain int."""
    if isinstance(d, bool) or int(d) != d:
        raise ValueError(f"d must be an integer, got {d!r}")
    d = int(d)
    if not is_prime(d):
        raise ValueError(f"d must be prime, got d={d}")
    if d > cap:
        raise ValueError(f"d={d} exceeds the dimension cap {cap}")
    return d


def canonical(d: int, q: int, p: int) -> tuple[int, int]:
    return int(q) % d, int(p) % d


def indices(d: int, include_identity: bool = True) -> list[tuple[int, int]]:
    """All canonical displacement indices in row-major (q, p) order."""
    out = [(q, p) for q in range(d) for p in range(d)]
    return out if include_identity else out[1:]


def representative_sign(d: int, q: int, p: int) -> int:
    """Sign s with D_{q,p} = s * D_{q mod d, p mod d} (integer q, p)."""
    m, q0 = divmod(int(q), d)
    n, p0 = divmod(int(p), d)
    # D_{q0+md, p0+nd} = (-1)^{m p0 + n q0 + m n d} D_{q0,p0}
    return -1 if (m * p0 + n * q0 + m * n * d) % 2 else 1


# ---------------------------------------------------------------- operators

def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def clock_shift(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the shift X and clock Z as dense complex matrices."""
    d = check_dimension(d)
    X = np.zeros((d, d), dtype=complex)
    X[(np.arange(d) + 1) % d, np.arange(d)] = 1.0
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return _frozen(X), _frozen(Z)


@lru_cache(maxsize=65536)
def _displacement(d: int, q: int, p: int) -> np.ndarray:
    j = np.arange(d)
    # phase exp(i pi (q p + 2 j p) / d), exponent reduced mod 2d in integers
    m = (q * p + 2 * j * p) % (2 * d)
    D = np.zeros((d, d), dtype=complex)
    D[(j + q) % d, j] = np.exp(1j * np.pi * m / d)
    return _frozen(D)


def displacement(d: int, q: int, p: int) -> np.ndarray:
    """D_{q,p} = exp(i pi q p / d) X^q Z^p for integer q, p.

    The returned array is shared and read-only; copy before mutating.
    """
    d = check_dimension(d)
    return _displacement(d, int(q), int(p))


def displacement_observable(d: int, q: int, p: int) -> np.ndarray:
    """Hermitian E_{q,p} = chi D_{q,p} + chi^* D_{-q,-p}, chi = (1+i)/2."""
    return CHI * displacement(d, q, p) + np.conj(CHI) * displacement(d, -q, -p)


def tensor_displacement(d: int, qvec: Sequence[int], pvec: Sequence[int],
                        cap: int = MAX_TENSOR_DIM) -> np.ndarray:
    """Kronecker product D_{q1,p1} x ... x D_{qn,pn}."""
    d = check_dimension(d)
    if len(qvec) != len(pvec) or len(qvec) == 0:
        raise ValueError("qvec and pvec must be non-empty and of equal length")
    if d ** len(qvec) > cap:
        raise ValueError(f"tensor dimension {d}^{len(qvec)} exceeds cap {cap}")
    out = np.ones((1, 1), dtype=complex)
    for q, p in zip(qvec, pvec):
        out = np.kron(out, displacement(d, q, p))
    return out


# ---------------------------------------------------------------- states

class DensityMatrix:
    """Validated, immutable density matrix.

    Hermitian and unit trace within 1e-10, minimum eigenvalue >= -1e-9.
    """

    __slots__ = ("_m", "d", "min_eigenvalue")

    def __init__(self, matrix, validate: bool = True):
        m = np.array(matrix, dtype=complex, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        herm_err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        m = (m + m.conj().T) / 2
        evals = np.linalg.eigvalsh(m)
        if validate:
            if herm_err > HERMITIAN_TOL:
                raise ValueError(f"matrix is not Hermitian (deviation {herm_err:.3g})")
            tr = np.trace(m).real
            if abs(tr - 1) > TRACE_TOL:
                raise ValueError(f"trace must be 1, got {tr!r}")
            if evals[0] < PSD_TOL:
                raise ValueError(f"matrix is not PSD (min eigenvalue {evals[0]:.3g})")
        self._m = _frozen(m)
        self.d = m.shape[0]
        self.min_eigenvalue = float(evals[0])

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    def conj(self) -> "DensityMatrix":
        """Entrywise complex conjugate in the computational basis."""
        return DensityMatrix(self._m.conj(), validate=False)

    def __array__(self, dtype=None, copy=None):
        return self._m if dtype is None else self._m.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix(d={self.d}, min_eigenvalue={self.min_eigenvalue:.3g})"


def as_density(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def project_psd(matrix: np.ndarray) -> DensityMatrix:
    """Clip negative eigenvalues of a Hermitian matrix and renormalize."""
    m = np.asarray(matrix, dtype=complex)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValueError("matrix has no positive part to project onto")
    return DensityMatrix((v * (w / w.sum())) @ v.conj().T)


def pure_state(psi) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()))


def random_pure_state(d: int, seed: SeedLike) -> DensityMatrix:
    """Haar-random pure state."""
    rng = as_generator(seed)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    return pure_state(psi)


def random_density_matrix(d: int, seed: SeedLike, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from a d x rank Ginibre matrix G, rho = G G^dag / tr."""
    rng = as_generator(seed)
    r = d if rank is None else rank
    G = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    m = G @ G.conj().T
    return DensityMatrix(m / np.trace(m).real)


def make_test_state(d: int, kind: str, seed: SeedLike = 0, *, idx=None,
                    r: int = 1, eps: float | None = None) -> DensityMatrix:
    """Named test states: ``maximally_mixed``, ``haar_pure`` or ``spiked``.

    The spiked state is (1/d)(I + r eps E_{q,p}) for ``idx = (q, p)``.
    """
    d = check_dimension(d)
    if kind == "maximally_mixed":
        return DensityMatrix(np.eye(d) / d)
    if kind == "haar_pure":
        return random_pure_state(d, seed)
    if kind == "spiked":
        if idx is None:
            raise ValueError("spiked state needs idx=(q, p)")
        q, p = canonical(d, *idx)
        if (q, p) == (0, 0):
            raise ValueError("spiked state needs idx != (0, 0)")
        if r not in (1, -1):
            raise ValueError(f"r must be +1 or -1, got {r}")
        if eps is None or not 0 < eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        E = displacement_observable(d, q, p)
        return DensityMatrix((np.eye(d) + r * eps * E) / d)
    raise ValueError(f"unknown state kind {kind!r}")


# ---------------------------------------------------------------- amplitudes

@dataclass(frozen=True, eq=False)
class AmplitudeTable:
    """Displacement amplitudes y_{q,p} = Tr(D_{q,p} rho), canonical keys.

    ``values[q, p]`` holds y for the canonical index. Use :meth:`get` for
    arbitrary integer representatives.
    """

    d: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.d, self.d):
            raise ValueError(f"amplitude table for d={self.d} needs shape "
                             f"({self.d}, {self.d}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("amplitude table is incomplete (non-finite entries)")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_mapping(cls, d: int, mapping: Mapping[tuple[int, int], complex]) -> "AmplitudeTable":
        v = np.full((d, d), np.nan, dtype=complex)
        for (q, p), y in mapping.items():
            qq, pp = canonical(d, q, p)
            v[qq, pp] = y * representative_sign(d, q, p)
        missing = [(q, p) for q, p in indices(d) if np.isnan(v[q, p])]
        if missing:
            raise ValueError(f"amplitude table is incomplete, missing {missing[:5]}")
        return cls(d, v)

    def get(self, q: int, p: int) -> complex:
        qq, pp = canonical(self.d, q, p)
        return complex(self.values[qq, pp]) * representative_sign(self.d, q, p)

    def __getitem__(self, idx) -> complex:
        return self.get(*idx)

    def items(self) -> Iterator[tuple[tuple[int, int], complex]]:
        for q, p in indices(self.d):
            yield (q, p), complex(self.values[q, p])


def amplitudes(rho) -> AmplitudeTable:
    """Exact y_{q,p} for all canonical indices, O(d^3)."""
    m = np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else rho, dtype=complex)
    d = m.shape[0]
    check_dimension(d)
    j = np.arange(d)
    # y_{q,p} = exp(i pi q p / d) sum_j w^{j p} rho[j, j+q]
    diag = m[j[None, :], (j[None, :] + j[:, None]) % d]            # [q, j]
    F = np.exp(2j * np.pi * np.outer(j, j) / d)                   # [j, p]
    half = np.exp(1j * np.pi * (np.outer(j, j) % (2 * d)) / d)    # [q, p]
    return AmplitudeTable(d, half * (diag @ F))


def bloch_reconstruct(table: AmplitudeTable) -> tuple[np.ndarray, float]:
    """Invert rho = (1/d) sum y_{q,p} D^dag_{q,p}.

    Returns the raw (possibly non-PSD) matrix and its minimum eigenvalue.
    """
    d = table.d
    m = np.zeros((d, d), dtype=complex)
    for (q, p), y in table.items():
        if y != 0:
            m += y * displacement(d, q, p).conj().T
    m /= d
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return m, float(w[0])
