"""Dense complex linear algebra on Hermitian and skew-symmetric matrices.

Two independent pfaffian algorithms live here: an O(n^3) skew elimination
used everywhere, and an exact first-row expansion kept as a reference for
small matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import DomainError, SizeError, StructuralError

HERMITIAN_RTOL = 1e-12
PIVOT_RTOL = 1e-13
LAPLACE_MAX_DIM = 12


def _as_square(a, name: str) -> np.ndarray:
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise StructuralError(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Dense complex matrix checked to be Hermitian on construction."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_square(self.entries, "HermitianMatrix").astype(complex)
        scale = np.linalg.norm(m, 2) if m.size else 0.0
        err = np.abs(m - m.conj().T).max() if m.size else 0.0
        if err > HERMITIAN_RTOL * max(scale, 1e-300):
            raise StructuralError(f"matrix is not Hermitian (deviation {err:.3e}, norm {scale:.3e})")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class SkewMatrix:
    """Skew-symmetric matrix of even dimension.

    Only the strict upper triangle of the input is read; the lower triangle
    is overwritten with its negative transpose so skew-symmetry is exact.
    Odd dimensions are rejected even though the pfaffian of an odd skew
    matrix is conventionally zero.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = _as_square(self.entries, "SkewMatrix")
        if m.shape[0] % 2:
            raise StructuralError(
                f"SkewMatrix needs even dimension, got {m.shape[0]} "
                "(the pfaffian of an odd skew matrix is 0 by convention; odd input is rejected)"
            )
        upper = np.triu(m.astype(complex), 1)
        object.__setattr__(self, "entries", upper - upper.T)

    @classmethod
    def from_array(cls, a, rtol: float = 1e-12) -> "SkewMatrix":
        """Validate that ``a`` is skew within ``rtol`` (relative to its largest entry)."""
        m = _as_square(a, "SkewMatrix")
        scale = np.abs(m).max() if m.size else 0.0
        err = np.abs(m + m.T).max() if m.size else 0.0
        if err > rtol * max(scale, 1e-300):
            raise StructuralError(f"matrix is not skew-symmetric (deviation {err:.3e})")
        return cls(m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def residual(self, h) -> float:
        """Largest ``|H v - lambda v|`` over all eigenpairs."""
        h = np.asarray(h.entries if isinstance(h, HermitianMatrix) else h)
        r = h @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return float(np.linalg.norm(r, axis=0).max()) if r.size else 0.0


@dataclass(frozen=True, eq=False)
class SkewCanonical:
    """Real orthogonal ``O`` with ``O K O^T`` block diagonal, blocks ``[[0, l], [-l, 0]]``."""

    O: np.ndarray
    lambdas: np.ndarray
    detO: int

    def block_form(self) -> np.ndarray:
        n = len(self.lambdas)
        lam = np.zeros((2 * n, 2 * n))
        idx = np.arange(n)
        lam[2 * idx, 2 * idx + 1] = self.lambdas
        lam[2 * idx + 1, 2 * idx] = -self.lambdas
        return lam


def hermitian_eig(h) -> SpectralData:
    """Eigendecomposition with ascending eigenvalues and orthonormal eigenvector columns."""
    if not isinstance(h, HermitianMatrix):
        h = HermitianMatrix(h)
    vals, vecs = np.linalg.eigh(h.entries)
    return SpectralData(vals, vecs)


def matrix_function(spec: SpectralData, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate ``sum_j f(lambda_j) v_j v_j^*``.

    ``f`` is called once on the whole eigenvalue array and must act
    elementwise. Raises DomainError if it returns a non-finite value.
    """
    lam = spec.eigenvalues
    vals = np.asarray(f(lam), dtype=complex)
    if vals.shape != lam.shape:
        vals = np.broadcast_to(vals, lam.shape).astype(complex)
    bad = ~np.isfinite(vals)
    if bad.any():
        where = float(lam[np.argmax(bad)])
        raise DomainError(f"function is not finite at eigenvalue {where!r}", value=where)
    v = spec.eigenvectors
    return (v * vals) @ v.conj().T


def spectral_norm(m) -> float:
    """Largest singular value."""
    a = np.asarray(m)
    if not np.all(np.isfinite(a)):
        raise DomainError("spectral norm of a matrix with non-finite entries")
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def _coerce_skew(m) -> np.ndarray:
    if isinstance(m, SkewMatrix):
        return m.entries.copy()
    return SkewMatrix.from_array(m).entries.copy()


def pfaffian_elimination(m) -> complex:
    """Pfaffian by skew Gaussian elimination with partial pivoting.

    Each step pivots the largest entry of the current column into the
    super-diagonal position by a simultaneous row/column swap (flipping the
    sign), records the pivot, and eliminates the pair with a rank-2 skew
    update. A pivot below ``1e-13`` times the largest input entry means the
    matrix is singular and the pfaffian is 0.
    """
    a = _coerce_skew(m)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    threshold = PIVOT_RTOL * np.abs(a).max()
    pf = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        col = np.abs(a[k + 1 :, k])
        kp = k + 1 + int(col.argmax())
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        piv = a[k, k + 1]
        if abs(piv) <= threshold:
            return 0.0 + 0.0j
        pf *= piv
        if k + 2 < n:
            tau = a[k, k + 2 :] / piv
            u = a[k + 2 :, k + 1]
            a[k + 2 :, k + 2 :] += np.outer(tau, u) - np.outer(u, tau)
    return complex(pf)


def pfaffian_laplace(m) -> complex:
    """Pfaffian by recursive expansion along the first row (reference, dim <= 12)."""
    a = _coerce_skew(m)
    if a.shape[0] > LAPLACE_MAX_DIM:
        raise SizeError(f"pfaffian_laplace is capped at dim {LAPLACE_MAX_DIM}, got {a.shape[0]}")

    def expand(idx: tuple) -> complex:
        if not idx:
            return 1.0 + 0.0j
        first, rest = idx[0], idx[1:]
        total = 0.0 + 0.0j
        for pos, j in enumerate(rest):
            entry = a[first, j]
            if entry == 0:
                continue
            sign = -1.0 if pos % 2 else 1.0
            total += sign * entry * expand(rest[:pos] + rest[pos + 1 :])
        return total

    return complex(expand(tuple(range(a.shape[0]))))


def _sign_det_lu(o: np.ndarray) -> int:
    lu, piv = scipy.linalg.lu_factor(o)
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    neg = int(np.count_nonzero(np.diag(lu) < 0))
    return -1 if (swaps + neg) % 2 else 1


def _phase_fix(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def skew_canonical(k, zero_tol: float = 1e-10) -> SkewCanonical:
    """Real orthogonal reduction of a real skew matrix to 2x2 canonical blocks.

    Uses the spectral decomposition of the Hermitian matrix ``iK``: an
    eigenvector ``v`` for ``+lambda`` gives the block rows ``sqrt2*Im v`` and
    ``sqrt2*Re v``. Eigenvalues with ``|lambda| <= zero_tol * max(1, ||K||)``
    form the kernel, for which any real orthonormal basis is used.
    The ``lambdas`` are returned ascending, zero modes first.
    """
    kk = _as_square(k, "K")
    if np.iscomplexobj(kk):
        if np.abs(kk.imag).max(initial=0.0) > 0:
            raise StructuralError("skew_canonical needs a real matrix")
        kk = kk.real
    kk = np.asarray(kk, dtype=float)
    n2 = kk.shape[0]
    if n2 % 2:
        raise StructuralError("skew_canonical needs even dimension")
    if np.abs(kk + kk.T).max(initial=0.0) > 1e-12 * max(np.abs(kk).max(initial=0.0), 1e-300):
        raise StructuralError("K is not skew-symmetric")
    n = n2 // 2
    vals, vecs = np.linalg.eigh(1j * kk)
    tol = zero_tol * max(1.0, float(np.abs(vals).max(initial=0.0)))
    zero = np.abs(vals) <= tol
    pos = np.flatnonzero((vals > tol))
    n_zero = int(zero.sum())
    if n_zero % 2 or len(pos) != n - n_zero // 2:
        raise StructuralError("could not pair the spectrum of iK into +-lambda")

    rows = []
    lambdas = []
    if n_zero:
        v0 = vecs[:, zero]
        stacked = np.hstack([v0.real, v0.imag])
        u, s, _ = np.linalg.svd(stacked, full_matrices=False)
        basis = u[:, :n_zero]
        for j in range(n_zero // 2):
            rows.extend([basis[:, 2 * j], basis[:, 2 * j + 1]])
            lambdas.append(0.0)
    for j in pos:
        v = _phase_fix(vecs[:, j])
        rows.extend([np.sqrt(2.0) * v.imag, np.sqrt(2.0) * v.real])
        lambdas.append(float(vals[j]))
    o = np.array(rows) if rows else np.zeros((0, 0))
    return SkewCanonical(O=o, lambdas=np.array(lambdas), detO=_sign_det_lu(o) if n else 1)
