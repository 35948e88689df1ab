"""Exact diagonalization of the XY chain in the full 2^N spin space.

Ground truth for every correlator in :mod:`pfloc.quasifree`. Nothing here
uses Wick's theorem or the single-particle two-point kernel. Memory is about
``16 * 4**N`` bytes per operator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import PreconditionError, SizeError, StructuralError
from .skewlin import skew_canonical
from .xychain import SIGMA1, SIGMA2, SIGMA3, ChainParams, StateSpec, build_h, mode_index

MAX_STATIC = 12
MAX_DYNAMIC = 10
MATCH_TOL = 1e-8
GAP_TOL = 1e-6

_PAULI = {0: np.eye(2, dtype=complex), 1: SIGMA1, 2: SIGMA2, 3: SIGMA3}


def _cap(N: int, cap: int = MAX_STATIC) -> None:
    if N > cap:
        raise SizeError(f"exact diagonalization capped at N = {cap}, got {N}")


def pauli(w: int, site: int, N: int) -> np.ndarray:
    """``sigma^w`` acting on the ``site``-th tensor factor (1-based)."""
    _cap(N)
    if not 1 <= site <= N:
        raise StructuralError(f"site {site} outside 1..{N}")
    return reduce(np.kron, [_PAULI[w] if j == site else _PAULI[0] for j in range(1, N + 1)])


def build_spin_hamiltonian(p: ChainParams) -> np.ndarray:
    """Dense ``S_N`` read directly off the spin Hamiltonian."""
    N = p.N
    _cap(N)
    s = np.zeros((2**N, 2**N), dtype=complex)
    for x in range(1, N):
        mu, g = p.mu[x - 1], p.gamma[x - 1]
        s -= mu * ((1 + g) * pauli(1, x, N) @ pauli(1, x + 1, N) + (1 - g) * pauli(2, x, N) @ pauli(2, x + 1, N))
    for x in range(1, N + 1):
        s -= p.nu[x - 1] * pauli(3, x, N)
    return s


def jw_majorana(site: int, flavor: str, N: int) -> np.ndarray:
    """Jordan-Wigner Majorana: ``sigma3 ... sigma3 sigma1`` (``+``) or ``-sigma3 ... sigma3 sigma2`` (``-``)."""
    _cap(N)
    if not 1 <= site <= N:
        raise StructuralError(f"site {site} outside 1..{N}")
    ops = [_PAULI[3]] * (site - 1) + [SIGMA1 if flavor == "+" else -SIGMA2] + [_PAULI[0]] * (N - site)
    return reduce(np.kron, ops)


def majorana_vector(N: int) -> list:
    """``[a_1^+, a_1^-, ..., a_N^+, a_N^-]`` in the site-major ordering."""
    return [jw_majorana(s, f, N) for s in range(1, N + 1) for f in ("+", "-")]


def quadratic_form(h: np.ndarray, majoranas: list) -> np.ndarray:
    """``(1/2) sum_ij h_ij a_i a_j``."""
    dim = majoranas[0].shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    for i, ai in enumerate(majoranas):
        for j, aj in enumerate(majoranas):
            if h[i, j] != 0:
                out += 0.5 * h[i, j] * (ai @ aj)
    return out


def parity_operator(p: ChainParams) -> np.ndarray:
    """``P_N = prod_j i b_j^+ b_j^-`` with ``b = O a`` built from the Bogoliubov rotation."""
    N = p.N
    _cap(N)
    k = (-1j * build_h(p).entries).real
    o = skew_canonical(k).O
    a = majorana_vector(N)
    b = [sum(o[r, c] * a[c] for c in range(2 * N)) for r in range(2 * N)]
    return reduce(np.matmul, [1j * b[2 * j] @ b[2 * j + 1] for j in range(N)])


def free_energies(p: ChainParams) -> np.ndarray:
    """Ascending non-negative mode energies from the spectrum of ``H_N``."""
    vals = np.linalg.eigvalsh(build_h(p).entries)
    return np.sort(np.abs(vals))[::2]


@dataclass(eq=False)
class ExactState:
    """Eigendecomposition of ``S_N`` with the density matrix expressed in that eigenbasis.

    For the twisted functional ``rho`` is ``P_N e^{-beta S} / tr(P_N e^{-beta S})``,
    which is Hermitian but not positive.
    """

    params: ChainParams
    state: StateSpec
    energies: np.ndarray
    vectors: np.ndarray
    rho: np.ndarray

    def _to_eig(self, op: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ op @ self.vectors

    def expectation(self, obs: np.ndarray) -> complex:
        return complex(np.sum(self.rho.T * self._to_eig(obs)))

    def heisenberg(self, op: np.ndarray, t: float) -> np.ndarray:
        """``e^{itS} op e^{-itS}``."""
        v = self.vectors
        ph = np.exp(1j * t * self.energies)
        return (v * ph) @ self._to_eig(op) @ (v * ph).conj().T

    def correlation(self, a: np.ndarray, b: np.ndarray, t: float) -> complex:
        """``tr(rho e^{itS} a e^{-itS} b)`` evaluated in the eigenbasis."""
        ph = np.exp(1j * t * self.energies)
        at = ph[:, None] * self._to_eig(a) * ph.conj()[None, :]
        return complex(np.sum(self.rho.T * (at @ self._to_eig(b))))


def _eigenstate_index(energies: np.ndarray, lam: np.ndarray, alpha) -> int:
    target = 2 * float(np.dot(alpha, lam)) - float(lam.sum())
    all_e = np.array([2 * np.dot(a, lam) - lam.sum() for a in itertools.product((0, 1), repeat=len(lam))])
    others = np.abs(all_e - target)
    others = others[others > 0]
    own = int(np.argmin(np.abs(energies - target)))
    if abs(energies[own] - target) > MATCH_TOL * max(1.0, abs(target)):
        raise PreconditionError(f"no many-body level within {MATCH_TOL} of E_alpha = {target}")
    gap = min(others.min() if others.size else np.inf, _neighbour_gap(energies, own))
    if gap < GAP_TOL:
        raise PreconditionError(f"E_alpha = {target} is not separated from other levels (gap {gap:.3e})", gap=gap)
    return own


def _neighbour_gap(energies: np.ndarray, i: int) -> float:
    d = np.abs(energies - energies[i])
    d[i] = np.inf
    return float(d.min()) if len(d) > 1 else np.inf


def exact_state(p: ChainParams, s: StateSpec) -> ExactState:
    N = p.N
    _cap(N)
    e, v = np.linalg.eigh(build_spin_hamiltonian(p))
    if s.kind == "thermal":
        w = np.exp(-s.beta * (e - e.min()))
        rho = np.diag(w / w.sum()).astype(complex)
    elif s.kind == "twisted_thermal":
        par = v.conj().T @ parity_operator(p) @ v
        rho = par * np.exp(-s.beta * (e - e.min()))[None, :]
        rho /= np.trace(rho)
    else:
        lam = free_energies(p)
        alpha = np.zeros(N, dtype=int) if s.kind == "ground" else np.asarray(s.alpha)
        rho = np.zeros((len(e), len(e)), dtype=complex)
        i = _eigenstate_index(e, lam, alpha)
        rho[i, i] = 1.0
    return ExactState(p, s, e, v, rho)


def exact_expectation(p: ChainParams, s: StateSpec, obs: np.ndarray) -> complex:
    """``tr(rho obs)``."""
    return exact_state(p, s).expectation(obs)


def exact_spin_correlation(p: ChainParams, s: StateSpec, xi: int, eta: int, t: float, w: int, w2: int, _state=None) -> complex:
    """Truncated ``<tau_t(sigma^w_xi) sigma^w2_eta> - <sigma^w_xi><sigma^w2_eta>`` by brute force."""
    _cap(p.N, MAX_DYNAMIC)
    st = _state if _state is not None else exact_state(p, s)
    a, b = pauli(w, xi, p.N), pauli(w2, eta, p.N)
    return st.correlation(a, b, t) - st.expectation(a) * st.expectation(b)


def exact_majorana_product(st: ExactState, events) -> complex:
    """``<a_{x1}(t1) ... a_{xm}(tm)>`` with ``a(t) = e^{itS} a e^{-itS}``."""
    N = st.params.N
    ops = [st.heisenberg(jw_majorana(e.site, e.flavor, N), e.time) for e in events]
    return st.expectation(reduce(np.matmul, ops))


def exact_two_point_matrix(st: ExactState, t: float = 0.0) -> np.ndarray:
    """``<a_x(t) a_y(0)>`` over all mode pairs, in the :func:`mode_index` ordering."""
    N = st.params.N
    a = majorana_vector(N)
    at = [st.heisenberg(x, t) for x in a]
    out = np.empty((2 * N, 2 * N), dtype=complex)
    for i in range(2 * N):
        for j in range(2 * N):
            out[i, j] = st.expectation(at[i] @ a[j])
    return out


__all__ = [
    "build_spin_hamiltonian",
    "jw_majorana",
    "pauli",
    "exact_state",
    "exact_expectation",
    "exact_spin_correlation",
    "exact_majorana_product",
    "exact_two_point_matrix",
    "parity_operator",
    "quadratic_form",
    "mode_index",
]
