"""Majorana two-point kernels, Wick pfaffians and spin correlators of the XY chain.

Two-point values are ``<a_x(t) a_y(s)> = [e^{-2i(t-s)H} f(H)]_{x,y}``; any
multipoint Majorana expectation is the pfaffian of the upper-triangular array
of these values. Spin correlators in the 1-2 plane go through the
Jordan-Wigner strings, either directly or via the parity-twisted functional.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import PreconditionError, StructuralError
from .skewlin import SkewCanonical, SkewMatrix, SpectralData, hermitian_eig, pfaffian_elimination, skew_canonical
from .xychain import ChainParams, StateSpec, build_h, mode_index, state_function

REAL_TOL = 1e-9
PARITY_TOL = 1e-12


class MajoranaEvent(NamedTuple):
    site: int
    flavor: str
    time: float = 0.0

    @property
    def index(self) -> int:
        return mode_index(self.site, self.flavor)


@dataclass(frozen=True)
class MajoranaConfig:
    """Ordered product of Majorana operators ``a_{x1}(t1) ... a_{xm}(tm)``.

    With ``strict=True`` the (site, flavor) tuples at each shared time must be
    distinct. Jordan-Wigner strings at ``t = 0`` legitimately repeat operators,
    so the correlator routes build their configurations with ``strict=False``.
    """

    events: tuple
    strict: bool = True

    def __post_init__(self):
        evs = tuple(e if isinstance(e, MajoranaEvent) else MajoranaEvent(*e) for e in self.events)
        for e in evs:
            if e.site < 1 or e.flavor not in ("+", "-"):
                raise StructuralError(f"invalid Majorana event {e}")
        if self.strict:
            seen = set()
            for e in evs:
                key = (e.site, e.flavor, float(e.time))
                if key in seen:
                    raise StructuralError(f"repeated Majorana {e.site}{e.flavor} at time {e.time}")
                seen.add(key)
        object.__setattr__(self, "events", evs)

    def __len__(self):
        return len(self.events)

    @property
    def sites(self) -> np.ndarray:
        return np.array([e.site for e in self.events], dtype=int)


@dataclass(eq=False)
class QuasiFreeKernel:
    params: ChainParams
    state: StateSpec
    spectral: SpectralData
    canonical: SkewCanonical
    f_values: np.ndarray
    parity_trace: float
    norm_bound: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def lambdas(self) -> np.ndarray:
        return self.canonical.lambdas

    def gamma(self, tau: float) -> np.ndarray:
        """Two-point matrix ``Gamma(t, s)`` for ``t - s = tau``."""
        tau = float(tau)
        g = self._cache.get(tau)
        if g is None:
            v = self.spectral.eigenvectors
            phase = np.exp(-2j * tau * self.spectral.eigenvalues) * self.f_values
            g = (v * phase) @ v.conj().T
            self._cache[tau] = g
        return g

    def two_point(self, a: MajoranaEvent, b: MajoranaEvent) -> complex:
        return complex(self.gamma(a.time - b.time)[a.index, b.index])

    def twisted(self) -> "QuasiFreeKernel":
        """Kernel of ``tr(. P rho) / tr(P rho)``.

        Eigenstates are parity eigenvectors, so twisting leaves them unchanged;
        thermal states become the ``twisted_thermal`` functional.
        """
        if self.state.kind == "thermal":
            return make_kernel(self.params, StateSpec.twisted_thermal(self.state.beta), _reuse=self)
        if self.state.kind in ("eigenstate", "ground"):
            return self
        raise StructuralError("the twisted functional is already twisted")


def parity_trace(s: StateSpec, lambdas) -> float:
    """``omega(P_N)`` for the functional ``omega`` of state ``s``."""
    lam = np.asarray(lambdas, dtype=float)
    if s.kind == "thermal":
        return float(np.prod(-np.tanh(s.beta * lam)))
    if s.kind == "ground":
        return float(np.prod(-np.sign(lam)))
    if s.kind == "eigenstate":
        return float((-1) ** ((sum(s.alpha) + len(lam)) % 2))
    return float(1.0 / np.prod(-np.tanh(s.beta * lam)))


def make_kernel(p: ChainParams, s: StateSpec, _reuse: QuasiFreeKernel | None = None) -> QuasiFreeKernel:
    """Diagonalize ``H_N`` and attach the state function and parity data."""
    if _reuse is not None:
        spectral, canonical = _reuse.spectral, _reuse.canonical
    else:
        h = build_h(p)
        spectral = hermitian_eig(h)
        canonical = skew_canonical((-1j * h.entries).real)
    f = state_function(s, canonical.lambdas)
    f_values = np.asarray(f(spectral.eigenvalues), dtype=float)
    if not np.all(np.isfinite(f_values)):
        raise PreconditionError("state function is singular on the spectrum of H_N")
    pt = parity_trace(s, canonical.lambdas)
    norm_bound = 1.0
    if s.kind == "twisted_thermal":
        norm_bound = abs(pt)
    return QuasiFreeKernel(p, s, spectral, canonical, f_values, pt, norm_bound)


def wick_matrix(k: QuasiFreeKernel, config) -> np.ndarray:
    """Skew matrix whose upper triangle holds ``omega(a_j a_k)``, ``j < k``."""
    events = config.events if isinstance(config, MajoranaConfig) else tuple(config)
    m = len(events)
    idx = np.array([e.index for e in events], dtype=int)
    times = np.array([float(e.time) for e in events])
    if m and idx.max() >= 2 * k.N:
        raise StructuralError(f"site out of range for chain of length {k.N}")
    full = np.empty((m, m), dtype=complex)
    uniq = np.unique(times)
    groups = [np.flatnonzero(times == t) for t in uniq]
    for ti, gi in zip(uniq, groups):
        for tj, gj in zip(uniq, groups):
            g = k.gamma(ti - tj)
            full[np.ix_(gi, gj)] = g[np.ix_(idx[gi], idx[gj])]
    upper = np.triu(full, 1)
    return upper - upper.T


def wick_pfaffian(k: QuasiFreeKernel, config) -> complex:
    """``omega`` of a Majorana product; exactly 0 for an odd number of factors."""
    events = config.events if isinstance(config, MajoranaConfig) else tuple(config)
    if len(events) % 2:
        return 0j
    if not events:
        return 1 + 0j
    return pfaffian_elimination(SkewMatrix(wick_matrix(k, events)))


def _real(z: complex, what: str) -> float:
    if abs(z.imag) > REAL_TOL:
        raise ArithmeticError(f"{what} should be real, imaginary part {z.imag:.3e}")
    return float(z.real)


def _check_site(k: QuasiFreeKernel, *sites: int) -> None:
    for s in sites:
        if not 1 <= s <= k.N:
            raise StructuralError(f"site {s} outside 1..{k.N}")


def sigma3_expectation(k: QuasiFreeKernel, xi: int) -> float:
    _check_site(k, xi)
    g = k.gamma(0.0)
    return _real(1j * g[mode_index(xi, "+"), mode_index(xi, "-")], "<sigma3>")


def sigma3_correlation(k: QuasiFreeKernel, xi: int, eta: int, t: float) -> complex:
    """Truncated ``<tau_t(sigma3_xi) sigma3_eta>`` from four two-point values."""
    _check_site(k, xi, eta)
    g = k.gamma(t)
    xp, xm = mode_index(xi, "+"), mode_index(xi, "-")
    yp, ym = mode_index(eta, "+"), mode_index(eta, "-")
    return complex(g[xp, yp] * g[xm, ym] - g[xp, ym] * g[xm, yp])


def sigma3_sigma12_correlation(k: QuasiFreeKernel, xi: int, eta: int, t: float, w: int = 3, w2: int = 1) -> complex:
    """Mixed ``sigma3``/``sigma1,2`` correlators are odd Majorana products, hence 0."""
    _check_site(k, xi, eta)
    return 0j


def _flavor(w: int) -> str:
    if w == 1:
        return "+"
    if w == 2:
        return "-"
    raise StructuralError(f"w must be 1 or 2 here, got {w}")


def _opposite(flavor: str) -> str:
    return "-" if flavor == "+" else "+"


def _string(sites: Iterable[int], t: float) -> list:
    out = []
    for s in sites:
        out += [MajoranaEvent(s, "+", t), MajoranaEvent(s, "-", t)]
    return out


def direct_config(xi: int, eta: int, t: float, w: int, w2: int) -> MajoranaConfig:
    """Majorana string of ``tau_t(sigma^w_xi) sigma^w2_eta``, ``2(xi+eta-1)`` factors."""
    events = (
        _string(range(1, xi), t)
        + [MajoranaEvent(xi, _flavor(w), t), MajoranaEvent(eta, _flavor(w2), 0.0)]
        + _string(range(1, eta), 0.0)
    )
    return MajoranaConfig(tuple(events), strict=False)


def twisted_config(xi: int, eta: int, N: int, t: float, w: int, w2: int) -> MajoranaConfig:
    """Configuration ``(1,1,...,xi, eta, ..., N, N)``, ``2(N+xi-eta)`` factors."""
    events = (
        _string(range(1, xi), t)
        + [MajoranaEvent(xi, _flavor(w), t), MajoranaEvent(eta, _opposite(_flavor(w2)), 0.0)]
        + _string(range(eta + 1, N + 1), 0.0)
    )
    return MajoranaConfig(tuple(events), strict=False)


def sigma12_correlation_direct(k: QuasiFreeKernel, xi: int, eta: int, t: float, w: int, w2: int) -> complex:
    """``<tau_t(sigma^w_xi) sigma^w2_eta>`` for ``w, w2 in {1, 2}`` and ``xi <= eta``."""
    _check_site(k, xi, eta)
    if xi > eta:
        raise StructuralError(f"direct route needs xi <= eta, got {xi} > {eta}")
    pf = wick_pfaffian(k, direct_config(xi, eta, t, w, w2))
    prefactor = (-1) ** (w + w2) * 1j ** ((xi - 1) + (eta - 1))
    return complex(prefactor * pf)


def sigma12_correlation_twisted(k: QuasiFreeKernel, xi: int, eta: int, t: float, w: int, w2: int) -> complex:
    """Same correlator through the parity-twisted functional.

    Uses ``prod_{m<eta} i a+_m a-_m = det(O) * prod_{m>=eta} i a+_m a-_m * P_N``,
    which turns the ``eta``-string into the complementary string times the
    fermion parity.
    """
    _check_site(k, xi, eta)
    if xi > eta:
        raise StructuralError(f"twisted route needs xi <= eta, got {xi} > {eta}")
    if k.state.kind == "twisted_thermal":
        raise StructuralError("pass the kernel of the untwisted state")
    if abs(k.parity_trace) <= PARITY_TOL:
        raise PreconditionError(f"tr(P_N rho) = {k.parity_trace:.3e} vanishes; twisted route undefined")
    tk = k.twisted()
    pf = wick_pfaffian(tk, twisted_config(xi, eta, k.N, t, w, w2))
    prefactor = (
        (-1) ** (w + w2) * 1j ** ((xi + k.N - eta) % 4) * k.canonical.detO * k.parity_trace * (-1) ** (w2 - 1)
    )
    return complex(prefactor * pf)


ROUTES = ("direct", "twisted")


def spin_correlation(k: QuasiFreeKernel, xi: int, eta: int, t: float, w: int, w2: int, route: str = "direct") -> complex:
    """Truncated ``<tau_t(sigma^w_xi) sigma^w2_eta> - <sigma^w_xi><sigma^w2_eta>``.

    Handles every ``w, w2 in {1, 2, 3}`` and any site order; for ``xi > eta``
    it uses ``<tau_t(A) B> = conj <tau_{-t}(B) A>``, valid for states that
    commute with the dynamics.
    """
    if route not in ROUTES:
        raise StructuralError(f"route must be one of {ROUTES}")
    _check_site(k, xi, eta)
    if w not in (1, 2, 3) or w2 not in (1, 2, 3):
        raise StructuralError("w and w2 must be in {1, 2, 3}")
    if w == 3 and w2 == 3:
        return sigma3_correlation(k, xi, eta, t)
    if w == 3 or w2 == 3:
        return sigma3_sigma12_correlation(k, xi, eta, t, w, w2)
    fn = sigma12_correlation_direct if route == "direct" else sigma12_correlation_twisted
    if xi <= eta:
        return fn(k, xi, eta, t, w, w2)
    return fn(k, eta, xi, -t, w2, w).conjugate()


def measure_rho_hat(k: QuasiFreeKernel, taus: Sequence[float]) -> np.ndarray:
    """``max`` over flavors and time differences of ``|<a_x(t) a_y(s)>|``, as an N x N site array."""
    n = k.N
    out = np.zeros((n, n))
    for tau in taus:
        g = np.abs(k.gamma(tau)).reshape(n, 2, n, 2).max(axis=(1, 3))
        np.maximum(out, g, out=out)
    return out


RECORD_FIELDS = ("xi", "eta", "t", "w", "w2", "re", "im")


def correlator_record(xi: int, eta: int, t: float, w: int, w2: int, value: complex) -> dict:
    return {"xi": xi, "eta": eta, "t": float(t), "w": w, "w2": w2, "re": float(value.real), "im": float(value.imag)}


def records_to_csv(records: Iterable[dict]) -> str:
    from .io import fmt

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for r in records:
        writer.writerow([r["xi"], r["eta"], fmt(r["t"]), r["w"], r["w2"], fmt(r["re"]), fmt(r["im"])])
    return buf.getvalue()


def records_from_csv(text: str) -> list:
    rows = csv.DictReader(io.StringIO(text))
    return [
        {
            "xi": int(r["xi"]),
            "eta": int(r["eta"]),
            "t": float(r["t"]),
            "w": int(r["w"]),
            "w2": int(r["w2"]),
            "re": float(r["re"]),
            "im": float(r["im"]),
        }
        for r in rows
    ]
