"""Configuration distances, decay profiles and evaluators for the bordered bounds.

Every inequality check returns a :class:`BoundReport`. The block-split
routines relabel a correlation matrix around its longest pair, cut it into
bordered blocks and compare the border norms with the sums of a measured
site-decay profile ``rho_hat``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, ParameterError, PreconditionError, SizeError, StructuralError
from .skewlin import SkewMatrix, pfaffian_elimination, spectral_norm

SLACK = 1e-12
DEPTH_MAX_DIM = 16
TAIL_MAX_TERMS = 10**7
BRUTE_MAX_N = 8


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float | None
    satisfied: bool
    margin: float | None
    context: dict = field(default_factory=dict)

    @classmethod
    def make(cls, lhs: float, rhs: float, **context) -> "BoundReport":
        lhs, rhs = float(lhs), float(rhs)
        ok = lhs <= rhs + SLACK * max(1.0, rhs)
        return cls(lhs, rhs, bool(ok), rhs - lhs, dict(context))

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "satisfied": self.satisfied, "margin": self.margin, "context": self.context}

    def to_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ---------------------------------------------------------------------------
# decay profiles and I(mu0)


@dataclass(frozen=True)
class DecayProfile:
    """Monotone increasing ``K: [0, inf) -> [0, inf)``.

    ``tabulated`` holds ``K(0), K(1), ...`` on the integers, interpolates
    linearly in between and extends with the last slope beyond the table.
    """

    kind: str
    values: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("exponential", "logarithmic", "tabulated"):
            raise StructuralError(f"unknown decay profile {self.kind!r}")
        if self.kind == "tabulated":
            v = np.asarray(self.values, dtype=float)
            if v.ndim != 1 or len(v) < 2:
                raise StructuralError("tabulated profile needs at least two values")
            if not np.all(np.isfinite(v)) or v[0] < 0:
                raise StructuralError("tabulated values must be finite and non-negative")
            if np.any(np.diff(v) < 0):
                raise StructuralError("tabulated profile is not monotone increasing")
            object.__setattr__(self, "values", tuple(float(a) for a in v))

    @classmethod
    def exponential(cls) -> "DecayProfile":
        return cls("exponential")

    @classmethod
    def logarithmic(cls) -> "DecayProfile":
        return cls("logarithmic")

    @classmethod
    def tabulated(cls, values) -> "DecayProfile":
        return cls("tabulated", tuple(values))

    @property
    def end_slope(self) -> float:
        v = self.values
        return v[-1] - v[-2]

    def __call__(self, tau):
        t = np.asarray(tau, dtype=float)
        if np.any(t < 0):
            raise StructuralError("K is defined on [0, inf)")
        if self.kind == "exponential":
            out = t
        elif self.kind == "logarithmic":
            out = np.log1p(t)
        else:
            v = np.asarray(self.values)
            last = len(v) - 1
            out = np.where(t <= last, np.interp(t, np.arange(len(v)), v), v[-1] + self.end_slope * (t - last))
        return float(out) if np.ndim(out) == 0 else out


def _geometric_tail(q: float, m: int) -> float:
    """``sum_{l >= m} (1+l) q^l`` for ``0 <= q < 1``."""
    return q**m * ((m + 1) - m * q) / (1.0 - q) ** 2


def _tail_bound(mu0: float, K: DecayProfile) -> Callable[[int], float]:
    """Upper bound on ``sum_{l > L} (1+l) e^{-mu0 K(l)}`` as a function of ``L``."""
    if K.kind == "exponential":
        q = math.exp(-mu0)
        return lambda L: _geometric_tail(q, L + 1)
    if K.kind == "logarithmic":
        # terms (1+l)^{1-mu0} are decreasing; compare with the integral from L
        if mu0 <= 2.0:
            raise DivergenceError(f"sum (1+l)^(1-mu0) diverges for mu0 = {mu0} <= 2")
        return lambda L: (1.0 + L) ** (2.0 - mu0) / (mu0 - 2.0)
    slope = K.end_slope
    last = len(K.values) - 1
    if slope <= 0:
        raise DivergenceError("tabulated profile is flat at the end of the table; I(mu0) diverges")
    q = math.exp(-mu0 * slope)

    def tab(L):
        m = max(L + 1, last)
        head = 0.0
        if L + 1 < last:
            ls = np.arange(L + 1, last)
            head = float(np.sum((1 + ls) * np.exp(-mu0 * K(ls))))
        return head + math.exp(-mu0 * K.values[-1]) * q ** (-last) * _geometric_tail(q, m)

    return tab


def tail_sum_I(mu0: float, K: DecayProfile, tol: float = 1e-12, max_terms: int = TAIL_MAX_TERMS) -> float:
    """``I(mu0) = sum_{l >= 0} (1+l) e^{-mu0 K(l)}`` to within ``tol``.

    Partial sums are accumulated until an analytic bound on the remainder
    falls below ``tol``; a remainder still above ``tol`` after ``max_terms``
    terms is reported as divergence.
    """
    if not (mu0 > 0 and math.isfinite(mu0)):
        raise ParameterError(f"mu0 must be a positive finite number, got {mu0}")
    if not tol > 0:
        raise ParameterError("tol must be positive")
    tail = _tail_bound(mu0, K)
    parts = []
    start, chunk = 0, 256
    while True:
        ls = np.arange(start, start + chunk)
        parts.extend(((1 + ls) * np.exp(-mu0 * np.asarray(K(ls)))).tolist())
        L = start + chunk - 1
        if tail(L) < tol:
            return math.fsum(parts)
        if L + 1 >= max_terms:
            raise DivergenceError(f"I({mu0}) remainder {tail(L):.3e} still above tol after {L + 1} terms")
        start += chunk
        chunk = min(chunk * 2, 1 << 20)


# ---------------------------------------------------------------------------
# configurations and distances


@dataclass(frozen=True, eq=False)
class FermionConfigPair:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x).reshape(-1)
        y = np.asarray(self.y).reshape(-1)
        if x.shape != y.shape:
            raise StructuralError(f"configurations differ in length: {len(x)} vs {len(y)}")
        if len(x) == 0:
            raise StructuralError("configurations must be non-empty")
        for name, a in (("x", x), ("y", y)):
            if not np.all(np.equal(np.mod(a, 1), 0)):
                raise StructuralError(f"{name} must hold integers")
            if np.any(np.diff(a) <= 0):
                raise StructuralError(f"{name} must be strictly increasing")
        object.__setattr__(self, "x", x.astype(int))
        object.__setattr__(self, "y", y.astype(int))

    @property
    def n(self) -> int:
        return len(self.x)


def distance_D(c: FermionConfigPair) -> int:
    return int(np.max(np.abs(c.x - c.y)))


def distance_D1(c: FermionConfigPair) -> int:
    return int(np.sum(np.abs(c.x - c.y)))


def _brute(c: FermionConfigPair, reduce) -> int:
    if c.n > BRUTE_MAX_N:
        raise SizeError(f"permutation brute force capped at n = {BRUTE_MAX_N}")
    return min(int(reduce(np.abs(c.x - c.y[list(p)]))) for p in itertools.permutations(range(c.n)))


def distance_D_bruteforce(c: FermionConfigPair) -> int:
    """``min_pi max_j |x_j - y_pi(j)|`` over all permutations."""
    return _brute(c, np.max)


def distance_D1_bruteforce(c: FermionConfigPair) -> int:
    return _brute(c, np.sum)


def _config_sites(config) -> np.ndarray:
    events = getattr(config, "events", config)
    sites = np.array([e.site if hasattr(e, "site") else e for e in events], dtype=int)
    return sites


def distance_r(config) -> int:
    """``max_j |x_2j - x_2j-1|`` after sorting the sites.

    Accepts a MajoranaConfig, a sequence of events or a sequence of sites.
    Sorting is harmless: reordering a Wick pfaffian only changes its sign.
    """
    sites = np.sort(_config_sites(config), kind="stable")
    if len(sites) % 2:
        raise StructuralError(f"Majorana configuration must have even length, got {len(sites)}")
    if len(sites) == 0:
        return 0
    return int(np.max(np.abs(sites[1::2] - sites[0::2])))


# ---------------------------------------------------------------------------
# bordered bounds


def _vec(a, n: int, name: str) -> np.ndarray:
    v = np.asarray(a, dtype=complex).reshape(-1)
    if len(v) != n:
        raise StructuralError(f"{name} has length {len(v)}, expected {n}")
    return v


def bordered_det_rhs(alpha, v1, v2, w1, w2, B) -> float:
    """``|a| + |v2| + |w1| + ||B|| + 2 sqrt(|v1| (|w1| + ||B||))`` (Euclidean, spectral)."""
    v1 = np.asarray(v1, dtype=complex).reshape(-1)
    v2 = np.asarray(v2, dtype=complex).reshape(-1)
    p, q = len(v1), len(v2)
    w1, w2 = _vec(w1, p, "w1"), _vec(w2, q, "w2")
    B = np.asarray(B, dtype=complex).reshape(p, q) if np.size(B) == p * q else None
    if B is None:
        raise StructuralError(f"B must be {p} x {q}")
    nb = spectral_norm(B) if B.size else 0.0
    n1, nw1 = float(np.linalg.norm(v1)), float(np.linalg.norm(w1))
    return abs(complex(alpha)) + float(np.linalg.norm(v2)) + nw1 + nb + 2.0 * math.sqrt(n1 * (nw1 + nb))


def split_det_blocks(M, p: int) -> dict:
    """Cut ``M`` (size ``n+1``) into ``alpha, v1, v2, w1, w2, A, B, C, D`` with ``A`` of size ``p``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise StructuralError(f"M must be square and non-empty, got {M.shape}")
    n = M.shape[0] - 1
    if not 0 <= p <= n:
        raise StructuralError(f"split p = {p} outside 0..{n}")
    s = 1 + p
    return {
        "alpha": M[0, 0],
        "v1": M[0, 1:s],
        "v2": M[0, s:],
        "w1": M[1:s, 0],
        "w2": M[s:, 0],
        "A": M[1:s, 1:s],
        "B": M[1:s, s:],
        "C": M[s:, 1:s],
        "D": M[s:, s:],
    }


def pfaffian_bound_rhs(M0: float, alpha, v1, v2, w1, w2, B) -> float:
    """``M0 (|a| + |v2|_1 + |v1|_1 |w1|_1 + |v1|_1 |w2|_1 sum_j |r_j(B)|_1)``."""
    v1 = np.asarray(v1, dtype=complex).reshape(-1)
    v2 = np.asarray(v2, dtype=complex).reshape(-1)
    p2, q2 = len(v1), len(v2)
    if p2 % 2 or q2 % 2:
        raise StructuralError("pfaffian borders must have even lengths")
    w1, w2 = _vec(w1, p2, "w1"), _vec(w2, q2, "w2")
    if np.size(B) != p2 * q2:
        raise StructuralError(f"B must be {p2} x {q2}")
    B = np.asarray(B, dtype=complex).reshape(p2, q2)
    l1 = lambda a: float(np.sum(np.abs(a)))  # noqa: E731
    return float(M0) * (abs(complex(alpha)) + l1(v2) + l1(v1) * l1(w1) + l1(v1) * l1(w2) * l1(B))


def split_pf_blocks(M, p: int) -> dict:
    """Cut a skew ``M`` of size ``2(n+1)`` into the bordered pfaffian blocks; ``A`` is ``2p x 2p``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2 or M.shape[0] % 2:
        raise StructuralError(f"M must be square of even size >= 2, got {M.shape}")
    n = M.shape[0] // 2 - 1
    if not 0 <= p <= n:
        raise StructuralError(f"split p = {p} outside 0..{n}")
    s = 2 + 2 * p
    return {
        "alpha": M[0, 1],
        "v1": M[0, 2:s],
        "v2": M[0, s:],
        "w1": M[1, 2:s],
        "w2": M[1, s:],
        "A": M[2:s, 2:s],
        "B": M[2:s, s:],
        "C": M[s:, s:],
    }


def max_subpfaffian(M, k: int, max_dim: int = DEPTH_MAX_DIM) -> float:
    """Largest ``|pf|`` over all principal submatrices with ``2l`` rows/columns removed, ``l <= k``."""
    a = SkewMatrix.from_array(M).entries
    dim = a.shape[0]
    if dim > max_dim:
        raise SizeError(f"exhaustive sub-pfaffian enumeration capped at dim {max_dim}, got {dim}")
    if k < 0:
        raise StructuralError("depth must be non-negative")
    worst = 0.0
    for l in range(0, min(k, dim // 2) + 1):
        for removed in itertools.combinations(range(dim), 2 * l):
            keep = [i for i in range(dim) if i not in removed]
            sub = a[np.ix_(keep, keep)]
            worst = max(worst, abs(pfaffian_elimination(SkewMatrix(sub))))
    return worst


def correlation_depth_check(M, k: int, M0: float, max_dim: int = DEPTH_MAX_DIM) -> bool:
    """True if every sub-pfaffian with up to ``2k`` rows/columns removed is at most ``M0``.

    The empty pfaffian equals 1, so removing everything requires ``M0 >= 1``.
    """
    return max_subpfaffian(M, k, max_dim) <= M0 + SLACK * max(1.0, M0)


def _check_mu(mu: float, mu0: float) -> None:
    if not mu > mu0:
        raise ParameterError(f"need mu > mu0, got mu = {mu}, mu0 = {mu0}")


def thm_det_rhs(C: float, mu: float, mu0: float, K: DecayProfile, D: float, I: float | None = None) -> float:
    """``8 max(C I, sqrt(C I)) exp(-(mu - mu0)/2 K(D/2))``."""
    _check_mu(mu, mu0)
    ci = C * (tail_sum_I(mu0, K) if I is None else I)
    return 8.0 * max(ci, math.sqrt(ci)) * math.exp(-0.5 * (mu - mu0) * K(D / 2.0))


def thm_pf_rhs(M0: float, C: float, mu: float, mu0: float, K: DecayProfile, r: float, I: float | None = None) -> float:
    """``M0 (C e^{-mu K(r)} + (2CI(1+2CI) + 16 C^3 I^3) e^{-(mu - mu0) K(r)})``."""
    _check_mu(mu, mu0)
    ci = C * (tail_sum_I(mu0, K) if I is None else I)
    kr = K(r)
    return M0 * (C * math.exp(-mu * kr) + (2 * ci * (1 + 2 * ci) + 16 * ci**3) * math.exp(-(mu - mu0) * kr))


def thm_detrandom_rhs(C: float, mu: float, D: float) -> float:
    """``8 max(C, sqrt C) / (1 - e^{-mu})^2 * e^{-mu D / 4}`` for exponential decay in mean."""
    if not mu > 0:
        raise ParameterError("mu must be positive")
    return 8.0 * max(C, math.sqrt(C)) / (1.0 - math.exp(-mu)) ** 2 * math.exp(-mu * D / 4.0)


# ---------------------------------------------------------------------------
# site decay profiles measured from a kernel


@dataclass(frozen=True, eq=False)
class RhoHat:
    """``rho_hat(x, y)`` on sites ``origin .. origin + n - 1``, zero elsewhere."""

    values: np.ndarray
    origin: int = 1

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise StructuralError("rho_hat must be a square site array")
        object.__setattr__(self, "values", v)

    @property
    def span(self) -> int:
        return self.values.shape[0]

    def __call__(self, x, y):
        x = np.asarray(x, dtype=int) - self.origin
        y = np.asarray(y, dtype=int) - self.origin
        n = self.span
        inside = (x >= 0) & (x < n) & (y >= 0) & (y < n)
        out = np.where(inside, self.values[np.clip(x, 0, n - 1), np.clip(y, 0, n - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def transposed(self) -> "RhoHat":
        return RhoHat(self.values.T.copy(), self.origin)

    def fit_exponential(self) -> tuple[float, float]:
        """``(C, mu)`` with ``rho_hat(x, y) <= C e^{-mu |x - y|}`` for every pair of sites.

        ``mu`` is the least-squares slope of ``log max_{|x-y|=d} rho_hat``
        over the positive entries; ``C`` is then the smallest valid prefactor.
        """
        n = self.span
        d = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        env = np.array([self.values[d == k].max() for k in range(n)])
        good = env > 1e-300
        ks = np.arange(n)[good]
        if len(ks) < 2:
            raise PreconditionError("not enough positive entries to fit a decay rate")
        slope = np.polyfit(ks, np.log(env[good]), 1)[0]
        mu = max(-float(slope), 0.0)
        C = float(np.max(self.values * np.exp(mu * d)))
        return C, mu


# ---------------------------------------------------------------------------
# block splits


def _ell_sum(fn, lo: int, hi: int) -> float:
    if hi < lo:
        return 0.0
    ls = np.arange(lo, hi + 1)
    return math.fsum(np.atleast_1d(fn(ls)).tolist())


@dataclass(eq=False)
class DetSplit:
    """Relabeled determinant matrix and its bordered blocks.

    ``perm`` lists original row/column indices in their new positions
    (applied simultaneously, so the determinant is unchanged); ``swapped``
    means the roles of ``x`` and ``y`` were interchanged, i.e. the matrix
    was transposed first.
    """

    config: FermionConfigPair
    perm: list
    p: int
    j0: int
    swapped: bool
    delta: int
    matrix: np.ndarray
    blocks: dict

    def norms(self) -> dict:
        b = self.blocks
        return {
            "alpha": abs(complex(b["alpha"])),
            "v1": float(np.linalg.norm(b["v1"])),
            "v2": float(np.linalg.norm(b["v2"])),
            "w1": float(np.linalg.norm(b["w1"])),
            "w2": float(np.linalg.norm(b["w2"])),
            "B": spectral_norm(b["B"]) if b["B"].size else 0.0,
        }

    def rhs(self) -> float:
        b = self.blocks
        return bordered_det_rhs(b["alpha"], b["v1"], b["v2"], b["w1"], b["w2"], b["B"])

    def report(self) -> BoundReport:
        lhs = abs(np.linalg.det(self.matrix)) if self.matrix.size else 1.0
        return BoundReport.make(lhs, self.rhs(), kind="det", n=self.config.n, p=self.p, delta=self.delta)

    def lemma_bounds(self, rho_hat: RhoHat) -> dict:
        """Border-norm bounds built from ``rho_hat`` around the relabeled first pair."""
        rh = rho_hat.transposed() if self.swapped else rho_hat
        x, y = (self.config.y, self.config.x) if self.swapped else (self.config.x, self.config.y)
        x1, y1, d = int(x[self.j0]), int(y[self.j0]), self.delta
        span = rh.span + abs(x1) + abs(y1) + 1
        half = d // 2 + 1  # smallest integer l with l > d/2
        v2 = _ell_sum(lambda l: rh(x1, x1 + l), half, span)
        w1 = _ell_sum(lambda l: rh(y1 - l, y1), d + 1, span)
        B = math.fsum(_ell_sum(lambda lp: rh(x1 - l, x1 + lp), half, span) for l in range(1, span + 1))
        return {"v2": v2, "w1": w1, "B": B}

    def lemma_reports(self, rho_hat: RhoHat) -> dict:
        got, bound = self.norms(), self.lemma_bounds(rho_hat)
        return {k: BoundReport.make(got[k], bound[k], kind="det-lemma", block=k) for k in bound}


def block_split_det(M, c: FermionConfigPair) -> DetSplit:
    """Relabel ``M = (<x_j, rho y_k>)`` around the pair attaining ``D(x, y)`` and split it.

    The first index attaining the maximum is used. Indices ``k`` with
    ``y_k <= x_1 + D/2`` (after relabeling) go to the ``v1 / w1`` side.
    """
    M = np.asarray(M, dtype=complex)
    n = c.n
    if M.shape != (n, n):
        raise StructuralError(f"matrix is {M.shape}, configuration has n = {n}")
    x, y = c.x, c.y
    j0 = int(np.argmax(np.abs(x - y)))
    delta = int(abs(x[j0] - y[j0]))
    swapped = bool(x[j0] > y[j0])
    if swapped:
        x, y, M = y, x, M.T
    rest = [k for k in range(n) if k != j0]
    near = [k for k in rest if y[k] <= x[j0] + delta / 2.0]
    far = [k for k in rest if y[k] > x[j0] + delta / 2.0]
    perm = [j0] + near + far
    Mp = M[np.ix_(perm, perm)]
    return DetSplit(c, perm, len(near), j0, swapped, delta, Mp, split_det_blocks(Mp, len(near)))


@dataclass(eq=False)
class PfSplit:
    """Relabeled Wick matrix with the longest pair moved to the front.

    ``perm`` maps new positions to original indices; ``sign`` is the sign
    of that permutation, so ``pf(matrix) = sign * pf(original)``.
    """

    sites: np.ndarray
    perm: list
    sign: int
    p: int
    j0: int
    r: int
    matrix: np.ndarray
    blocks: dict

    def norms(self) -> dict:
        b = self.blocks
        l1 = lambda a: float(np.sum(np.abs(a)))  # noqa: E731
        return {
            "alpha": abs(complex(b["alpha"])),
            "v1": l1(b["v1"]),
            "v2": l1(b["v2"]),
            "w1": l1(b["w1"]),
            "w2": l1(b["w2"]),
            "B": l1(b["B"]),
        }

    def rhs(self, M0: float = 1.0) -> float:
        b = self.blocks
        return pfaffian_bound_rhs(M0, b["alpha"], b["v1"], b["v2"], b["w1"], b["w2"], b["B"])

    def report(self, M0: float = 1.0) -> BoundReport:
        lhs = abs(pfaffian_elimination(SkewMatrix(self.matrix)))
        return BoundReport.make(lhs, self.rhs(M0), kind="pf", dim=int(self.matrix.shape[0]), p=self.p, r=self.r)

    def lemma_bounds(self, rho_hat: RhoHat) -> dict:
        """Two Majoranas per site at most: factor 2 per border sum and 4 for ``B``."""
        a, b = int(self.sites[2 * self.j0]), int(self.sites[2 * self.j0 + 1])
        span = rho_hat.span + abs(a) + abs(b) + 1
        rh = rho_hat
        return {
            "v1": 2 * _ell_sum(lambda l: rh(a, a - l), 0, span),
            "v2": 2 * _ell_sum(lambda l: rh(a, b + l), 0, span),
            "w1": 2 * _ell_sum(lambda l: rh(b, a - l), 0, span),
            "w2": 2 * _ell_sum(lambda l: rh(b, b + l), 0, span),
            "B": 4 * math.fsum(_ell_sum(lambda lp: rh(a - l, b + lp), 0, span) for l in range(0, span + 1)),
        }

    def lemma_reports(self, rho_hat: RhoHat) -> dict:
        got, bound = self.norms(), self.lemma_bounds(rho_hat)
        return {k: BoundReport.make(got[k], bound[k], kind="pf-lemma", block=k) for k in bound}


def _perm_sign(perm: Sequence[int]) -> int:
    seen, sign = set(), 1
    for i in range(len(perm)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def block_split_pf(M, config) -> PfSplit:
    """Order the configuration by site, move the longest pair to the front and split.

    ``config`` is a MajoranaConfig, a sequence of events or a sequence of
    sites matching the rows of ``M``.
    """
    a = SkewMatrix.from_array(M).entries
    sites = _config_sites(config)
    if len(sites) != a.shape[0]:
        raise StructuralError(f"matrix has dim {a.shape[0]}, configuration has {len(sites)} events")
    if len(sites) % 2 or len(sites) == 0:
        raise StructuralError("Majorana configuration must have positive even length")
    order = [int(i) for i in np.argsort(sites, kind="stable")]
    s = sites[order]
    gaps = np.abs(s[1::2] - s[0::2])
    j0 = int(np.argmax(gaps))
    front = [2 * j0, 2 * j0 + 1]
    rel = front + [i for i in range(len(s)) if i not in front]
    perm = [order[i] for i in rel]
    Mp = a[np.ix_(perm, perm)]
    return PfSplit(s, perm, _perm_sign(perm), j0, j0, int(gaps[j0]), Mp, split_pf_blocks(Mp, j0))


# ---------------------------------------------------------------------------
# fuzzers


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def _random_unitary(rng, n: int) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_contraction(rng, n: int, kind: str) -> np.ndarray:
    """Random ``n x n`` matrix with spectral norm at most 1."""
    if kind == "gaussian":
        z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        return z / spectral_norm(z)
    if kind == "unitary":
        return _random_unitary(rng, n)
    if kind == "contraction":
        s = rng.uniform(0.0, 1.0, size=n) ** 0.25
        return (_random_unitary(rng, n) * s) @ _random_unitary(rng, n)
    raise StructuralError(f"unknown matrix kind {kind!r}")


DET_KINDS = ("gaussian", "unitary", "contraction")


def det_trial(seed: int, trial: int, max_size: int = 60) -> BoundReport:
    """One random split of a random contraction; trial 0 is an identity matrix."""
    rng = trial_rng(seed, trial)
    size = int(rng.integers(1, max_size + 1))
    p = int(rng.integers(0, size))
    if trial == 0:
        m, kind = np.eye(size, dtype=complex), "identity"
    else:
        kind = DET_KINDS[int(rng.integers(0, len(DET_KINDS)))]
        m = random_contraction(rng, size, kind)
    b = split_det_blocks(m, p)
    sign, logabs = np.linalg.slogdet(m)
    lhs = 0.0 if sign == 0 else math.exp(logabs)
    rhs = bordered_det_rhs(b["alpha"], b["v1"], b["v2"], b["w1"], b["w2"], b["B"])
    return BoundReport.make(lhs, rhs, kind="det", trial=trial, size=size, p=p, matrix=kind)


def fuzz_det(trials: int, seed: int, max_size: int = 60) -> list:
    return [det_trial(seed, t, max_size) for t in range(trials)]


def _random_chain(rng, N: int):
    from .xychain import ChainParams

    return ChainParams(N, rng.uniform(0.3, 1.5, N - 1), rng.uniform(-1, 1, N - 1), rng.uniform(-2, 2, N))


def pf_trial(seed: int, trial: int, max_N: int = 8, max_dim: int = DEPTH_MAX_DIM) -> BoundReport:
    """Wick matrix of a random chain state (or, one trial in ten, a random skew matrix).

    Returns a report whose context has ``applicable = False`` when the depth-2
    certificate with ``M0 = 1`` fails; such trials never count as violations.
    """
    from .quasifree import MajoranaEvent, make_kernel, wick_matrix
    from .xychain import StateSpec

    rng = trial_rng(seed, trial)
    source = "random" if rng.uniform() < 0.1 else ("thermal" if rng.uniform() < 0.5 else "eigenstate")
    N = int(rng.integers(2, max_N + 1))
    m = int(rng.integers(2, min(max_dim, 2 * N) // 2 + 1))
    modes = np.sort(rng.choice(2 * N, size=2 * m, replace=False))
    times = rng.choice(np.arange(0.0, 5.25, 0.25), size=2 * m)
    events = [MajoranaEvent(int(i) // 2 + 1, "+-"[int(i) % 2], float(t)) for i, t in zip(modes, times)]
    if source == "random":
        z = rng.normal(size=(2 * m, 2 * m)) + 1j * rng.normal(size=(2 * m, 2 * m))
        mat = SkewMatrix(np.triu(z, 1)).entries
    else:
        for _ in range(100):
            p = _random_chain(rng, N)
            st = StateSpec.thermal(float(rng.uniform(0.2, 3.0))) if source == "thermal" else StateSpec.eigenstate(rng.integers(0, 2, N))
            try:
                k = make_kernel(p, st)
                break
            except PreconditionError:
                continue
        else:
            raise PreconditionError("could not draw a chain with simple spectrum")
        mat = wick_matrix(k, events)
    ctx = dict(kind="pf", trial=trial, source=source, N=N, dim=2 * m)
    if not correlation_depth_check(mat, 2, 1.0, max_dim):
        lhs = abs(pfaffian_elimination(SkewMatrix(mat)))
        return BoundReport(lhs, None, True, None, {**ctx, "applicable": False})
    rep = block_split_pf(mat, events).report(1.0)
    return BoundReport(rep.lhs, rep.rhs, rep.satisfied, rep.margin, {**ctx, "r": rep.context["r"], "applicable": True})


def fuzz_pf(trials: int, seed: int, max_N: int = 8) -> list:
    return [pf_trial(seed, t, max_N) for t in range(trials)]


def summarize(reports: Sequence[BoundReport]) -> dict:
    applicable = [r for r in reports if r.context.get("applicable", True)]
    margins = [r.margin for r in applicable]
    return {
        "summary": True,
        "trials": len(reports),
        "applicable": len(applicable),
        "inapplicable": len(reports) - len(applicable),
        "violations": sum(1 for r in applicable if not r.satisfied),
        "min_margin": min(margins) if margins else None,
    }
