"""Single-particle data of the anisotropic XY chain.

Basis ordering is site-major with flavor ``(+, -)`` per site: index
``2*(xi-1)`` is ``(xi, +)`` and ``2*(xi-1)+1`` is ``(xi, -)`` for 1-based sites.
Every other module indexes Majorana modes this way.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import PreconditionError, StructuralError
from .skewlin import HermitianMatrix

SIMPLE_TOL = 1e-9

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)


def mode_index(site: int, flavor: str) -> int:
    """0-based row of the Majorana mode ``(site, flavor)``; ``site`` is 1-based."""
    if flavor == "+":
        return 2 * (site - 1)
    if flavor == "-":
        return 2 * (site - 1) + 1
    raise StructuralError(f"flavor must be '+' or '-', got {flavor!r}")


@dataclass(frozen=True, eq=False)
class ChainParams:
    N: int
    mu: np.ndarray
    gamma: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        if int(self.N) < 1:
            raise StructuralError(f"chain length must be >= 1, got {self.N}")
        for name, length in (("mu", self.N - 1), ("gamma", self.N - 1), ("nu", self.N)):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape != (length,):
                raise StructuralError(f"{name} must have length {length}, got {arr.shape[0]}")
            if not np.all(np.isfinite(arr)):
                raise StructuralError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "N", int(self.N))

    @classmethod
    def homogeneous(cls, N: int, mu: float = 1.0, gamma: float = 0.0, nu=0.0) -> "ChainParams":
        nu_arr = np.broadcast_to(np.asarray(nu, dtype=float), (N,)).copy()
        return cls(N, np.full(N - 1, mu), np.full(N - 1, gamma), nu_arr)

    def to_json(self) -> dict:
        return {"N": self.N, "mu": self.mu.tolist(), "gamma": self.gamma.tolist(), "nu": self.nu.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "ChainParams":
        return cls(int(obj["N"]), obj["mu"], obj["gamma"], obj["nu"])


@dataclass(frozen=True)
class DisorderSpec:
    """iid field distribution plus constant coupling and anisotropy.

    ``field_distribution`` is a dict with ``kind`` in ``uniform`` (keys ``a``,
    ``b``), ``gaussian`` (``mean``, ``stddev``) or ``constant`` (``c``).
    """

    field_distribution: dict
    mu_value: float = 1.0
    gamma_value: float = 0.0
    seed: int = 0

    def __post_init__(self):
        d = dict(self.field_distribution)
        kind = d.get("kind")
        if kind == "uniform":
            if not float(d["a"]) < float(d["b"]):
                raise StructuralError("uniform(a, b) needs a < b")
        elif kind == "gaussian":
            if not float(d["stddev"]) > 0:
                raise StructuralError("gaussian needs stddev > 0")
        elif kind == "constant":
            float(d["c"])
        else:
            raise StructuralError(f"unknown field distribution {kind!r}")
        if int(self.seed) < 0:
            raise StructuralError("seed must be non-negative")
        object.__setattr__(self, "field_distribution", d)

    @classmethod
    def uniform(cls, a: float, b: float, **kw) -> "DisorderSpec":
        return cls({"kind": "uniform", "a": a, "b": b}, **kw)

    @classmethod
    def gaussian(cls, mean: float, stddev: float, **kw) -> "DisorderSpec":
        return cls({"kind": "gaussian", "mean": mean, "stddev": stddev}, **kw)

    @classmethod
    def constant(cls, c: float, **kw) -> "DisorderSpec":
        return cls({"kind": "constant", "c": c}, **kw)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "DisorderSpec":
        return cls(
            dict(obj["field_distribution"]),
            float(obj.get("mu_value", 1.0)),
            float(obj.get("gamma_value", 0.0)),
            int(obj.get("seed", 0)),
        )


STATE_KINDS = ("thermal", "ground", "eigenstate", "twisted_thermal")


@dataclass(frozen=True)
class StateSpec:
    kind: str
    beta: float | None = None
    alpha: tuple | None = field(default=None)

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise StructuralError(f"unknown state kind {self.kind!r}")
        if self.kind in ("thermal", "twisted_thermal"):
            if self.beta is None or not (np.isfinite(self.beta) and self.beta > 0):
                raise StructuralError(f"{self.kind} needs finite beta > 0, got {self.beta}")
        if self.kind == "eigenstate":
            if self.alpha is None:
                raise StructuralError("eigenstate needs an occupation vector alpha")
            alpha = tuple(int(a) for a in self.alpha)
            if any(a not in (0, 1) for a in alpha):
                raise StructuralError("alpha entries must be 0 or 1")
            object.__setattr__(self, "alpha", alpha)

    @classmethod
    def thermal(cls, beta: float) -> "StateSpec":
        return cls("thermal", beta=float(beta))

    @classmethod
    def ground(cls) -> "StateSpec":
        return cls("ground")

    @classmethod
    def eigenstate(cls, alpha) -> "StateSpec":
        return cls("eigenstate", alpha=tuple(alpha))

    @classmethod
    def twisted_thermal(cls, beta: float) -> "StateSpec":
        return cls("twisted_thermal", beta=float(beta))

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.beta is not None:
            out["beta"] = self.beta
        if self.alpha is not None:
            out["alpha"] = list(self.alpha)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "StateSpec":
        return cls(obj["kind"], obj.get("beta"), tuple(obj["alpha"]) if obj.get("alpha") is not None else None)


def build_h(p: ChainParams) -> HermitianMatrix:
    """Jacobi block matrix ``H_N`` with ``S_N = (1/2) A^T H_N A``.

    Diagonal blocks are ``nu * sigma2``; the block coupling sites ``x`` and
    ``x+1`` is ``-mu * (sigma2 + i*gamma*sigma1)`` above the diagonal and its
    adjoint below.
    """
    n = p.N
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    for x in range(n):
        h[2 * x : 2 * x + 2, 2 * x : 2 * x + 2] = p.nu[x] * SIGMA2
    for x in range(n - 1):
        s = SIGMA2 + 1j * p.gamma[x] * SIGMA1
        h[2 * x : 2 * x + 2, 2 * x + 2 : 2 * x + 4] = -p.mu[x] * s
        h[2 * x + 2 : 2 * x + 4, 2 * x : 2 * x + 2] = -p.mu[x] * s.conj().T
    return HermitianMatrix(h)


def block_form_parts(p: ChainParams) -> tuple[np.ndarray, np.ndarray]:
    """Tridiagonal ``A`` (``-nu`` on the diagonal, ``mu`` off it) and skew ``B`` (``gamma*mu``)."""
    a = np.diag(-p.nu) + np.diag(p.mu, 1) + np.diag(p.mu, -1)
    b = np.diag(p.gamma * p.mu, 1) - np.diag(p.gamma * p.mu, -1)
    return a, b


def build_block_form(p: ChainParams) -> HermitianMatrix:
    """The unitarily equivalent ``[[-A, -B], [B, A]]`` representation."""
    a, b = block_form_parts(p)
    return HermitianMatrix(np.block([[-a, -b], [b, a]]).astype(complex))


def _generator(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def substream(seed: int, realization_index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, realization_index, stream)``.

    Stream 0 is the field; stream 1 is reserved for eigenstate labels.
    """
    return _generator(seed, realization_index, stream)


def sample_disorder(spec: DisorderSpec, N: int, realization_index: int) -> ChainParams:
    """Draw an iid field; site ``xi`` uses the ``xi``-th draw of the realization's substream."""
    if N < 1:
        raise StructuralError("N must be >= 1")
    d = spec.field_distribution
    rng = substream(spec.seed, realization_index, 0)
    if d["kind"] == "uniform":
        nu = rng.uniform(float(d["a"]), float(d["b"]), size=N)
    elif d["kind"] == "gaussian":
        nu = rng.normal(float(d["mean"]), float(d["stddev"]), size=N)
    else:
        nu = np.full(N, float(d["c"]))
    return ChainParams(N, np.full(N - 1, spec.mu_value), np.full(N - 1, spec.gamma_value), nu)


def check_simple(lambdas: np.ndarray) -> None:
    """Raise PreconditionError unless the spectrum of H_N is simple."""
    lam = np.sort(np.asarray(lambdas, dtype=float))
    check_kernel(lam)
    if len(lam) > 1:
        gaps = np.diff(lam)
        j = int(np.argmin(gaps))
        if gaps[j] <= SIMPLE_TOL:
            raise PreconditionError(
                f"spectrum is not simple: lambda_{j + 1} and lambda_{j + 2} differ by {gaps[j]:.3e}", gap=float(gaps[j])
            )


def check_kernel(lambdas: np.ndarray) -> None:
    """Raise PreconditionError unless H_N has a trivial kernel."""
    lam = np.asarray(lambdas, dtype=float)
    if len(lam) and lam.min() <= SIMPLE_TOL:
        raise PreconditionError(f"H_N has a (near) zero mode: min lambda = {lam.min():.3e}", gap=float(lam.min()))


def state_function(s: StateSpec, lambdas) -> Callable[[np.ndarray], np.ndarray]:
    """The function ``f`` with two-point matrix ``e^{-2i(t-s)H} f(H)`` for state ``s``.

    ``lambdas`` are the non-negative mode energies in ascending order; an
    eigenstate label ``alpha[j]`` refers to ``lambdas[j]``. The returned map
    acts elementwise on arrays.
    """
    lam = np.sort(np.asarray(lambdas, dtype=float))
    if s.kind == "thermal":
        beta = s.beta
        return lambda x: 1.0 + np.tanh(beta * np.asarray(x, dtype=float))
    if s.kind == "ground":
        return lambda x: 1.0 + np.sign(np.asarray(x, dtype=float))
    if s.kind == "twisted_thermal":
        check_kernel(lam)
        beta = s.beta

        def twisted(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore"):
                return 1.0 + 1.0 / np.tanh(beta * x)

        return twisted

    check_simple(lam)
    alpha = np.asarray(s.alpha, dtype=int)
    if len(alpha) != len(lam):
        raise StructuralError(f"alpha has length {len(alpha)}, chain has {len(lam)} modes")
    points = np.concatenate([-lam[::-1], lam])
    match_tol = 0.5 * float(np.diff(points).min()) if len(points) > 1 else np.inf

    def eigen(x):
        x = np.asarray(x, dtype=float)
        j = np.clip(np.searchsorted(lam, np.abs(x)), 0, len(lam) - 1)
        jm = np.clip(j - 1, 0, len(lam) - 1)
        j = np.where(np.abs(lam[jm] - np.abs(x)) < np.abs(lam[j] - np.abs(x)), jm, j)
        on_spec = np.abs(lam[j] - np.abs(x)) < match_tol
        occupied = np.where(x > 0, 1 - alpha[j], alpha[j])
        return np.where(on_spec, 2.0 * occupied, 0.0)

    return eigen
