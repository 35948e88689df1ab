"""Disorder Monte Carlo for spin correlators and eigenfunction correlators.

Each realization is a pure function of ``(seed, index)``: the field comes
from stream 0 of the realization's substream and a resampled eigenstate
label from stream 1. Per-realization results are reduced in index order with
exactly rounded sums, so the statistics do not depend on how realizations
were scheduled across workers.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import FitError, PreconditionError, SkipOverflowError, StructuralError
from .io import fmt
from .quasifree import make_kernel, spin_correlation
from .skewlin import HermitianMatrix, hermitian_eig
from .xychain import DisorderSpec, StateSpec, build_h, mode_index, sample_disorder, substream

SKIP_LIMIT = 0.01
RANDOM_EIGENSTATE = "random_eigenstate"
EFC = (0, 0)  # observable label for the eigenfunction correlator
CSV_FIELDS = ("pair_xi", "pair_eta", "w", "w2", "distance", "mean", "stderr", "n_effective")


def default_time_grid() -> np.ndarray:
    return 0.25 * np.arange(21)


def time_grid_from_json(obj) -> np.ndarray:
    """A list of times, or ``{"start", "stop", "step"}`` with ``stop`` included."""
    if isinstance(obj, dict):
        start, stop, step = float(obj["start"]), float(obj["stop"]), float(obj["step"])
        if step <= 0 or stop < start:
            raise StructuralError("time grid needs step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        return start + step * np.arange(count)
    return np.asarray(obj, dtype=float).reshape(-1)


@dataclass(frozen=True, eq=False)
class EnsembleConfig:
    """Ensemble definition. ``state`` may be the string ``"random_eigenstate"``."""

    N: int
    realizations: int
    disorder: DisorderSpec
    state: StateSpec | str
    time_grid: np.ndarray = field(default_factory=default_time_grid)
    pairs: tuple = ()
    observables: tuple = ((3, 3), (1, 1))
    seed: int = 0

    def __post_init__(self):
        if int(self.N) < 1:
            raise StructuralError("N must be >= 1")
        if int(self.realizations) < 1:
            raise StructuralError("realizations must be >= 1")
        grid = np.asarray(self.time_grid, dtype=float).reshape(-1)
        if grid.size == 0 or not np.all(np.isfinite(grid)):
            raise StructuralError("time grid must be non-empty and finite")
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        if not pairs:
            raise StructuralError("at least one site pair is required")
        for a, b in pairs:
            if not (1 <= a <= self.N and 1 <= b <= self.N):
                raise StructuralError(f"pair ({a}, {b}) outside 1..{self.N}")
        obs = tuple((int(a), int(b)) for a, b in self.observables)
        for o in obs:
            if o != EFC and not (o[0] in (1, 2, 3) and o[1] in (1, 2, 3)):
                raise StructuralError(f"observable {o} must be (w, w2) in {{1,2,3}}^2 or (0, 0)")
        if isinstance(self.state, str) and self.state != RANDOM_EIGENSTATE:
            raise StructuralError(f"unknown state {self.state!r}")
        if int(self.seed) < 0 or int(self.seed) >= 2**64:
            raise StructuralError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "realizations", int(self.realizations))
        object.__setattr__(self, "time_grid", grid)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "seed", int(self.seed))

    def to_json(self) -> dict:
        state = {"kind": "eigenstate"} if self.state == RANDOM_EIGENSTATE else self.state.to_json()
        return {
            "N": self.N,
            "realizations": self.realizations,
            "disorder": self.disorder.to_json(),
            "state": state,
            "time_grid": self.time_grid.tolist(),
            "pairs": [list(p) for p in self.pairs],
            "observables": [list(o) for o in self.observables],
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EnsembleConfig":
        st = obj["state"]
        state = RANDOM_EIGENSTATE if st.get("kind") == "eigenstate" and st.get("alpha") is None else StateSpec.from_json(st)
        grid = time_grid_from_json(obj["time_grid"]) if "time_grid" in obj else default_time_grid()
        return cls(
            N=int(obj["N"]),
            realizations=int(obj["realizations"]),
            disorder=DisorderSpec.from_json(obj["disorder"]),
            state=state,
            time_grid=grid,
            pairs=tuple(tuple(p) for p in obj["pairs"]),
            observables=tuple(tuple(o) for o in obj.get("observables", [[3, 3], [1, 1]])),
            seed=int(obj.get("seed", 0)),
        )

    def with_seed(self, seed: int) -> "EnsembleConfig":
        return dataclasses.replace(self, seed=int(seed))

    @property
    def rows(self) -> list:
        return [(p, o) for p in self.pairs for o in self.observables]


@dataclass(frozen=True)
class DecayFit:
    rate: float
    log_prefactor: float
    r_squared: float
    distances: np.ndarray
    means: np.ndarray

    def to_json(self) -> dict:
        return {
            "rate": self.rate,
            "log_prefactor": self.log_prefactor,
            "r_squared": self.r_squared,
            "distances": [int(d) for d in self.distances],
            "means": [float(m) for m in self.means],
        }


def fit_decay(distances, means) -> DecayFit:
    """Least squares of ``log(mean)`` against distance over the positive means."""
    d = np.asarray(distances, dtype=float).reshape(-1)
    m = np.asarray(means, dtype=float).reshape(-1)
    if d.shape != m.shape:
        raise StructuralError("distances and means differ in length")
    keep = np.isfinite(m) & (m > 0)
    d, m = d[keep], m[keep]
    if len(d) < 3:
        raise FitError(f"need at least 3 positive means, got {len(d)}")
    order = np.argsort(d, kind="stable")
    d, m = d[order], m[order]
    if np.any(np.diff(d) <= 0):
        raise StructuralError("distances must be distinct")
    y = np.log(m)
    dbar = math.fsum(d) / len(d)
    ybar = math.fsum(y) / len(y)
    sxx = math.fsum((d - dbar) ** 2)
    sxy = math.fsum((d - dbar) * (y - ybar))
    syy = math.fsum((y - ybar) ** 2)
    slope = sxy / sxx
    intercept = ybar - slope * dbar
    if syy == 0.0:
        slope, intercept, r2 = 0.0, ybar, 0.0
    else:
        resid = math.fsum((y - intercept - slope * d) ** 2)
        r2 = min(max(1.0 - resid / syy, 0.0), 1.0)
    return DecayFit(-slope + 0.0, intercept, r2, d.astype(int), m)


def eigenfunction_correlator(H, xi: int, eta: int, interval=(-math.inf, math.inf), flavors=None) -> float:
    """``sum_{lambda_j in I} |phi_j(xi#)| |phi_j(eta b)|``, maximized over ``(#, b)``.

    ``interval`` is closed. With ``flavors=(f1, f2)`` the flavor pair is fixed
    instead of maximized over. The sum form equals the correlator only for
    simple spectrum.
    """
    h = H if isinstance(H, HermitianMatrix) else HermitianMatrix(H)
    if h.dim % 2:
        raise StructuralError("H must have two flavors per site")
    n = h.dim // 2
    if not (1 <= xi <= n and 1 <= eta <= n):
        raise StructuralError(f"sites must lie in 1..{n}")
    spec = hermitian_eig(h)
    lo, hi = interval
    sel = (spec.eigenvalues >= lo) & (spec.eigenvalues <= hi)
    phi = np.abs(spec.eigenvectors[:, sel])
    pairs = [flavors] if flavors is not None else [(a, b) for a in "+-" for b in "+-"]
    best = 0.0
    for a, b in pairs:
        u, v = phi[mode_index(xi, a)], phi[mode_index(eta, b)]
        best = max(best, math.fsum((u * v).tolist()))
    return best


def _state_for(cfg: EnsembleConfig, index: int) -> StateSpec:
    if cfg.state == RANDOM_EIGENSTATE:
        return StateSpec.eigenstate(substream(cfg.seed, index, 1).integers(0, 2, cfg.N))
    return cfg.state


def realization_values(cfg: EnsembleConfig, index: int) -> np.ndarray | None:
    """Grid maxima for every (pair, observable) row, or ``None`` if the realization is skipped."""
    disorder = dataclasses.replace(cfg.disorder, seed=cfg.seed)
    params = sample_disorder(disorder, cfg.N, index)
    try:
        k = make_kernel(params, _state_for(cfg, index))
    except PreconditionError:
        return None
    h = build_h(params) if EFC in cfg.observables else None
    out = np.empty(len(cfg.rows))
    for i, ((xi, eta), (w, w2)) in enumerate(cfg.rows):
        if (w, w2) == EFC:
            out[i] = eigenfunction_correlator(h, xi, eta)
        else:
            out[i] = max(abs(spin_correlation(k, xi, eta, float(t), w, w2)) for t in cfg.time_grid)
    return out


def _worker(args):
    cfg_json, indices = args
    cfg = EnsembleConfig.from_json(cfg_json)
    with threadpool_limits(1):
        return [(i, realization_values(cfg, i)) for i in indices]


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    config: EnsembleConfig
    rows: list
    skipped: int

    @property
    def effective(self) -> int:
        return self.config.realizations - self.skipped

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in self.rows:
            writer.writerow(
                [r["pair_xi"], r["pair_eta"], r["w"], r["w2"], r["distance"], fmt(r["mean"]), fmt(r["stderr"]), r["n_effective"]]
            )
        return buf.getvalue()

    def fits(self) -> dict:
        """One decay fit per observable over the pair distances (means at equal distance are averaged)."""
        out = {}
        for o in self.config.observables:
            sel = [r for r in self.rows if (r["w"], r["w2"]) == o]
            dist = sorted({r["distance"] for r in sel})
            means = [math.fsum(r["mean"] for r in sel if r["distance"] == d) / sum(1 for r in sel if r["distance"] == d) for d in dist]
            key = f"{o[0]},{o[1]}"
            try:
                out[key] = fit_decay(dist, means).to_json()
            except FitError as exc:
                out[key] = {"error": str(exc)}
        return out

    def summary(self) -> dict:
        return {
            "config": self.config.to_json(),
            "requested": self.config.realizations,
            "effective": self.effective,
            "skipped": self.skipped,
            "sup_surrogate": "max over time_grid",
            "fits": self.fits(),
        }


def _reduce(cfg: EnsembleConfig, values: list) -> list:
    rows = []
    good = [v for v in values if v is not None]
    n = len(good)
    stack = np.array(good) if n else np.zeros((0, len(cfg.rows)))
    for i, ((xi, eta), (w, w2)) in enumerate(cfg.rows):
        col = stack[:, i]
        mean = math.fsum(col.tolist()) / n if n else math.nan
        if n > 1:
            var = math.fsum(((col - mean) ** 2).tolist()) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0 if n == 1 else math.nan
        rows.append(
            {"pair_xi": xi, "pair_eta": eta, "w": w, "w2": w2, "distance": abs(xi - eta), "mean": mean, "stderr": se, "n_effective": n}
        )
    return rows


def run_ensemble(cfg: EnsembleConfig, workers: int = 1, skip_limit: float = SKIP_LIMIT) -> EnsembleResult:
    """Mean and standard error of the per-realization grid maxima.

    Raises SkipOverflowError if more than ``skip_limit`` of the realizations
    had to be skipped; the partial result is attached as ``.result``.
    """
    indices = list(range(cfg.realizations))
    if workers <= 1:
        with threadpool_limits(1):
            values = [realization_values(cfg, i) for i in indices]
    else:
        chunks = [indices[j::workers] for j in range(workers)]
        payload = [(cfg.to_json(), c) for c in chunks if c]
        by_index = {}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_worker, payload):
                by_index.update(part)
        values = [by_index[i] for i in indices]
    skipped = sum(1 for v in values if v is None)
    result = EnsembleResult(cfg, _reduce(cfg, values), skipped)
    if skipped > skip_limit * cfg.realizations:
        err = SkipOverflowError(f"{skipped} of {cfg.realizations} realizations skipped", skipped, cfg.realizations)
        err.result = result
        raise err
    return result


# ---------------------------------------------------------------------------
# multipoint determinant bound on the isotropic chain


@dataclass(eq=False)
class FermionPropagator:
    """``rho(s, t) = varrho e^{-2i(s-t)h}`` on the one-particle block ``h`` of an isotropic chain.

    ``varrho = (1 - tanh(beta h)) / 2`` is a Fermi function, so every
    ``rho(s, t)`` is a contraction.
    """

    h: np.ndarray
    beta: float
    energies: np.ndarray = field(init=False)
    vectors: np.ndarray = field(init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.energies, self.vectors = np.linalg.eigh(self.h)

    @classmethod
    def from_params(cls, params, beta: float) -> "FermionPropagator":
        from .xychain import block_form_parts

        a, b = block_form_parts(params)
        if np.any(b != 0):
            raise StructuralError("the one-particle reduction needs gamma = 0")
        return cls(a, float(beta))

    def __call__(self, tau: float) -> np.ndarray:
        """``rho(s, t)`` for ``s - t = tau``."""
        tau = float(tau)
        g = self._cache.get(tau)
        if g is None:
            occ = 0.5 * (1.0 - np.tanh(self.beta * self.energies))
            v = self.vectors
            g = (v * (occ * np.exp(-2j * tau * self.energies))) @ v.conj().T
            self._cache[tau] = g
        return g

    def rho_hat(self, time_grid) -> np.ndarray:
        """``max_{s, t in grid} |rho(s, t)_{xy}|`` as a site array."""
        grid = np.asarray(time_grid, dtype=float)
        taus = np.unique(np.subtract.outer(grid, grid))
        out = np.zeros(self.h.shape)
        for tau in taus:
            np.maximum(out, np.abs(self(tau)), out=out)
        return out


def det_bound_experiment(params, beta: float, time_grid, configs: int, seed: int, max_n: int = 6, time_samples: int = 64) -> list:
    """Compare sampled multipoint determinants with the decay bound built from measured ``(C, mu)``.

    ``(C, mu)`` are read off ``rho_hat`` so that the two-point decay
    hypothesis holds exactly on the chain; ``mu0 = mu / 2``. The left side
    is a maximum over ``time_samples`` random time tuples (plus the
    equal-time tuple), which can only underestimate the supremum.
    """
    from .bounds import BoundReport, DecayProfile, FermionConfigPair, RhoHat, distance_D, tail_sum_I, thm_det_rhs, trial_rng

    prop = FermionPropagator.from_params(params, beta)
    grid = np.asarray(time_grid, dtype=float)
    C, mu = RhoHat(prop.rho_hat(grid)).fit_exponential()
    mu0 = 0.5 * mu
    K = DecayProfile.exponential()
    I = tail_sum_I(mu0, K)
    N = params.N
    reports = []
    for trial in range(configs):
        rng = trial_rng(seed, trial)
        n = int(rng.integers(1, min(max_n, N) + 1))
        c = FermionConfigPair(np.sort(rng.choice(N, n, replace=False)) + 1, np.sort(rng.choice(N, n, replace=False)) + 1)
        xi, yi = c.x - 1, c.y - 1
        lhs = 0.0
        for sample in range(time_samples + 1):
            s = np.zeros(n) if sample == 0 else rng.choice(grid, n)
            t = np.zeros(n) if sample == 0 else rng.choice(grid, n)
            m = np.array([[prop(s[j] - t[k])[xi[j], yi[k]] for k in range(n)] for j in range(n)])
            lhs = max(lhs, abs(np.linalg.det(m)))
        D = distance_D(c)
        reports.append(BoundReport.make(lhs, thm_det_rhs(C, mu, mu0, K, D, I=I), kind="thm-det", n=n, D=D, C=C, mu=mu, mu0=mu0))
    return reports
