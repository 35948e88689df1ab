"""The eleven acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line to the terminal summary (and prints it,
visible with ``-s``) before asserting.
"""

import itertools
import json
import os
import time

import numpy as np
import pytest

from pfloc import cli
from pfloc.bounds import fuzz_det, fuzz_pf, summarize
from pfloc.ensemble import RANDOM_EIGENSTATE, EnsembleConfig, det_bound_experiment, run_ensemble
from pfloc.errors import PreconditionError
from pfloc.oracle import build_spin_hamiltonian, exact_majorana_product, exact_state, free_energies, parity_operator, pauli
from pfloc.quasifree import MajoranaConfig, MajoranaEvent, make_kernel, spin_correlation, wick_pfaffian
from pfloc.skewlin import pfaffian_elimination, pfaffian_laplace
from pfloc.xychain import ChainParams, DisorderSpec, StateSpec, sample_disorder

from conftest import ACCEPTANCE_LINES, random_skew


def record(number, ok, detail):
    line = f"ACCEPTANCE {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def random_chain(rng, N):
    return ChainParams(N, rng.uniform(0.3, 1.5, N - 1), rng.uniform(-1, 1, N - 1), rng.uniform(-2, 2, N))


def draw_state(rng, kind, N):
    if kind == "thermal_0.5":
        return StateSpec.thermal(0.5)
    if kind == "thermal_2":
        return StateSpec.thermal(2.0)
    if kind == "ground":
        return StateSpec.ground()
    return StateSpec.eigenstate(rng.integers(0, 2, N))


def test_01_pfaffian_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_lap = 0.0
    for i in range(200):
        a = random_skew(rng, 2 * (1 + i % 5))
        e, l = pfaffian_elimination(a), pfaffian_laplace(a)
        worst_lap = max(worst_lap, abs(e - l) / max(abs(l), 1e-300))
    worst_det = 0.0
    for m in range(2, 52, 2):
        for _ in range(4):
            a = random_skew(rng, m)
            pf, det = pfaffian_elimination(a), np.linalg.det(a)
            worst_det = max(worst_det, abs(pf**2 - det) / abs(det))
    elapsed = time.perf_counter() - t0
    ok = worst_lap <= 1e-10 and worst_det <= 1e-8 and elapsed < 10
    record(1, ok, f"max rel |elim-laplace| {worst_lap:.2e} (dims 2..10), max rel |pf^2-det| {worst_det:.2e} (dims <= 50), {elapsed:.1f} s")


def test_02_pfaffian_elementary_properties():
    rng = np.random.default_rng(102)
    worst = {"swap": 0.0, "scale": 0.0, "add": 0.0}
    for _ in range(100):
        m = 2 * int(rng.integers(1, 8))
        a = random_skew(rng, m)
        pf = pfaffian_elimination(a)
        scale = max(abs(pf), 1e-300)
        i, j = rng.choice(m, 2, replace=False)
        c = complex(rng.normal(), rng.normal())
        p = np.arange(m)
        p[[i, j]] = p[[j, i]]
        worst["swap"] = max(worst["swap"], abs(pfaffian_elimination(a[np.ix_(p, p)]) + pf) / scale)
        s = np.ones(m, dtype=complex)
        s[i] = c
        worst["scale"] = max(worst["scale"], abs(pfaffian_elimination(s[:, None] * a * s[None, :]) - c * pf) / (abs(c) * scale))
        e = np.eye(m, dtype=complex)
        e[i, j] = c
        worst["add"] = max(worst["add"], abs(pfaffian_elimination(e @ a @ e.T) - pf) / scale)
    ok = max(worst.values()) <= 1e-10
    record(2, ok, "max relative deviation " + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()) + " (100 trials each)")


def test_03_bordered_determinant_bound():
    t0 = time.perf_counter()
    s = summarize(fuzz_det(10_000, seed=2024, max_size=60))
    elapsed = time.perf_counter() - t0
    ok = s["violations"] == 0 and s["trials"] == 10_000 and elapsed < 120
    record(3, ok, f"{s['trials']} matrices, {s['violations']} violations, min margin {s['min_margin']:.3e}, {elapsed:.1f} s")


def test_04_pfaffian_bound_on_wick_matrices():
    t0 = time.perf_counter()
    reps = fuzz_pf(500, seed=2024, max_N=8)
    s = summarize(reps)
    chain = [r for r in reps if r.context["source"] != "random" and r.context["applicable"]]
    elapsed = time.perf_counter() - t0
    ok = s["violations"] == 0 and len(chain) >= 100 and elapsed < 300
    record(4, ok, f"{len(chain)} certified thermal/eigenstate Wick matrices, {s['inapplicable']} inapplicable, "
                  f"{s['violations']} violations, min margin {s['min_margin']:.3e}, {elapsed:.1f} s")


@pytest.mark.slow
def test_05_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(105)
    kinds = ("thermal_0.5", "thermal_2", "eigenstate", "ground")
    worst, count = 0.0, 0
    for N in range(2, 7):
        paulis = {(w, x): pauli(w, x, N) for w in (1, 2, 3) for x in range(1, N + 1)}
        for _ in range(20):
            for kind in kinds:
                while True:
                    p = random_chain(rng, N)
                    state = draw_state(rng, kind, N)
                    try:
                        k, ex = make_kernel(p, state), exact_state(p, state)
                        break
                    except PreconditionError:
                        continue
                one = {key: ex.expectation(op) for key, op in paulis.items()}
                for xi, eta in itertools.product(range(1, N + 1), repeat=2):
                    for t in (0.0, 0.7, 3.1):
                        for w, w2 in itertools.product((1, 2, 3), repeat=2):
                            exact = ex.correlation(paulis[w, xi], paulis[w2, eta], t) - one[w, xi] * one[w2, eta]
                            for route in ("direct", "twisted"):
                                worst = max(worst, abs(spin_correlation(k, xi, eta, t, w, w2, route) - exact))
                            count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 600
    record(5, ok, f"{count} correlators x 2 routes vs 2^N diagonalization, max abs error {worst:.2e}, {elapsed:.1f} s")


def test_06_two_route_identity():
    rng = np.random.default_rng(106)
    worst, count = 0.0, 0
    for trial in range(50):
        N = 2 + trial % 11
        kind = ("thermal", "eigenstate", "ground")[trial % 3]
        while True:
            try:
                p = random_chain(rng, N)
                state = StateSpec.thermal(float(rng.uniform(0.2, 3))) if kind == "thermal" else draw_state(rng, kind, N)
                k = make_kernel(p, state)
                break
            except PreconditionError:
                continue
        t = float(rng.uniform(-4, 4))
        for xi, eta in itertools.product(range(1, N + 1), repeat=2):
            for w, w2 in itertools.product((1, 2), repeat=2):
                d = spin_correlation(k, xi, eta, t, w, w2, "direct")
                worst = max(worst, abs(d - spin_correlation(k, xi, eta, t, w, w2, "twisted")))
                count += 1
    record(6, worst <= 1e-9, f"{count} correlators over 50 trials, N = 2..12, max |direct - twisted| {worst:.2e}")


def test_07_structural_identities():
    rng = np.random.default_rng(107)
    car = 0.0
    one_point_exact = True
    mixed_exact = True
    oracle_one_point = 0.0
    wick = 0.0
    for trial in range(40):
        N = 1 + trial % 5
        p = random_chain(rng, N)
        state = (StateSpec.thermal(float(rng.uniform(0.2, 3))), StateSpec.ground())[trial % 2]
        try:
            k, ex = make_kernel(p, state), exact_state(p, state)
        except PreconditionError:
            continue
        g = k.gamma(0.0)
        car = max(car, float(np.abs(g + g.T - 2 * np.eye(2 * N)).max()))
        for xi in range(1, N + 1):
            string = [MajoranaEvent(s, f) for s in range(1, xi) for f in "+-"]
            for f in "+-":
                one_point_exact &= wick_pfaffian(k, MajoranaConfig(tuple(string + [MajoranaEvent(xi, f)]), strict=False)) == 0
            for w in (1, 2):
                oracle_one_point = max(oracle_one_point, abs(ex.expectation(pauli(w, xi, N))))
            for eta in range(1, N + 1):
                for w2 in (1, 2):
                    mixed_exact &= spin_correlation(k, xi, eta, 0.9, 3, w2) == 0
                    mixed_exact &= spin_correlation(k, eta, xi, 0.9, w2, 3) == 0
        for _ in range(5):
            modes = rng.choice(2 * N, 4)
            events = [MajoranaEvent(int(m) // 2 + 1, "+-"[int(m) % 2], float(t)) for m, t in zip(modes, rng.uniform(-2, 2, 4))]
            wick = max(wick, abs(wick_pfaffian(k, events) - exact_majorana_product(ex, events)))
    ok = car <= 1e-10 and one_point_exact and mixed_exact and oracle_one_point <= 1e-10 and wick <= 1e-10
    record(7, ok, f"CAR {car:.1e}; <sigma1,2> exactly 0: {one_point_exact} (oracle {oracle_one_point:.1e}); "
                  f"<tau_t(sigma3) sigma1,2> exactly 0: {mixed_exact}; Wick n=2 vs oracle {wick:.1e}")


def test_08_spectral_and_parity_identities():
    rng = np.random.default_rng(108)
    spec, par = 0.0, 0.0
    for trial in range(30):
        N = 1 + trial % 6
        p = random_chain(rng, N)
        lam = free_energies(p)
        predicted = np.sort([2 * np.dot(a, lam) - lam.sum() for a in itertools.product((0, 1), repeat=N)])
        spec = max(spec, float(np.abs(np.linalg.eigvalsh(build_spin_hamiltonian(p)) - predicted).max()))
        beta = float(rng.uniform(0.2, 3))
        k = make_kernel(p, StateSpec.thermal(beta))
        exact = exact_state(p, StateSpec.thermal(beta)).expectation(parity_operator(p)).real
        par = max(par, abs(exact - np.prod(-np.tanh(beta * lam))), abs(exact - k.parity_trace))
    record(8, spec <= 1e-8 and par <= 1e-10, f"max spectrum error {spec:.2e}, max parity trace error {par:.2e} (N <= 6)")


def localization_config(**kw):
    base = dict(
        N=32,
        realizations=100,
        disorder=DisorderSpec.uniform(-4, 4, mu_value=1.0, gamma_value=0.0),
        state=RANDOM_EIGENSTATE,
        pairs=tuple((1, 1 + d) for d in range(1, 21)),
        observables=((3, 3), (1, 1)),
        seed=0,
    )
    base.update(kw)
    return EnsembleConfig(**base)


@pytest.mark.slow
def test_09_localization_reproduction():
    t0 = time.perf_counter()
    res = run_ensemble(localization_config(), workers=min(4, os.cpu_count() or 1))
    fits = res.fits()
    elapsed = time.perf_counter() - t0
    ok = all("rate" in fits[o] and fits[o]["rate"] > 0 and fits[o]["r_squared"] >= 0.9 for o in ("3,3", "1,1")) and elapsed < 1800
    detail = "; ".join(f"({o}) rate {fits[o].get('rate', float('nan')):.3f} r2 {fits[o].get('r_squared', float('nan')):.3f}" for o in ("3,3", "1,1"))
    record(9, ok, f"{detail}; {res.effective}/100 realizations, {elapsed:.1f} s")


def test_10_determinant_theorem_end_to_end():
    params = sample_disorder(DisorderSpec.uniform(-4, 4, seed=0), 32, 0)
    reps = det_bound_experiment(params, beta=1.0, time_grid=0.25 * np.arange(21), configs=100, seed=10, max_n=6)
    s = summarize(reps)
    ctx = reps[0].context
    ok = s["violations"] == 0 and s["trials"] == 100
    record(10, ok, f"C {ctx['C']:.3g}, mu {ctx['mu']:.3f}, mu0 {ctx['mu0']:.3f}; 100 pairs n <= 6, "
                   f"{s['violations']} violations, min margin {s['min_margin']:.3e}")


def test_11_determinism(tmp_path):
    cfg = localization_config(N=16, realizations=12, observables=((3, 3), (1, 1), (0, 0)), pairs=tuple((1, 1 + d) for d in range(1, 9)), seed=11)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_json()))
    outputs = []
    for name, workers in (("a", 1), ("b", 1), ("c", 3)):
        assert cli.main(["ensemble", "--config", str(path), "--out", str(tmp_path / name), "--workers", str(workers)]) == 0
        outputs.append((tmp_path / name / "ensemble.csv").read_bytes())
    chain = {"chain": {"N": 8, "mu_value": 1.0, "gamma_value": 0.4, "nu": 0.3}, "state": {"kind": "thermal", "beta": 1.0},
             "pairs": [[1, 5], [6, 2]], "times": [0.0, 1.3]}
    cpath = tmp_path / "chain.json"
    cpath.write_text(json.dumps(chain))
    corr = []
    for name in ("d", "e"):
        assert cli.main(["chain-corr", "--config", str(cpath), "--out", str(tmp_path / name), "--route", "both"]) == 0
        corr.append((tmp_path / name / "chain_corr.csv").read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2] and corr[0] == corr[1]
    record(11, ok, "ensemble CSV byte-identical across 2 runs and workers 1 vs 3; chain-corr CSV byte-identical across runs")
