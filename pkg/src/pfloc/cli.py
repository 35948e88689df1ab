"""Command-line entry point.

Exit codes are stable: 0 ok, 2 parse error, 3 structural error, 4 route
disagreement, 5 bound violation, 6 too many skipped realizations.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import fuzz_det, fuzz_pf, summarize
from .ensemble import EnsembleConfig, fit_decay, run_ensemble
from .errors import FitError, PflocError, SkipOverflowError
from .io import digest, fmt, matrix_from_json
from .quasifree import make_kernel, sigma3_expectation, spin_correlation
from .skewlin import SkewMatrix, pfaffian_elimination, pfaffian_laplace
from .xychain import ChainParams, StateSpec

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_STRUCTURE = 3
EXIT_ROUTE = 4
EXIT_VIOLATION = 5
EXIT_SKIP = 6

ROUTE_TOL = 1e-9


class ParseError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config_digest: str
    seed: int | None
    tool_version: str = __version__
    started: str | None = None
    finished: str | None = None

    def embedded(self) -> dict:
        """Reproducible part of the manifest (no timestamps)."""
        d = asdict(self)
        d.pop("started")
        d.pop("finished")
        return d

    def sidecar(self) -> dict:
        return asdict(self)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read JSON from {path}: {exc}") from exc


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _write_sidecar(out: Path | None, name: str, manifest: RunManifest) -> None:
    manifest.finished = _now()
    if out is not None:
        (out / f"{name}.manifest.json").write_text(json.dumps(manifest.sidecar(), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# pf


def cmd_pf(args) -> int:
    path = args.matrix or args.config
    if path is None:
        raise ParseError("pf needs a matrix file")
    raw = _load_json(path)
    try:
        m = matrix_from_json(raw)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    manifest = RunManifest("pf", digest(raw), None, started=_now())
    skew = SkewMatrix.from_array(m)
    value = pfaffian_laplace(skew) if args.algorithm == "laplace" else pfaffian_elimination(skew)
    doc = {"re": value.real, "im": value.imag, "algorithm": args.algorithm, "manifest": manifest.embedded()}
    _write(args.out, "pf.json", json.dumps(doc, sort_keys=True) + "\n")
    _write_sidecar(args.out, "pf.json", manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# chain-corr


def _chain_from_json(obj: dict) -> ChainParams:
    if "mu" in obj:
        return ChainParams.from_json(obj)
    return ChainParams.homogeneous(int(obj["N"]), float(obj.get("mu_value", 1.0)), float(obj.get("gamma_value", 0.0)), obj.get("nu", 0.0))


def chain_corr_rows(cfg: dict, route: str) -> tuple[list, float]:
    """Rows ``(xi, eta, t, w, w2, value[, twisted value])`` and the largest route gap.

    An observable ``[w, 0]`` yields the one-point value ``<sigma^w_xi>`` with
    ``eta`` reported as 0.
    """
    params = _chain_from_json(cfg["chain"])
    k = make_kernel(params, StateSpec.from_json(cfg["state"]))
    pairs = [tuple(int(a) for a in p) for p in cfg["pairs"]]
    times = [float(t) for t in cfg.get("times", [0.0])]
    obs = [tuple(int(a) for a in o) for o in cfg.get("observables", [[a, b] for a in (1, 2, 3) for b in (1, 2, 3)])]
    rows, gap = [], 0.0
    for xi, eta in pairs:
        for t in times:
            for w, w2 in obs:
                if w2 == 0:
                    one = complex(sigma3_expectation(k, xi)) if w == 3 else 0j
                    rows.append((xi, 0, t, w, 0, one, one if route == "both" else None))
                    continue
                first = spin_correlation(k, xi, eta, t, w, w2, "twisted" if route == "twisted" else "direct")
                second = None
                if route == "both":
                    second = spin_correlation(k, xi, eta, t, w, w2, "twisted")
                    gap = max(gap, abs(first - second))
                rows.append((xi, eta, t, w, w2, first, second))
    return rows, gap


def cmd_chain_corr(args) -> int:
    if args.config is None:
        raise ParseError("chain-corr needs --config")
    cfg = _load_json(args.config)
    try:
        cfg["chain"], cfg["state"], cfg["pairs"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"chain-corr config is missing {exc}") from exc
    manifest = RunManifest("chain-corr", digest(cfg), None, started=_now())
    rows, gap = chain_corr_rows(cfg, args.route)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    head = ["xi", "eta", "t", "w", "w2", "re", "im"]
    if args.route == "both":
        head += ["re_twisted", "im_twisted"]
    writer.writerow(head)
    for xi, eta, t, w, w2, v, v2 in rows:
        line = [xi, eta, fmt(t), w, w2, fmt(v.real), fmt(v.imag)]
        if args.route == "both":
            line += [fmt(v2.real), fmt(v2.imag)]
        writer.writerow(line)
    _write(args.out, "chain_corr.csv", buf.getvalue())
    _write_sidecar(args.out, "chain_corr.csv", manifest)
    if args.route == "both" and gap > ROUTE_TOL:
        print(f"route disagreement: max |direct - twisted| = {gap:.3e} > {ROUTE_TOL}", file=sys.stderr)
        return EXIT_ROUTE
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify-bounds


def cmd_verify_bounds(args) -> int:
    if args.trials < 1:
        raise ParseError("--trials must be >= 1")
    seed = 0 if args.seed is None else args.seed
    manifest = RunManifest("verify-bounds", digest({"kind": args.kind, "trials": args.trials, "seed": seed}), seed, started=_now())
    reports = fuzz_det(args.trials, seed) if args.kind == "det" else fuzz_pf(args.trials, seed)
    summary = summarize(reports)
    summary["manifest"] = manifest.embedded()
    lines = [r.to_line() for r in reports] + [json.dumps(summary, sort_keys=True)]
    _write(args.out, f"bounds_{args.kind}.jsonl", "\n".join(lines) + "\n")
    _write_sidecar(args.out, f"bounds_{args.kind}.jsonl", manifest)
    if summary["violations"]:
        print(f"{summary['violations']} bound violations", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# ensemble and fit


def cmd_ensemble(args) -> int:
    if args.config is None:
        raise ParseError("ensemble needs --config")
    raw = _load_json(args.config)
    try:
        cfg = EnsembleConfig.from_json(raw)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"ensemble config is missing or malformed: {exc}") from exc
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = args.out if args.out is not None else Path(".")
    manifest = RunManifest("ensemble", digest(cfg.to_json()), cfg.seed, started=_now())
    code = EXIT_OK
    try:
        result = run_ensemble(cfg, workers=args.workers)
    except SkipOverflowError as exc:
        print(str(exc), file=sys.stderr)
        result, code = exc.result, EXIT_SKIP
    summary = result.summary()
    summary["manifest"] = manifest.embedded()
    _write(out, "ensemble.csv", result.to_csv())
    _write(out, "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_sidecar(out, "ensemble.csv", manifest)
    return code


def cmd_fit(args) -> int:
    if args.config is None:
        raise ParseError("fit needs --config pointing at an ensemble CSV")
    try:
        rows = list(csv.DictReader(io.StringIO(Path(args.config).read_text())))
        data = [(int(r["w"]), int(r["w2"]), int(r["distance"]), float(r["mean"])) for r in rows]
    except (OSError, KeyError, ValueError) as exc:
        raise ParseError(f"cannot read ensemble CSV: {exc}") from exc
    fits = {}
    for o in sorted({(w, w2) for w, w2, _, _ in data}):
        sel = sorted((d, m) for w, w2, d, m in data if (w, w2) == o)
        dist = sorted({d for d, _ in sel})
        means = [float(np.mean([m for d2, m in sel if d2 == d])) for d in dist]
        try:
            fits[f"{o[0]},{o[1]}"] = fit_decay(dist, means).to_json()
        except FitError as exc:
            fits[f"{o[0]},{o[1]}"] = {"error": str(exc)}
    _write(args.out, "fits.json", json.dumps(fits, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pfloc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"pfloc {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", type=Path, help="input JSON (matrix, chain or ensemble config)")
        sp.add_argument("--out", type=Path, help="output directory (default: stdout, or . for ensemble)")
        sp.add_argument("--seed", type=int, help="seed; overrides the config value")

    sp = sub.add_parser("pf", help='pfaffian of a skew matrix given as {"dim", "entries": [[re, im], ...]}')
    sp.add_argument("matrix", nargs="?", type=Path, help="matrix JSON file (same as --config)")
    sp.add_argument("--algorithm", choices=("elimination", "laplace"), default="elimination")
    common(sp)
    sp.set_defaults(func=cmd_pf)

    sp = sub.add_parser("chain-corr", help="spin correlators of one XY chain as CSV")
    sp.add_argument("--route", choices=("direct", "twisted", "both"), default="direct")
    common(sp)
    sp.set_defaults(func=cmd_chain_corr)

    sp = sub.add_parser("verify-bounds", help="fuzz the bordered determinant or pfaffian bound (JSON lines)")
    sp.add_argument("--kind", choices=("det", "pf"), default="det")
    sp.add_argument("--trials", type=int, default=1000)
    common(sp)
    sp.set_defaults(func=cmd_verify_bounds)

    sp = sub.add_parser("ensemble", help="disorder ensemble: CSV of grid-max statistics plus JSON summary")
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("fit", help="exponential decay fits of an ensemble CSV")
    common(sp)
    sp.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PflocError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURE


if __name__ == "__main__":
    sys.exit(main())
