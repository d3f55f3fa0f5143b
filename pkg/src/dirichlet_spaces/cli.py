"""Command-line experiment runner.

Every subcommand prints (or writes to --out) a JSON report whose header carries the
package version, the seed and a hash of the configuration. Exit status: 0 when the
run's check passes, 2 when it fails, 64 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, bohr, compose, dseries, embed, families, numth, sampling

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# argument value parsing
# ---------------------------------------------------------------------------

def parse_number(text: str) -> float:
    """'1e7', '3/2', '2^-3', '0.25'."""
    t = str(text).strip()
    m = re.fullmatch(r"([-+]?[0-9.]+)\^([-+]?[0-9.]+)", t)
    if m:
        return float(m.group(1)) ** float(m.group(2))
    if "/" in t:
        return float(Fraction(t))
    return float(t)


def parse_count(text: str) -> int:
    v = parse_number(text)
    if v != int(v) or v < 1:
        raise UsageError(f"expected a positive integer, got {text!r}")
    return int(v)


def parse_grid(text: str) -> list[float]:
    """'a..b' is the geometric grid with ratio 2 from a to b inclusive; otherwise a comma list."""
    t = str(text).strip()
    if ".." in t:
        lo, hi = (parse_number(x) for x in t.split(".."))
        if lo <= 0 or hi <= 0:
            raise UsageError("grid endpoints must be positive")
        k0, k1 = math.log2(lo), math.log2(hi)
        if abs(k0 - round(k0)) > 1e-9 or abs(k1 - round(k1)) > 1e-9:
            raise UsageError("'a..b' grids need powers of two at both ends")
        step = 1 if k1 >= k0 else -1
        return [2.0 ** k for k in range(round(k0), round(k1) + step, step)]
    return [parse_number(x) for x in t.split(",") if x.strip()]


def _load_json_arg(text: str):
    if text.startswith("@"):
        return json.loads(Path(text[1:]).read_text())
    return json.loads(text)


def parse_series_arg(text: str, N: int | None = None) -> dseries.DirichletCoeffs:
    t = text.strip()
    try:
        if t.startswith("{") or t.startswith("@"):
            obj = _load_json_arg(t)
            if "N" not in obj:
                obj = dict(obj, N=max(int(r[0]) for r in obj["coeffs"]))
            f = dseries.DirichletCoeffs.from_json(obj)
            return f.padded(N) if N else f
        return dseries.parse_series(t, N)
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read series {text!r}: {exc}") from exc


def parse_symbol_arg(text: str) -> bohr.Symbol:
    t = text.strip()
    try:
        if t.startswith("{") or t.startswith("@"):
            return bohr.Symbol.from_json(_load_json_arg(t))
        return bohr.Symbol.from_series(dseries.parse_series(t))
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read symbol {text!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# config and output
# ---------------------------------------------------------------------------

_NOT_HASHED = {"out", "threads", "format", "plot", "func", "export"}


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict
    seed: int = 0
    samples: int | None = None
    out: str | None = None
    fmt: str = "json"
    plot: str | None = None
    threads: int = 1

    def config_hash(self) -> str:
        body = {"subcommand": self.subcommand, "params": self.params, "seed": self.seed,
                "samples": self.samples}
        return hashlib.sha256(json.dumps(body, sort_keys=True, default=str).encode()).hexdigest()[:16]

    def header(self) -> dict:
        return {"version": __version__, "subcommand": self.subcommand, "seed": self.seed,
                "config_hash": self.config_hash(), "params": self.params, "samples": self.samples}


@dataclass
class Outcome:
    passed: bool
    results: dict
    table: list = field(default_factory=list)      # rows for csv output
    columns: list = field(default_factory=list)
    plot: list = field(default_factory=list)       # (x, y) pairs


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if hasattr(x, "to_json"):
        return _jsonable(x.to_json())
    return x


def emit(cfg: ExperimentConfig, outcome: Outcome, stdout=None) -> None:
    stdout = stdout or sys.stdout
    if cfg.fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + json.dumps(_jsonable(cfg.header()), sort_keys=True) + "\n")
        buf.write(f"# pass={str(outcome.passed).lower()}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(outcome.columns)
        for row in outcome.table:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        text = buf.getvalue()
    else:
        doc = {"header": cfg.header(), "pass": outcome.passed, "results": outcome.results}
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)
    if cfg.plot:
        with open(cfg.plot, "w") as fh:
            for x, y in outcome.plot:
                fh.write(f"{float(x)!r} {float(y)!r}\n")


def read_csv_report(text: str) -> tuple[dict, list[dict]]:
    """Inverse of the csv emitter: (header, rows as dicts)."""
    lines = text.splitlines()
    header = json.loads(lines[0][2:])
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    return header, list(csv.DictReader(body))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_symbol_check(a, cfg) -> Outcome:
    sym = bohr.classify_symbol(parse_symbol_arg(a.symbol), tol=a.tol, grid=a.grid,
                               refine_iters=a.refine_iters)
    res = sym.to_json()
    res["notes"] = sym.notes
    return Outcome(sym.status == "G-verified", res,
                   [[sym.status, sym.min_re, sym.unrestricted_range]],
                   ["status", "min_re", "unrestricted_range"])


def cmd_compose(a, cfg) -> Outcome:
    phi = parse_symbol_arg(a.symbol)
    f = parse_series_arg(a.input)
    try:
        g = compose.compose_coeffs(f, phi, a.n_out, force=a.force)
    except compose.RefusedSymbol as exc:
        return Outcome(False, {"error": str(exc)})
    bound = compose.compose_tail_bound(f, phi, a.n_out, a.sigma)
    rows = [[n, c.real, c.imag] for n, c in g.items()]
    return Outcome(True, {"series": g.to_json(), "tail_bound": bound, "sigma": a.sigma},
                   rows, ["n", "re", "im"], [(n, abs(complex(re, im))) for n, re, im in rows])


def cmd_opnorm(a, cfg) -> Outcome:
    phi = parse_symbol_arg(a.symbol)
    Ns = [int(x) for x in parse_grid(a.n)]
    norms = []
    for N in Ns:
        T = compose.operator_matrix(phi, a.alpha, a.beta, N, N)
        norms.append(compose.estimate_operator_norm(T, a.iters, seed=cfg.seed))
        if a.export and N == Ns[-1]:
            T.export(a.export, a.export_format)
    last = norms[-3:] if len(norms) >= 3 else norms
    rel = (max(last) - min(last)) / max(last)
    growth = norms[-1] / norms[0] - 1
    res = {"N": Ns, "norms": norms, "relative_change_last3": rel, "growth_total": growth,
           "stable": rel < a.stable_tol}
    passed = (rel < a.stable_tol) if a.expect == "stable" else (
        growth > a.growth_tol if a.expect == "grow" else True)
    return Outcome(passed, res, list(zip(Ns, norms)), ["N", "norm"], list(zip(Ns, norms)))


def cmd_carleson(a, cfg) -> Outcome:
    phi = parse_symbol_arg(a.symbol)
    eps = parse_grid(a.eps)
    taus = [parse_number(t) for t in a.tau.split(",")]
    n = cfg.samples or 10**6
    fits, rows, worst = [], [], None
    for i, tau in enumerate(taus):
        ests = sampling.estimate_pushforward_grid(phi, a.beta, eps, n, cfg.seed + i, tau=tau,
                                                  workers=cfg.threads)
        for e, m in zip(eps, ests):
            rows.append([tau, e, m.mean, m.stderr, m.n_samples, m.seed])
        try:
            fit = sampling.fit_exponent(list(zip(eps, ests)))
            fits.append({"tau": tau, **fit.to_json()})
            if worst is None or fit.slope < worst:
                worst = fit.slope
        except sampling.InsufficientData as exc:
            fits.append({"tau": tau, "error": str(exc)})
    passed = worst is not None
    if a.expect is not None:
        passed = worst is not None and abs(worst - a.expect) <= a.slope_tol
    res = {"fits": fits, "worst_slope": worst,
           "estimates": [{"tau": r[0], "epsilon": r[1], "mean": r[2], "stderr": r[3], "n": r[4],
                          "seed": r[5]} for r in rows]}
    return Outcome(passed, res, rows, ["tau", "epsilon", "mean", "stderr", "n", "seed"],
                   [(r[1], r[2]) for r in rows if r[2] > 0])


def cmd_hpnorm(a, cfg) -> Outcome:
    f = parse_series_arg(a.input)
    n = cfg.samples or 10**5
    est = sampling.estimate_hp_norm(f, a.p, n, cfg.seed, workers=cfg.threads)
    res = {"estimate": est.to_json(), "d0_norm": dseries.h2_norm(f)}
    row = [a.p, est.mean, est.stderr, est.n_samples]
    if a.besicovitch_T:
        res["besicovitch"] = sampling.besicovitch_norm(f, a.p, a.besicovitch_T, a.nt)
    return Outcome(True, res, [row], ["p", "mean", "stderr", "n"])


def _avg_order_reference(spec: numth.MultiplicativeSpec):
    """Exponent e with S(x) ~ C x (log x)^e, for the kinds where it is known."""
    if spec.kind == "omega_power" and 0 < spec.param < 2:
        return spec.param - 1.0
    if spec.kind == "omega_power" and spec.param == 2:
        return 2.0  # y = 2: the average order picks up an extra log
    if spec.kind == "divisor_power":
        return 2.0 ** spec.param - 1.0
    if spec.kind == "generalized_divisor":
        return spec.param - 1.0
    return None


def cmd_avg_order(a, cfg) -> Outcome:
    spec = numth.parse_spec(a.spec)
    x = parse_count(a.x)
    lo = min(10**6, x)
    cps = sorted({int(round(v)) for v in np.geomspace(max(10, lo // 100), x, a.points)})
    sums = numth.sieve_sum(spec, x, cps, workers=cfg.threads)
    e = _avg_order_reference(spec) if a.log_power is None else a.log_power
    rows = []
    for t, s in sums:
        ratio = s / (t * math.log(t) ** e) if e is not None else s / t
        rows.append([t, s, ratio])
    band = [r[2] for r in rows if r[0] >= lo]
    variation = max(band) / min(band) - 1 if band else float("nan")
    res = {"spec": spec.label(), "log_power": e, "rows": rows, "variation": variation,
           "band_from": lo}
    return Outcome(variation < a.max_variation, res, rows, ["x", "S", "ratio"],
                   [(r[0], r[2]) for r in rows])


def cmd_embed(a, cfg) -> Outcome:
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    n = cfg.samples
    if a.check == "weissler":
        rows = []
        for _ in range(a.count):
            c = families.random_disc_polynomial(rng, int(rng.integers(0, a.degree + 1)))
            m = embed.weissler_margin(c, a.p)
            rows.append([a.p, m.lhs, m.rhs, m.margin])
        worst = min(r[3] for r in rows)
        rep = embed.report("weissler", {"p": a.p, "count": a.count}, None, None, worst, 1e-6,
                           worst >= -1e-6)
        return Outcome(rep["pass"], rep, rows, ["p", "lhs", "rhs", "margin"])
    if a.check == "helson":
        fam = [families.random_polynomial(rng, int(rng.integers(2, a.max_n + 1)),
                                          dim=int(rng.integers(1, a.max_dim + 1)), density=0.5)
               for _ in range(a.count)]
        ests = sampling.estimate_hp_norm_family(fam, 1.0, n or 10**5, cfg.seed, workers=cfg.threads)
        rows = []
        for f, est in zip(fam, ests):
            d1, est, sig = embed.helson_margin(f, estimate=est)
            rows.append([d1, est.mean, est.stderr, sig])
        worst = min(r[3] for r in rows)
        rep = embed.report("helson", {"count": a.count}, None, None, worst, -3.0, worst >= -3.0)
        return Outcome(rep["pass"], rep, rows, ["d1", "h1", "stderr", "margin_sigmas"])
    if a.check == "local-p2":
        rows = []
        for _ in range(a.count):
            f = families.random_polynomial(rng, int(rng.integers(2, a.max_n + 1)), density=0.5)
            m = embed.local_embedding_p2(f)
            rows.append([f.N, m.lhs, m.rhs, m.extra["ratio"]])
        worst = max(r[3] for r in rows)
        rep = embed.report("local-p2", {"count": a.count}, worst, None, None, None, True,
                           empirical_constant=worst)
        return Outcome(True, rep, rows, ["N", "lhs", "rhs", "ratio"])
    if a.check == "bergman":
        if a.input:
            fam = [parse_series_arg(a.input)]
        else:
            fam = [families.random_polynomial(rng, int(rng.integers(2, a.max_n + 1)), density=0.5)
                   for _ in range(a.count)]
        ests = sampling.estimate_hp_norm_family(fam, a.p, n or 10**5, cfg.seed, workers=cfg.threads)
        rows = [[f.N, embed.bergman_lhs(f, a.p), e.mean, e.stderr] for f, e in zip(fam, ests)]
        for r in rows:
            r.append(r[1] / r[2])
        worst = max(r[4] for r in rows)
        rep = embed.report("bergman", {"p": a.p, "count": len(fam)}, None, None, worst, None,
                           math.isfinite(worst), max_ratio=worst)
        return Outcome(rep["pass"], rep, rows, ["N", "lhs", "hp", "stderr", "ratio"])
    # optimality
    eps = parse_grid(a.eps)
    fit = embed.optimality_probe(a.p, a.beta, eps)
    theory = embed.optimality_slope_theory(a.p, a.beta)
    ok = abs(fit.slope - theory) <= a.slope_tol
    rep = embed.report("optimality", {"p": a.p, "beta": a.beta}, fit.slope, theory,
                       fit.slope - theory, a.slope_tol, ok, fit=fit.to_json())
    rows = [[e, float(v)] for e, v in fit.grid]
    return Outcome(ok, rep, rows, ["epsilon", "value"], rows)


def cmd_hilbert(a, cfg) -> Outcome:
    if a.mode == "ratio":
        rng = np.random.Generator(np.random.Philox(cfg.seed))
        fam = [families.random_polynomial(rng, int(rng.integers(2, a.max_n + 1)), density=0.3)
               for _ in range(a.count)]
        out = embed.hilbert_ratio(a.p, fam, cfg.samples or 10**5, cfg.seed)
        bound = dseries.h2_norm(dseries.hilbert_symbol_g(a.g_n))
        ok = out["max_ratio"] <= bound + 1e-3 if a.p == 2 else math.isfinite(out["max_ratio"])
        rep = embed.report("hilbert-ratio", {"p": a.p, "count": a.count}, out["max_ratio"], bound,
                           bound - out["max_ratio"], 1e-3, ok)
        rows = [[i, r] for i, r in enumerate(out["ratios"])]
        return Outcome(ok, rep, rows, ["index", "ratio"])
    if a.mode == "h4":
        cps = [int(v) for v in parse_grid(a.n)] if ".." in a.n else [parse_count(v) for v in a.n.split(",")]
        rep = embed.h4_growth(cps)
        rows = list(zip(rep["N"], rep["T"]))
        return Outcome(rep["no_plateau"], rep, rows, ["N", "T"], rows)
    # dichotomy
    xs = [int(round(v)) for v in np.geomspace(10**3, parse_count(a.x), a.points)]
    cases = [tuple(parse_number(v) for v in c.split(":")) for c in a.cases.split(",")]
    reps = [embed.convergence_dichotomy(al, be, xs, workers=cfg.threads) for al, be in cases]
    ok = all(r.convergent == r.theory_convergent for r in reps)
    rows = [[r.alpha, r.beta, r.increment_exponent, r.theory_exponent, r.convergent] for r in reps]
    return Outcome(ok, {"cases": [r.to_json() for r in reps]}, rows,
                   ["alpha", "beta", "fitted", "theory", "convergent"])


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=parse_count, default=None)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--plot", default=None, help="write two-column plot data here")

    p = _Parser(prog="dirichlet-spaces", description="Dirichlet-series space experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    s = sub.add_parser("symbol-check", parents=[common])
    s.add_argument("--symbol", required=True)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--grid", type=int, default=720)
    s.add_argument("--refine-iters", type=int, default=40)
    s.set_defaults(func=cmd_symbol_check)

    s = sub.add_parser("compose", parents=[common])
    s.add_argument("--symbol", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--n-out", type=parse_count, default=64)
    s.add_argument("--sigma", type=float, default=3.0)
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("opnorm", parents=[common])
    s.add_argument("--symbol", required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--n", default="2^4..2^12")
    s.add_argument("--iters", type=int, default=200)
    s.add_argument("--expect", choices=["stable", "grow", "none"], default="none")
    s.add_argument("--stable-tol", type=float, default=0.02)
    s.add_argument("--growth-tol", type=float, default=0.20)
    s.add_argument("--export", default=None)
    s.add_argument("--export-format", choices=["binary", "csv"], default="binary")
    s.set_defaults(func=cmd_opnorm)

    s = sub.add_parser("carleson", parents=[common])
    s.add_argument("--symbol", required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--eps", default="2^-3..2^-9")
    s.add_argument("--tau", default="0")
    s.add_argument("--expect", type=float, default=None)
    s.add_argument("--slope-tol", type=float, default=0.15)
    s.set_defaults(func=cmd_carleson)

    s = sub.add_parser("hpnorm", parents=[common])
    s.add_argument("--input", required=True)
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--besicovitch-T", type=float, default=None)
    s.add_argument("--nt", type=parse_count, default=200_001)
    s.set_defaults(func=cmd_hpnorm)

    s = sub.add_parser("avg-order", parents=[common])
    s.add_argument("--spec", required=True)
    s.add_argument("--x", default="1e8")
    s.add_argument("--points", type=int, default=13)
    s.add_argument("--log-power", type=float, default=None)
    s.add_argument("--max-variation", type=float, default=0.20)
    s.set_defaults(func=cmd_avg_order)

    s = sub.add_parser("embed", parents=[common])
    s.add_argument("check", choices=["weissler", "helson", "local-p2", "bergman", "optimality"])
    s.add_argument("--p", type=float, default=1.5)
    s.add_argument("--beta", type=float, default=1 / 3)
    s.add_argument("--eps", default="2^-6..2^-12")
    s.add_argument("--slope-tol", type=float, default=0.08)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--degree", type=int, default=8)
    s.add_argument("--max-n", type=int, default=50)
    s.add_argument("--max-dim", type=int, default=3)
    s.add_argument("--input", default=None)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("hilbert", parents=[common])
    s.add_argument("mode", choices=["ratio", "h4", "dichotomy"])
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--count", type=int, default=500)
    s.add_argument("--max-n", type=int, default=1000)
    s.add_argument("--g-n", type=parse_count, default=10**6)
    s.add_argument("--n", default="1e4,1e5,1e6,1e7,1e8")
    s.add_argument("--x", default="1e8")
    s.add_argument("--points", type=int, default=11)
    s.add_argument("--cases", default="0:2,1:2,1:2.5")
    s.set_defaults(func=cmd_hilbert)
    return p


def main(argv=None, stdout=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    params = {k: v for k, v in vars(args).items()
              if k not in _NOT_HASHED and k not in ("seed", "samples", "subcommand")}
    cfg = ExperimentConfig(args.subcommand, params, args.seed, args.samples, args.out,
                           args.format, args.plot, max(1, args.threads))
    try:
        outcome = args.func(args, cfg)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except numth.ResourceBudgetError as exc:
        sys.stderr.write(f"resource budget exceeded: {exc}\n")
        return EXIT_FAIL
    except (bohr.UnsupportedSymbol, bohr.UnsupportedDimension) as exc:
        sys.stderr.write(f"unsupported: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        # domain errors raised by the library for out-of-range parameters
        sys.stderr.write(f"invalid parameter: {exc}\n")
        return EXIT_USAGE
    emit(cfg, outcome, stdout)
    return EXIT_OK if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
