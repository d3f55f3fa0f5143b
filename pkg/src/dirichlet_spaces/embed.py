"""Numerical checks of embedding inequalities and of the multiplicative Hilbert matrix functional."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, kve, roots_jacobi, roots_legendre

from . import numth
from .dseries import (DirichletCoeffs, _as_coeffs, d_alpha_norm, evaluate_many, h2_norm,
                      hilbert_functional_L, hilbert_symbol_g, zeta_em, zeta_partial)
from .sampling import ExponentFit, MeasureEstimate, estimate_hp_norm, estimate_hp_norm_family, fit_exponent


@dataclass
class Margin:
    lhs: float
    rhs: float
    margin: float
    extra: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.margin))


def report(check: str, params: dict, lhs, rhs, margin, tolerance, passed: bool, **extra) -> dict:
    """Check record in the shared report layout."""
    out = {"check": check, "params": params, "lhs": lhs, "rhs": rhs, "margin": margin,
           "tolerance": tolerance, "pass": bool(passed)}
    out.update(extra)
    return out


def cayley_to_half_plane(z):
    """T(z) = 1/2 + (1 - z)/(1 + z), the disc onto Re s > 1/2."""
    z = np.asarray(z, dtype=np.complex128)
    return 0.5 + (1 - z) / (1 + z)


# ---------------------------------------------------------------------------
# disc and torus inequalities
# ---------------------------------------------------------------------------

def circle_hp_norm(coeffs, p: float, nodes: int = 1 << 14) -> float:
    """||f||_{H^p(D)} for a polynomial by the equispaced rule on the circle."""
    a = np.asarray(coeffs, dtype=np.complex128)
    if a.size > nodes:
        raise ValueError("need more nodes than coefficients")
    pad = np.zeros(nodes, dtype=np.complex128)
    pad[: a.size] = a
    vals = np.fft.ifft(pad) * nodes  # f(e^{2 pi i j / nodes})
    return float(np.mean(np.abs(vals) ** p) ** (1.0 / p))


def weissler_margin(coeffs, p: float, nodes: int = 1 << 14) -> Margin:
    """lhs = (sum |a_k|^2 (p/2)^k)^{1/2}, rhs = ||f||_{H^p(D)}, margin = rhs - lhs."""
    if not 1 <= p <= 2:
        raise ValueError("p must lie in [1, 2]")
    a = np.asarray(coeffs, dtype=np.complex128)
    k = np.arange(a.size)
    lhs = float(math.sqrt(np.sum(np.abs(a) ** 2 * (p / 2.0) ** k)))
    rhs = circle_hp_norm(a, p, nodes)
    return Margin(lhs, rhs, rhs - lhs)


def helson_margin(f: DirichletCoeffs, n_mc: int = 10**6, seed: int = 0,
                  estimate: Optional[MeasureEstimate] = None):
    """(||f||_{D_1}, H^1 estimate, (H^1 - D_1)/stderr)."""
    d1 = d_alpha_norm(f, 1.0)
    est = estimate if estimate is not None else estimate_hp_norm(f, 1.0, n_mc, seed)
    diff = est.mean - d1
    if est.stderr > 0:
        sig = diff / est.stderr
    else:
        sig = 0.0 if abs(diff) <= 1e-12 * max(1.0, d1) else math.copysign(math.inf, diff)
    return d1, est, sig


def local_embedding_p2(f: DirichletCoeffs, n_t: int = 20_001) -> Margin:
    """lhs = int_0^1 |f(1/2 + it)|^2 dt (trapezoid), rhs = sum |a_n|^2, ratio in .extra."""
    t = np.linspace(0.0, 1.0, n_t)
    lhs = float(np.trapezoid(np.abs(evaluate_many(f, 0.5 + 1j * t)) ** 2, t))
    rhs = h2_norm(f) ** 2
    ratio = lhs / rhs if rhs > 0 else float("nan")
    return Margin(lhs, rhs, rhs - lhs, {"ratio": ratio})


# ---------------------------------------------------------------------------
# half-plane Bergman quadratures
# ---------------------------------------------------------------------------

def _t_integral(lam: np.ndarray, c: np.ndarray, mu: float) -> np.ndarray:
    """int_R e^{i lam t} (c^2 + t^2)^{-mu} dt, elementwise in (lam, c), via Bessel K."""
    shape = np.broadcast_shapes(np.shape(lam), np.shape(c))
    lam = np.broadcast_to(np.abs(lam), shape)
    c = np.broadcast_to(c, shape)
    nu = mu - 0.5
    out = np.empty(shape)
    zero = lam == 0
    out[zero] = math.exp(0.5 * math.log(math.pi) + gammaln(mu - 0.5) - gammaln(mu)) * c[zero] ** (1 - 2 * mu)
    lz, cz = lam[~zero], c[~zero]
    x = cz * lz
    # kve(nu, x) = K_nu(x) e^{x}
    out[~zero] = (2 * math.sqrt(math.pi) / math.gamma(mu)) * (lz / (2 * cz)) ** nu * kve(nu, x) * np.exp(-x)
    return out


def _jacobi_rule(n: int, power: float, a: float, b: float):
    """Nodes/weights for int_a^b (x - a)^power g(x) dx."""
    x, w = roots_jacobi(n, 0.0, power)
    h = 0.5 * (b - a)
    return a + h * (x + 1), w * h ** (power + 1)


def _legendre_panels(edges, n: int):
    x, w = roots_legendre(n)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        xs.append(lo + h * (x + 1))
        ws.append(w * h)
    return np.concatenate(xs), np.concatenate(ws)


def _sigma_rule(p: float, n: int = 48):
    """Nodes x = sigma - 1/2 > 0 and weights for int_0^inf x^{2/p-2} g(x) dx.

    [0, 1/8] by Gauss-Jacobi with the endpoint power, [1/8, 1] by Legendre panels,
    [1, inf) through x = 1/w with the w^{2/p-1} endpoint behaviour of the mapped
    integrand absorbed into a second Gauss-Jacobi rule.
    """
    e = 2.0 / p - 2.0
    x0, w0 = _jacobi_rule(n, e, 0.0, 0.125)
    x1, w1 = _legendre_panels([0.125, 0.25, 0.5, 1.0], n)
    w1 = w1 * x1 ** e
    # int_1^inf x^e g(x) dx = int_0^1 w^{-e-2} g(1/w) dw; split w^{-e-2} = w^{2/p-1} * w^{-4/p+1}
    ww, wwt = _jacobi_rule(n, 2.0 / p - 1.0, 0.0, 1.0)
    x2 = 1.0 / ww
    w2 = wwt * ww ** (1.0 - 4.0 / p)
    return np.concatenate([x0, x1, x2]), np.concatenate([w0, w1, w2])


def bergman_lhs(f: DirichletCoeffs, p: float, n_sigma: int = 48) -> float:
    """(int_R int_{1/2}^inf |f|^2 (sigma - 1/2)^{2/p-2} |s + 1/2|^{-4/p} dsigma dt)^{1/2}.

    The t-integral of each cross term a_m conj(a_n) (mn)^{-sigma} (n/m)^{it} against
    |s + 1/2|^{-4/p} is done in closed form (Bessel K); the remaining sigma-integral
    uses a Gauss-Jacobi/Legendre rule adapted to the endpoint power.
    """
    if not 1 <= p < 2:
        raise ValueError("bergman_lhs needs p in [1, 2)")
    f = _as_coeffs(f)
    ns = f.support()
    if ns.size == 0:
        return 0.0
    a = f.a[ns - 1]
    mu = 2.0 / p
    ln = np.log(ns.astype(np.float64))
    i, j = np.triu_indices(ns.size)
    coef = np.real(a[i] * np.conj(a[j])) * np.where(i == j, 1.0, 2.0)
    keep = coef != 0
    i, j, coef = i[keep], j[keep], coef[keep]
    lam = ln[i] - ln[j]
    lsum = ln[i] + ln[j]
    xs, ws = _sigma_rule(p, n_sigma)
    total = 0.0
    step = max(1, (1 << 21) // xs.size)
    for lo in range(0, coef.size, step):
        sl = slice(lo, lo + step)
        sigma = 0.5 + xs[None, :]
        I = _t_integral(lam[sl, None], sigma + 0.5, mu)
        total += float(coef[sl] @ (np.exp(-sigma * lsum[sl, None]) * I @ ws))
    return math.sqrt(max(total, 0.0))


def _log_geometric_edges(lo: float, hi: float, first: float) -> list:
    edges = [lo, lo + first]
    while edges[-1] < hi:
        edges.append(min(hi, lo + 2 * (edges[-1] - lo)))
    return edges


def dbi_restricted_norm_sq(eps: float, p: float, beta: float, n: int = 24,
                           zeta_terms: int = 10**7) -> float:
    """Weighted Bergman integral of |f_eps|^2 over sigma in [1/2, 1], t in [0, 1].

    Weight 4^beta beta (sigma - 1/2)^{beta-1} |s + 1/2|^{-2 beta - 2}, with
    |f_eps(s)|^2 = |zeta(s + 1/2 + eps)|^{4/p} / zeta(1 + 2 eps)^{2/p} from the
    closed-form zeta (the truncated series cannot resolve the pole at s + 1/2 + eps = 1).
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    scale = eps / 16.0
    # u = sigma - 1/2: Jacobi panel at 0 absorbs u^{beta-1}, then geometric Legendre panels
    u0, wu0 = _jacobi_rule(n, beta - 1.0, 0.0, scale)
    u1, wu1 = _legendre_panels(_log_geometric_edges(0.0, 0.5, scale)[1:], n)
    u = np.concatenate([u0, u1])
    wu = np.concatenate([wu0, wu1 * u1 ** (beta - 1.0)])
    t, wt = _legendre_panels(_log_geometric_edges(0.0, 1.0, scale), n)
    U, Tt = np.meshgrid(u, t, indexing="ij")
    s = 0.5 + U + 1j * Tt
    z = np.abs(zeta_em(s + 0.5 + eps)) ** (4.0 / p)
    weight = np.abs(s + 0.5) ** (-2 * beta - 2)
    val = float(wu @ (z * weight) @ wt)
    return 4.0 ** beta * beta * val / zeta_partial(1.0 + 2.0 * eps, zeta_terms) ** (2.0 / p)


def optimality_probe(p: float, beta: float, eps_grid: Sequence[float]) -> ExponentFit:
    """Fit log of the restricted D_{beta,i} norm^2 of f_eps against log eps.

    Expected slope beta + 1 - 2/p; it is negative (blow-up) exactly below beta = 2/p - 1.
    """
    if not 1 < p < 2:
        raise ValueError("p must lie in (1, 2)")
    grid = [(float(e), dbi_restricted_norm_sq(e, p, beta)) for e in eps_grid]
    return fit_exponent(grid, weighted=False)


def optimality_slope_theory(p: float, beta: float) -> float:
    return beta + 1.0 - 2.0 / p


# ---------------------------------------------------------------------------
# Hilbert matrix functional
# ---------------------------------------------------------------------------

@dataclass
class GrowthReport:
    alpha: float
    beta: float
    x: list
    partial_sums: list
    increment_exponent: float
    theory_exponent: float
    convergent: bool
    theory_convergent: bool
    threshold: float = -1.25

    def to_json(self) -> dict:
        return dict(self.__dict__)


def convergence_dichotomy(alpha: float, beta: float, x_grid: Sequence[int],
                          threshold: float = -1.25, workers: int = 1) -> GrowthReport:
    """Partial sums of sum_{n>=2} d(n)^alpha / (n (log n)^beta) along a geometric x grid.

    On a geometric grid the increments behave like (log x)^gamma with
    gamma = 2^alpha - 1 - beta, and the series converges iff gamma < -1 (2^alpha < beta).
    The fitted gamma is compared with `threshold`, placed between the boundary case
    gamma = -1 and the convergent cases.
    """
    xs = [int(x) for x in x_grid]
    if any(b <= a for a, b in zip(xs, xs[1:])) or len(xs) < 4:
        raise ValueError("x_grid must be increasing with at least 4 points")

    def weight(n):
        out = np.zeros(n.size)
        m = n >= 2
        nf = n[m].astype(np.float64)
        out[m] = 1.0 / (nf * np.log(nf) ** beta)
        return out

    sums = [s for _, s in numth.sieve_sum(numth.divisor_power(alpha), xs[-1], xs,
                                          workers=workers, weight=weight)]
    inc = np.diff(sums)
    mid = np.sqrt(np.array(xs[:-1], float) * np.array(xs[1:], float))
    ok = inc > 0
    if ok.sum() < 3:
        raise ValueError("too few positive increments to fit")
    gamma = float(np.polyfit(np.log(np.log(mid[ok])), np.log(inc[ok]), 1)[0])
    theory = 2.0 ** alpha - 1.0 - beta
    return GrowthReport(alpha, beta, xs, [float(s) for s in sums], gamma, theory,
                        gamma < threshold, 2.0 ** alpha < beta, threshold)


def h4_norm_of_g(N: int) -> float:
    """||g_N||_{H^4}^4 = ||g_N^2||_{H^2}^2 exactly (g_N^2 has support up to N^2)."""
    if N < 2:
        raise ValueError("h4_norm_of_g needs N >= 2")
    if N * N > 5 * 10**7:
        raise numth.ResourceBudgetError(f"exact square needs an array of {N * N} entries", N * N * 8)
    g = hilbert_symbol_g(N).a.real
    out = np.zeros(N * N)
    for k in range(2, N + 1):
        out[k * 2 - 1 : k * N : k] += g[k - 1] * g[1:N]
    return float(np.dot(out, out))


def _g_values(lo: int, hi: int) -> np.ndarray:
    m = np.arange(lo, hi, dtype=np.float64)
    return 1.0 / (np.sqrt(m) * np.log(m))


def g_square_partial_norms(checkpoints: Sequence[int], segment: int = 1 << 21) -> list[tuple[int, float]]:
    """T(N) = sum_{n<=N} ((g*g)_n)^2 at each checkpoint.

    For n <= N the coefficients of g_N^2 and of the full g^2 agree, so T(N) is a
    lower bound for ||g_N||_{H^4}^4 and is nondecreasing. Computed by a segmented
    divisor-pair sweep using (g*g)_n = 2 sum_{k|n, k^2<n} g_k g_{n/k} + [n=k^2] g_k^2.
    """
    cps = [int(c) for c in checkpoints]
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be sorted")
    X = cps[-1]
    out, total, ci = [], 0.0, 0
    for L in range(1, X + 1, segment):
        H = min(L + segment, X + 1)  # segment covers n in [L, H)
        conv = np.zeros(H - L)
        kmax = math.isqrt(H - 1)
        for k in range(2, kmax + 1):
            gk = 1.0 / (math.sqrt(k) * math.log(k))
            m0 = max(k + 1, -(-L // k))
            m1 = (H - 1) // k
            if m1 >= m0:
                conv[k * m0 - L : k * m1 - L + 1 : k] += 2.0 * gk * _g_values(m0, m1 + 1)
            sq = k * k
            if L <= sq < H:
                conv[sq - L] += gk * gk
        c2 = conv * conv
        cum = np.cumsum(c2)
        while ci < len(cps) and cps[ci] < H:
            out.append((cps[ci], total + (float(cum[cps[ci] - L]) if cps[ci] >= L else 0.0)))
            ci += 1
        total += float(cum[-1])
    return out


def h4_growth(checkpoints: Sequence[int], comparison: float = -2.0) -> dict:
    """Increments of T(N) between checkpoints and their decay exponent against log N.

    A plateau would show increments decaying at least like a convergent comparison
    (log N)^comparison; the report records the fitted exponent for that test.
    """
    rows = g_square_partial_norms(checkpoints)
    T = np.array([v for _, v in rows])
    inc = np.diff(T)
    mid = np.sqrt(np.array(checkpoints[:-1], float) * np.array(checkpoints[1:], float))
    expo = float(np.polyfit(np.log(np.log(mid)), np.log(inc), 1)[0]) if np.all(inc > 0) else float("nan")
    return {"N": [int(c) for c in checkpoints], "T": T.tolist(), "increments": inc.tolist(),
            "increment_exponent": expo, "comparison_exponent": comparison,
            "increments_positive": bool(np.all(inc > 0)),
            "no_plateau": bool(np.all(inc > 0) and expo > comparison)}


def hilbert_ratio(p: float, family: Sequence[DirichletCoeffs], n_mc: int = 10**5,
                  seed: int = 0) -> dict:
    """max over the family of |L(f)| / ||f||_{H^p}; exact norm at p = 2, Monte Carlo otherwise."""
    if not p > 1:
        raise ValueError("p must be > 1")
    Ls = np.array([abs(hilbert_functional_L(f)) for f in family])
    if p == 2:
        norms = np.array([h2_norm(f) for f in family])
    else:
        norms = np.array([e.mean for e in estimate_hp_norm_family(family, p, n_mc, seed)])
    ratios = np.where(norms > 0, Ls / np.where(norms > 0, norms, 1.0), 0.0)
    k = int(np.argmax(ratios))
    return {"p": p, "max_ratio": float(ratios[k]), "argmax": k, "ratios": ratios.tolist()}
