"""Monte Carlo on the torus and polydisc: radial laws, pushforward measures, H^p norms, slope fits.

Randomness is counter-based: sample block b of a run with seed s draws from a
Philox stream keyed by s whose counter starts at b. Blocks have a fixed size,
so an estimate depends only on (seed, n) and not on how many workers run it.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import numth
from .bohr import BohrPoly, Symbol, bohr_lift, eval_bohr
from .dseries import DirichletCoeffs, _as_coeffs, evaluate_many

BLOCK = 1 << 16


class InsufficientData(ValueError):
    pass


# ---------------------------------------------------------------------------
# laws and streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialLaw:
    """kind: 'torus' (|z| = 1), 'log' (Bergman law with log weight, parameter alpha)
    or 'poly' (Bergman law beta (1 - |z|^2)^{beta - 1}, parameter beta)."""

    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in ("torus", "log", "poly"):
            raise ValueError(f"unknown radial law {self.kind!r}")
        if self.kind != "torus" and not self.param > 0:
            raise ValueError("Bergman laws need a positive parameter")

    @classmethod
    def torus(cls):
        return cls("torus")

    @classmethod
    def bergman_log(cls, alpha: float):
        return cls("log", float(alpha))

    @classmethod
    def bergman_poly(cls, beta: float):
        return cls("poly", float(beta))

    @classmethod
    def for_beta(cls, beta: float, kind: str = "poly"):
        """Law used for the weighted space of index beta (torus when beta = 0)."""
        if beta < 0:
            raise ValueError("beta must be >= 0")
        return cls.torus() if beta == 0 else cls(kind, float(beta))

    def moment(self, k: int) -> float:
        """E |z|^{2k} in closed form."""
        if self.kind == "torus":
            return 1.0
        if self.kind == "log":
            return (1.0 + k) ** (-self.param)
        b = self.param
        return math.exp(math.lgamma(b + 1) + math.lgamma(k + 1) - math.lgamma(b + k + 1))


def block_rng(seed: int, block: int) -> np.random.Generator:
    counter = np.array([0, 0, 0, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=int(seed) % (1 << 128), counter=counter))


def _run_blocks(n: int, seed: int, work: Callable, workers: int = 1) -> list:
    """Apply work(rng, size, block) to each block of n samples; results in block order."""
    if n < 1:
        raise ValueError("need at least one sample")
    sizes = [min(BLOCK, n - lo) for lo in range(0, n, BLOCK)]
    jobs = lambda b: work(block_rng(seed, b), sizes[b], b)
    if workers <= 1 or len(sizes) == 1:
        return [jobs(b) for b in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(jobs, range(len(sizes))))


def sample_gamma(shape: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Gamma(shape, 1) by the Marsaglia-Tsang squeeze; shape < 1 via the U^{1/shape} boost."""
    if not shape > 0:
        raise ValueError("gamma shape must be positive")
    boost = shape < 1
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    filled = 0
    while filled < size:
        m = int((size - filled) * 1.05) + 16
        x = rng.standard_normal(m)
        u = rng.random(m)
        v = (1.0 + c * x) ** 3
        ok = v > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            accept = ok & ((u < 1.0 - 0.0331 * x ** 4)
                           | (np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(np.where(ok, v, 1.0)))))
        got = (d * v)[accept][: size - filled]
        out[filled : filled + got.size] = got
        filled += got.size
    if boost:
        out *= rng.random(size) ** (1.0 / shape)
    return out


def sample_radial(law: RadialLaw, size: int, rng: np.random.Generator) -> np.ndarray:
    """size i.i.d. points of the law (uniform angle, independent radius)."""
    theta = rng.uniform(-math.pi, math.pi, size)
    if law.kind == "torus":
        r = 1.0
    elif law.kind == "poly":
        v = rng.random(size) ** (1.0 / law.param)
        r = np.sqrt(1.0 - v)
    else:
        r = np.exp(-0.5 * sample_gamma(law.param, size, rng))
    return r * np.exp(1j * theta)


def sample_polydisc(law: RadialLaw, size: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """(size, d) array with i.i.d. coordinates."""
    return np.stack([sample_radial(law, size, rng) for _ in range(d)], axis=1) if d else np.zeros((size, 0))


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------

@dataclass
class MeasureEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int
    hits: Optional[int] = None

    def to_json(self, **extra) -> dict:
        out = {k: v for k, v in asdict(self).items() if v is not None}
        out["n"] = out.pop("n_samples")
        out.update(extra)
        return out


def _binomial(hits: int, n: int, seed: int) -> MeasureEstimate:
    p = hits / n
    return MeasureEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / n), n, seed, hits)


@dataclass(frozen=True)
class CarlesonSquare:
    tau: float
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("Carleson square needs eps > 0")

    def contains(self, w: np.ndarray) -> np.ndarray:
        x, y = w.real, w.imag
        return (x >= 0.5) & (x <= 0.5 + self.eps) & (np.abs(y - self.tau) <= 0.5 * self.eps)


@dataclass(frozen=True)
class HyperbolicDisc:
    sigma: float
    t: float
    r: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("hyperbolic disc centre needs sigma > 0")
        if not 0 < self.r < 1:
            raise ValueError("hyperbolic radius must lie in (0, 1)")

    @property
    def euclidean_center(self) -> complex:
        return complex(self.sigma * math.cosh(self.r), self.t)

    @property
    def euclidean_radius(self) -> float:
        return self.sigma * math.sinh(self.r)

    def contains(self, w: np.ndarray) -> np.ndarray:
        return np.abs(w - self.euclidean_center) < self.euclidean_radius


def _symbol_poly(phi) -> BohrPoly:
    if isinstance(phi, BohrPoly):
        return phi
    if isinstance(phi, Symbol):
        if phi.c0 != 0:
            raise ValueError("pushforward measures need characteristic c0 = 0")
        return phi.lift()
    return bohr_lift(_as_coeffs(phi))


def estimate_pushforward(phi, beta: float, Q: CarlesonSquare, n: int, seed: int,
                         workers: int = 1, law_kind: str = "poly") -> MeasureEstimate:
    """Fraction of polydisc samples z with Phi(z) in Q (torus samples when beta = 0)."""
    return estimate_pushforward_grid(phi, beta, [Q.eps], n, seed, tau=Q.tau,
                                     workers=workers, law_kind=law_kind)[0]


def estimate_pushforward_grid(phi, beta: float, eps_grid: Sequence[float], n: int, seed: int,
                              tau: float = 0.0, workers: int = 1,
                              law_kind: str = "poly") -> list[MeasureEstimate]:
    """Pushforward measure of Q(tau, eps) for every eps, from one shared sample of size n."""
    P = _symbol_poly(phi)
    law = RadialLaw.for_beta(beta, law_kind)
    eps = np.asarray(eps_grid, dtype=np.float64)
    if np.any(eps <= 0):
        raise ValueError("eps values must be positive")

    def work(rng, size, _b):
        w = eval_bohr(P, sample_polydisc(law, size, P.d, rng)) if P.d else np.full(size, P.constant_term())
        x = w.real - 0.5
        y = np.abs(w.imag - tau)
        # smallest box side that contains the point; hit for eps >= that side
        side = np.where(x >= 0, np.maximum(x, 2.0 * y), np.inf)
        return np.searchsorted(np.sort(side), eps, side="right")

    counts = np.sum(_run_blocks(n, seed, work, workers), axis=0)
    return [_binomial(int(c), n, seed) for c in counts]


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    grid: list
    slope_stderr: float = float("nan")
    excluded: list = field(default_factory=list)
    weighted: bool = True

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "slope_stderr": self.slope_stderr, "weighted": self.weighted,
                "excluded": [float(e) for e in self.excluded],
                "grid": [[float(e), _est_mean(m), _est_err(m)] for e, m in self.grid]}


def _est_mean(m) -> float:
    return float(m.mean if isinstance(m, MeasureEstimate) else m)


def _est_err(m) -> float:
    return float(m.stderr if isinstance(m, MeasureEstimate) else 0.0)


def fit_exponent(grid, min_points: int = 4, weighted: bool = True) -> ExponentFit:
    """Least squares of log(estimate) on log(eps), zero estimates excluded and listed.

    With stderr information on every point the fit is weighted by the delta-method
    variance of log(mean), (stderr/mean)^2; otherwise it is unweighted.
    """
    grid = [(float(e), m) for e, m in grid]
    usable = [(e, m) for e, m in grid if _est_mean(m) > 0]
    excluded = [e for e, m in grid if not _est_mean(m) > 0]
    if len(usable) < min_points:
        raise InsufficientData(f"only {len(usable)} nonzero estimates, need {min_points}")
    x = np.log([e for e, _ in usable])
    y = np.log([_est_mean(m) for _, m in usable])
    rel = np.array([_est_err(m) / _est_mean(m) for _, m in usable])
    use_w = weighted and np.all(rel > 0)
    w = 1.0 / rel ** 2 if use_w else np.ones_like(x)
    W = w.sum()
    xm, ym = (w * x).sum() / W, (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    slope = float((w * (x - xm) * (y - ym)).sum() / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ss_tot = (w * (y - ym) ** 2).sum()
    r2 = float(1.0 - (w * resid ** 2).sum() / ss_tot) if ss_tot > 0 else 1.0
    if use_w:
        se = math.sqrt(1.0 / sxx)
    else:
        dof = len(x) - 2
        se = math.sqrt((resid ** 2).sum() / dof / sxx) if dof > 0 else float("nan")
    return ExponentFit(slope, intercept, r2, grid, se, excluded, bool(use_w))


# ---------------------------------------------------------------------------
# H^p norms on the torus
# ---------------------------------------------------------------------------

def _moment_blocks(family: Sequence[DirichletCoeffs], p: float, n: int, seed: int, workers: int):
    """Sums of |f|^p and |f|^{2p} over a shared torus sample, one row per series.

    All series are evaluated through the monomials of the union of their supports:
    values = exp(i theta E^T) @ C with C the (support x family) coefficient matrix.
    """
    fam = [_as_coeffs(f) for f in family]
    union = np.unique(np.concatenate([f.support() for f in fam]))
    C = np.zeros((union.size, len(fam)), dtype=np.complex128)
    for k, f in enumerate(fam):
        sup = f.support()
        C[np.searchsorted(union, sup), k] = f.a[sup - 1]
    ET = numth.exponent_matrix(union).T.tocsr().astype(np.float64)  # (d, U)
    d = ET.shape[0]
    rows = max(1, min((1 << 22) // union.size, (1 << 22) // len(fam)))

    def work(rng, size, _b):
        theta = rng.uniform(-math.pi, math.pi, size=(size, d))
        acc = np.zeros((len(fam), 2))
        for lo in range(0, size, rows):
            phase = np.asarray((ET.T @ theta[lo : lo + rows].T).T)  # (batch, U)
            v = np.abs(np.exp(1j * phase) @ C) ** p
            acc[:, 0] += v.sum(axis=0)
            acc[:, 1] += (v * v).sum(axis=0)
        return acc

    tot = np.zeros((len(fam), 2))
    for part in _run_blocks(n, seed, work, workers):
        tot += part
    return tot


def _hp_from_moments(s1: float, s2: float, p: float, n: int, seed: int) -> MeasureEstimate:
    s1, s2 = float(s1), float(s2)
    m = s1 / n
    var = max(s2 / n - m * m, 0.0) * n / max(n - 1, 1)
    se_m = math.sqrt(var / n)
    if m == 0:
        return MeasureEstimate(0.0, 0.0, n, seed)
    est = m ** (1.0 / p)
    return MeasureEstimate(float(est), float(est / (p * m) * se_m), n, seed)


def estimate_hp_norm(f: DirichletCoeffs, p: float, n: int, seed: int,
                     workers: int = 1) -> MeasureEstimate:
    """(mean of |Bf(z)|^p over Haar samples on the torus)^{1/p}, delta-method stderr."""
    if p < 1:
        raise ValueError("p must be >= 1")
    f = _as_coeffs(f)
    if f.support().size == 0 or f.support().max() == 1:
        return MeasureEstimate(float(abs(f.a[0])), 0.0, n, seed)
    s1, s2 = _moment_blocks([f], p, n, seed, workers)[0]
    return _hp_from_moments(s1, s2, p, n, seed)


def estimate_hp_norm_family(family: Sequence[DirichletCoeffs], p: float, n: int, seed: int,
                            workers: int = 1) -> list[MeasureEstimate]:
    """Same as estimate_hp_norm for many series on a shared torus sample."""
    if p < 1:
        raise ValueError("p must be >= 1")
    fam = [_as_coeffs(f) for f in family]
    out: list[Optional[MeasureEstimate]] = [None] * len(fam)
    live = [i for i, f in enumerate(fam) if f.support().size and f.support().max() > 1]
    for i, f in enumerate(fam):
        if i not in live:
            out[i] = MeasureEstimate(float(abs(f.a[0])), 0.0, n, seed)
    if live:
        tot = _moment_blocks([fam[i] for i in live], p, n, seed, workers)
        for k, i in enumerate(live):
            out[i] = _hp_from_moments(tot[k, 0], tot[k, 1], p, n, seed)
    return out


def besicovitch_norm(f: DirichletCoeffs, p: float, T: float, n_t: int = 200_001) -> float:
    """Trapezoid approximation of ((1/2T) int_{-T}^{T} |f(it)|^p dt)^{1/p}."""
    if not T > 0:
        raise ValueError("T must be positive")
    t = np.linspace(-T, T, n_t)
    v = np.abs(evaluate_many(f, 1j * t)) ** p
    return float((np.trapezoid(v, t) / (2 * T)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# windows and hyperbolic discs
# ---------------------------------------------------------------------------

def window_measure(delta: float, eps: float, beta: float) -> float:
    """Bergman (poly) measure of {(1 - rho) e^{i theta}: 0 <= rho <= delta, |theta| <= eps}."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if not 0 < eps <= math.pi:
        raise ValueError("eps must lie in (0, pi]")
    if not beta > 0:
        raise ValueError("beta must be positive")
    return (eps / math.pi) * (2 * delta - delta * delta) ** beta


def window_measure_mc(delta: float, eps: float, beta: float, n: int, seed: int,
                      workers: int = 1) -> MeasureEstimate:
    window_measure(delta, eps, beta)
    law = RadialLaw.bergman_poly(beta)

    def work(rng, size, _b):
        z = sample_radial(law, size, rng)
        return int(np.count_nonzero((np.abs(z) >= 1 - delta) & (np.abs(np.angle(z)) <= eps)))

    return _binomial(sum(_run_blocks(n, seed, work, workers)), n, seed)


def estimate_moment(law: RadialLaw, k: int, n: int, seed: int, workers: int = 1) -> MeasureEstimate:
    """Monte Carlo E|z|^{2k} with its standard error."""

    def work(rng, size, _b):
        v = np.abs(sample_radial(law, size, rng)) ** (2 * k)
        return np.array([v.sum(), (v * v).sum()])

    s1, s2 = np.sum(_run_blocks(n, seed, work, workers), axis=0)
    m = s1 / n
    return MeasureEstimate(float(m), math.sqrt(max(s2 / n - m * m, 0.0) / n), n, seed)


def linear_shifted_symbol(c: Sequence[float]) -> BohrPoly:
    """sum_j |c_j| (1 - z_j): the linear symbol moved so its range touches Re = 0."""
    c = np.abs(np.asarray(c, dtype=np.float64))
    d = c.size
    exps = np.vstack([np.zeros((1, d), np.int64), np.eye(d, dtype=np.int64)])
    return BohrPoly(exps, np.concatenate([[c.sum()], -c]))


def estimate_hyperbolic_disc(phi, B: HyperbolicDisc, n: int, seed: int, shift: float = 0.0,
                             workers: int = 1) -> MeasureEstimate:
    """Haar-torus measure of {z : Phi(z) - shift in B}."""
    P = _symbol_poly(phi)

    def work(rng, size, _b):
        z = np.exp(1j * rng.uniform(-math.pi, math.pi, size=(size, P.d)))
        return int(np.count_nonzero(B.contains(eval_bohr(P, z) - shift)))

    return _binomial(sum(_run_blocks(n, seed, work, workers)), n, seed)
