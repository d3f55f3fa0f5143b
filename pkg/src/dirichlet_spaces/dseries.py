"""Truncated Dirichlet series: coefficient algebra, evaluation, weighted norms.

Every operation is exact on the formal algebra of series supported on
{1, ..., N}; products and compositions take the output truncation explicitly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.special import bernoulli

from . import numth
from .numth import MultiplicativeSpec


@dataclass(frozen=True)
class HalfPlanePoint:
    sigma: float
    t: float = 0.0

    @property
    def s(self) -> complex:
        return complex(self.sigma, self.t)


class DirichletCoeffs:
    """Coefficients a_1..a_N of f(s) = sum a_n n^{-s}; a[0] holds a_1."""

    __slots__ = ("a",)

    def __init__(self, a):
        a = np.array(a, dtype=np.complex128).ravel()
        if a.size < 1:
            raise ValueError("a Dirichlet series needs N >= 1")
        self.a = a

    @property
    def N(self) -> int:
        return self.a.size

    def __getitem__(self, n: int) -> complex:
        """Coefficient a_n (1-based; zero beyond N)."""
        if n < 1:
            raise IndexError("Dirichlet coefficients start at n = 1")
        return complex(self.a[n - 1]) if n <= self.N else 0j

    def __repr__(self):
        terms = ", ".join(f"{n}: {complex(c):.6g}" for n, c in self.items()[:6])
        more = "" if len(self.support()) <= 6 else ", ..."
        return f"DirichletCoeffs(N={self.N}, {{{terms}{more}}})"

    def __eq__(self, other):
        if not isinstance(other, DirichletCoeffs):
            return NotImplemented
        n = max(self.N, other.N)
        return bool(np.array_equal(self.padded(n).a, other.padded(n).a))

    def __add__(self, other: "DirichletCoeffs") -> "DirichletCoeffs":
        n = max(self.N, other.N)
        return DirichletCoeffs(self.padded(n).a + other.padded(n).a)

    def __sub__(self, other: "DirichletCoeffs") -> "DirichletCoeffs":
        return self + (-other)

    def __neg__(self) -> "DirichletCoeffs":
        return DirichletCoeffs(-self.a)

    def __mul__(self, c) -> "DirichletCoeffs":
        if isinstance(c, DirichletCoeffs):
            return convolve(self, c, max(self.N, c.N))
        return DirichletCoeffs(self.a * complex(c))

    __rmul__ = __mul__

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.a) + 1

    def items(self) -> list[tuple[int, complex]]:
        return [(int(n), complex(self.a[n - 1])) for n in self.support()]

    def padded(self, N: int) -> "DirichletCoeffs":
        """Same series with truncation N (zero padded or cut)."""
        if N == self.N:
            return self
        out = np.zeros(N, dtype=np.complex128)
        m = min(N, self.N)
        out[:m] = self.a[:m]
        return DirichletCoeffs(out)

    def copy(self) -> "DirichletCoeffs":
        return DirichletCoeffs(self.a.copy())

    @classmethod
    def from_terms(cls, terms: Mapping[int, complex], N: int | None = None) -> "DirichletCoeffs":
        if N is None:
            N = max(terms) if terms else 1
        a = np.zeros(N, dtype=np.complex128)
        for n, c in terms.items():
            if n < 1:
                raise ValueError("coefficient index must be >= 1")
            if n <= N:
                a[n - 1] += c
        return cls(a)

    @classmethod
    def monomial(cls, n: int, c: complex = 1.0, N: int | None = None) -> "DirichletCoeffs":
        return cls.from_terms({n: c}, N if N is not None else n)

    @classmethod
    def one(cls, N: int = 1) -> "DirichletCoeffs":
        return cls.monomial(1, 1.0, N)

    @classmethod
    def zeta(cls, N: int) -> "DirichletCoeffs":
        return cls(np.ones(N))

    def to_json(self) -> dict:
        return {"N": self.N,
                "coeffs": [[n, c.real, c.imag] for n, c in self.items()]}

    @classmethod
    def from_json(cls, obj) -> "DirichletCoeffs":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if "N" not in obj or "coeffs" not in obj:
            raise ValueError("series JSON needs 'N' and 'coeffs'")
        N = int(obj["N"])
        last = 0
        terms: dict[int, complex] = {}
        for row in obj["coeffs"]:
            n, re = int(row[0]), float(row[1])
            im = float(row[2]) if len(row) > 2 else 0.0
            if n <= last:
                raise ValueError("series JSON coefficients must have ascending n")
            if n > N:
                raise ValueError(f"coefficient index {n} exceeds N={N}")
            last = n
            terms[n] = complex(re, im)
        return cls.from_terms(terms, N)


def _as_coeffs(f) -> DirichletCoeffs:
    return f if isinstance(f, DirichletCoeffs) else DirichletCoeffs(f)


@lru_cache(maxsize=16)
def _log_n(N: int) -> np.ndarray:
    out = np.log(np.arange(1, N + 1, dtype=np.float64))
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def convolve(f: DirichletCoeffs, g: DirichletCoeffs, N_out: int) -> DirichletCoeffs:
    """Dirichlet product (f g)_n = sum_{km=n} f_k g_m for n <= N_out."""
    if N_out < 1:
        raise ValueError("N_out must be >= 1")
    f, g = _as_coeffs(f), _as_coeffs(g)
    if np.count_nonzero(f.a) > np.count_nonzero(g.a):
        f, g = g, f
    out = np.zeros(N_out, dtype=np.complex128)
    for k in f.support():
        if k > N_out:
            break
        m = min(N_out // k, g.N)
        out[k - 1 : k * m : k] += f.a[k - 1] * g.a[:m]
    return DirichletCoeffs(out)


def _divisor_solve(kernel: np.ndarray, rhs: np.ndarray | None, x1: complex, N: int,
                   scale: np.ndarray | None = None) -> np.ndarray:
    """Solve x_n = scale_n (rhs_n + sum_{k | n, k > 1} kernel_k x_{n/k}) for n = 2..N.

    kernel[k-1] holds kernel_k. Since n/k <= n/2, all of (M, 2M] is determined
    by x on [1, M]; the recursion therefore advances in doubling blocks with one
    strided update per kernel entry.
    """
    x = np.zeros(N, dtype=np.complex128)
    x[0] = x1
    ks = np.flatnonzero(kernel[1:N]) + 2
    kv = kernel[ks - 1]
    M = 1
    while M < N:
        hi = min(2 * M, N)
        acc = np.zeros(hi - M, dtype=np.complex128) if rhs is None else rhs[M:hi].astype(np.complex128)
        stop = np.searchsorted(ks, hi, side="right")
        for k, c in zip(ks[:stop].tolist(), kv[:stop]):
            j0 = M // k + 1
            j1 = hi // k
            if j1 < j0:
                continue
            acc[k * j0 - M - 1 : k * j1 - M : k] += c * x[j0 - 1 : j1]
        if scale is not None:
            acc *= scale[M:hi]
        x[M:hi] = acc
        M = hi
    return x


def exp_series(h: DirichletCoeffs, N_out: int) -> DirichletCoeffs:
    """Formal exponential g = exp(h) for h with h_1 = 0, truncated at N_out."""
    h = _as_coeffs(h)
    if h.a[0] != 0:
        raise ValueError("exp_series requires h_1 = 0")
    hp = h.padded(N_out).a
    logs = _log_n(N_out)
    kernel = logs * hp
    inv_log = np.zeros(N_out)
    inv_log[1:] = 1.0 / logs[1:]
    return DirichletCoeffs(_divisor_solve(kernel, None, 1.0, N_out, scale=inv_log))


def log_series(f: DirichletCoeffs, N_out: int) -> DirichletCoeffs:
    """Formal logarithm of f with f_1 = 1 (inverse of exp_series)."""
    f = _as_coeffs(f)
    if f.a[0] != 1:
        raise ValueError("log_series requires f_1 = 1")
    fp = f.padded(N_out).a
    logs = _log_n(N_out)
    x = _divisor_solve(-fp, logs * fp, 0.0, N_out)
    out = np.zeros(N_out, dtype=np.complex128)
    out[1:] = x[1:] / logs[1:]
    return DirichletCoeffs(out)


def dirichlet_inverse(f: DirichletCoeffs, N_out: int) -> DirichletCoeffs:
    f = _as_coeffs(f)
    f1 = f.a[0]
    if f1 == 0:
        raise ValueError("series with a_1 = 0 has no Dirichlet inverse")
    fp = f.padded(N_out).a
    return DirichletCoeffs(_divisor_solve(-fp / f1, None, 1.0 / f1, N_out))


def pow_real(f: DirichletCoeffs, y: float, N_out: int) -> DirichletCoeffs:
    """f^y = exp(y log f) for f_1 = 1."""
    f = _as_coeffs(f)
    if f.a[0] != 1:
        raise ValueError("pow_real requires f_1 = 1")
    return exp_series(float(y) * log_series(f, N_out), N_out)


# ---------------------------------------------------------------------------
# evaluation and norms
# ---------------------------------------------------------------------------

def evaluate(f: DirichletCoeffs, s) -> tuple[complex, float | None]:
    """(sum_{n<=N} a_n n^{-s}, tail note).

    The tail note max|a_n| * N^{1-sigma}/(sigma-1) bounds the contribution of
    an infinite continuation with the same coefficient size; it is None when
    sigma <= 1.
    """
    f = _as_coeffs(f)
    s = s.s if isinstance(s, HalfPlanePoint) else complex(s)
    logs = _log_n(f.N)
    nz = np.flatnonzero(f.a)
    value = complex(np.sum(f.a[nz] * np.exp(-s * logs[nz])))
    sigma = s.real
    if sigma <= 1:
        return value, None
    amax = float(np.abs(f.a).max())
    return value, amax * f.N ** (1.0 - sigma) / (sigma - 1.0)


def evaluate_many(f: DirichletCoeffs, s: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """Vectorized f(s) over an array of points."""
    f = _as_coeffs(f)
    s = np.asarray(s, dtype=np.complex128)
    flat = s.ravel()
    nz = np.flatnonzero(f.a)
    logs = _log_n(f.N)[nz]
    coef = f.a[nz]
    out = np.empty(flat.size, dtype=np.complex128)
    step = max(1, chunk // max(nz.size, 1))
    for i in range(0, flat.size, step):
        block = flat[i : i + step]
        out[i : i + step] = np.exp(-np.outer(block, logs)) @ coef
    return out.reshape(s.shape)


def weighted_norm(f: DirichletCoeffs, w: MultiplicativeSpec, mode: str = "divide") -> float:
    """(sum |a_n|^2 w(n)^{-1})^{1/2} for mode='divide', with w(n)^{+1} for 'multiply'."""
    f = _as_coeffs(f)
    if mode not in ("divide", "multiply"):
        raise ValueError("mode must be 'divide' or 'multiply'")
    wt = numth.mult_table(w, f.N)
    if np.any(wt <= 0):
        raise ValueError("weighted_norm needs positive weights")
    a2 = np.abs(f.a) ** 2
    return float(math.sqrt(np.sum(a2 / wt if mode == "divide" else a2 * wt)))


def d_alpha_norm(f: DirichletCoeffs, alpha: float) -> float:
    """Norm of the Bergman-type space with weight d(n)^{-alpha}."""
    return weighted_norm(f, numth.divisor_power(alpha), "divide")


def h2_norm(f: DirichletCoeffs) -> float:
    return float(np.linalg.norm(_as_coeffs(f).a))


def w_p_norm(f: DirichletCoeffs, p: float) -> float:
    """Norm with weight w_p(n) = (2/p)^Omega(n) in the denominator."""
    return weighted_norm(f, numth.omega_power(2.0 / p), "divide")


def translate(f: DirichletCoeffs, sigma0: float) -> DirichletCoeffs:
    """f(s + sigma0): a_n -> a_n n^{-sigma0}."""
    f = _as_coeffs(f)
    return DirichletCoeffs(f.a * np.exp(-sigma0 * _log_n(f.N)))


# ---------------------------------------------------------------------------
# zeta
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def zeta_partial(x: float, n_terms: int = 10**7) -> float:
    """zeta(x), x > 1 real, as a partial sum to n_terms plus the integral tail."""
    if x <= 1:
        raise ValueError("zeta_partial needs x > 1")
    total = 0.0
    step = 1 << 21
    for lo in range(1, n_terms + 1, step):
        n = np.arange(lo, min(lo + step, n_terms + 1), dtype=np.float64)
        # reversed summation keeps small terms from being swamped
        total += float(np.sum(np.exp(-x * np.log(n))[::-1]))
    return total + n_terms ** (1.0 - x) / (x - 1.0)


_B2K = [float(b) for b in bernoulli(24)[2::2]]


def zeta_em(s, n_terms: int = 16, n_corr: int = 10) -> np.ndarray:
    """Riemann zeta by Euler-Maclaurin summation, vectorized over complex s (Re s > 0, s != 1)."""
    s = np.asarray(s, dtype=np.complex128)
    Nf = float(n_terms)
    n = np.arange(1, n_terms, dtype=np.float64)
    head = np.exp(-np.multiply.outer(s, np.log(n))).sum(axis=-1)
    total = head + Nf ** (1 - s) / (s - 1) + 0.5 * Nf ** (-s)
    rising = s.copy()
    fact = 2.0
    for k in range(1, n_corr + 1):
        total = total + _B2K[k - 1] / fact * rising * Nf ** (-s - 2 * k + 1)
        rising = rising * (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
    return total


# ---------------------------------------------------------------------------
# named series
# ---------------------------------------------------------------------------

def zeta_alpha(alpha: float, N: int) -> DirichletCoeffs:
    """sum d(n)^alpha n^{-s} truncated at N."""
    return DirichletCoeffs(numth.mult_table(numth.divisor_power(alpha), N))


def wilson_factor(alpha: float, N: int) -> DirichletCoeffs:
    """zeta_alpha * zeta^{-2^alpha}, the Euler-product remainder."""
    return convolve(zeta_alpha(alpha, N), pow_real(DirichletCoeffs.zeta(N), -(2.0 ** alpha), N), N)


def hilbert_symbol_g(N: int) -> DirichletCoeffs:
    """g(s) = sum_{n>=2} n^{-1/2} (log n)^{-1} n^{-s}."""
    if N < 2:
        raise ValueError("hilbert_symbol_g needs N >= 2")
    a = np.zeros(N)
    n = np.arange(2, N + 1, dtype=np.float64)
    a[1:] = 1.0 / (np.sqrt(n) * np.log(n))
    return DirichletCoeffs(a)


def hilbert_functional_L(f: DirichletCoeffs) -> complex:
    """L(f) = int_{1/2}^inf (f(s) - a_1) ds = sum_{n>=2} a_n n^{-1/2} / log n."""
    f = _as_coeffs(f)
    if f.N < 2:
        return 0j
    n = np.arange(2, f.N + 1, dtype=np.float64)
    return complex(np.sum(f.a[1:] / (np.sqrt(n) * np.log(n))))


def f_epsilon(eps: float, p: float, N: int, n_zeta: int = 10**7) -> DirichletCoeffs:
    """zeta(s + 1/2 + eps)^{2/p} / zeta(1 + 2 eps)^{1/p}, truncated at N (unit H^p norm untruncated)."""
    if eps <= 0:
        raise ValueError("f_epsilon needs eps > 0")
    if not 1 <= p <= 2:
        raise ValueError("f_epsilon needs p in [1, 2]")
    Z = zeta_partial(1.0 + 2.0 * eps, n_zeta) ** (1.0 / p)
    coeffs = pow_real(DirichletCoeffs.zeta(N), 2.0 / p, N)
    return translate(coeffs, 0.5 + eps) * (1.0 / Z)


def f_epsilon_h2_norm_sq(eps: float, p: float, prime_bound: int = 10**7) -> float:
    """||f_eps||_{H^2}^2 of the untruncated series via its Euler product.

    Each local factor is sum_k d_y(p^k)^2 p^{-k(1+2 eps)} with y = 2/p; primes
    above prime_bound contribute through log(1 + y^2 x) ~ y^2 x with the prime
    sum replaced by its integral.
    """
    from scipy.special import exp1

    y = 2.0 / p
    s = 1.0 + 2.0 * eps
    primes = numth.primes_up_to(prime_bound).astype(np.float64)
    x = primes ** (-s)
    kmax = 80
    coef = numth.generalized_divisor(y).prime_power_values(kmax) ** 2
    # Horner in x for each prime; x <= 2^{-1}, so 80 terms are ample
    local = np.zeros_like(x)
    for c in coef[::-1]:
        local = local * x + c
    log_prod = float(np.sum(np.log(local)))
    # int_P^inf u^{-s} / log u du = E_1((s - 1) log P)
    log_prod += y * y * float(exp1((s - 1.0) * math.log(prime_bound)))
    return math.exp(log_prod) / zeta_partial(s) ** (2.0 / p)


def parse_series(text: str, N: int | None = None) -> DirichletCoeffs:
    """Parse a Dirichlet polynomial written like '3/2 - 2^-s + 0.25*6^-s'."""
    import re

    src = text.replace(" ", "")
    if not src:
        raise ValueError("empty series expression")
    num = r"[0-9.]+(?:/[0-9.]+)?(?:[eE][+-]?[0-9]+)?j?"
    term = re.compile(rf"([+-])?(?:({num})\*)?([0-9]+)\^-s|([+-])?({num})")
    terms: dict[int, complex] = {}
    pos = 0
    while pos < len(src):
        m = term.match(src, pos)
        if not m or m.end() == pos or (pos > 0 and not (m.group(1) or m.group(4))):
            raise ValueError(f"cannot parse series term at {src[pos:]!r}")
        if m.group(3) is not None:
            sign, raw, n = m.group(1), m.group(2), int(m.group(3))
        else:
            sign, raw, n = m.group(4), m.group(5), 1
        coef = _parse_number(raw) if raw else 1.0
        if n < 1:
            raise ValueError("series index must be >= 1")
        terms[n] = terms.get(n, 0) + (-coef if sign == "-" else coef)
        pos = m.end()
    return DirichletCoeffs.from_terms(terms, N if N is not None else max(terms))


def _parse_number(raw: str) -> complex:
    from fractions import Fraction

    imag = raw.endswith("j")
    body = raw[:-1] if imag else raw
    val = float(Fraction(body)) if "/" in body else float(body or "1")
    return complex(0, val) if imag else val
