"""Random test inputs: Dirichlet polynomials, disc polynomials and symbols."""
from __future__ import annotations

import numpy as np

from . import numth
from .bohr import Symbol
from .dseries import DirichletCoeffs


def smooth_numbers(N: int, dim: int | None = None) -> np.ndarray:
    """1 <= n <= N whose prime factors are among the first `dim` primes (all n if dim is None)."""
    n = np.arange(1, N + 1)
    if dim is None:
        return n
    if dim == 0:
        return n[:1]
    pmax = numth.nth_prime(dim)
    rest = n.copy()
    # strip small primes; what remains must be 1
    for p in numth.primes_up_to(pmax):
        while True:
            m = (rest % p == 0) & (rest > 1)
            if not m.any():
                break
            rest[m] //= p
    return n[rest == 1]


def random_polynomial(rng: np.random.Generator, N: int, dim: int | None = None,
                      density: float = 1.0, complex_coeffs: bool = True) -> DirichletCoeffs:
    """Gaussian coefficients on a random subset of the admissible n <= N (a_1 always present)."""
    support = smooth_numbers(N, dim)
    keep = rng.random(support.size) < density
    keep[0] = True
    support = support[keep]
    c = rng.standard_normal(support.size)
    if complex_coeffs:
        c = c + 1j * rng.standard_normal(support.size)
    a = np.zeros(N, dtype=np.complex128)
    a[support - 1] = c
    return DirichletCoeffs(a)


def random_disc_polynomial(rng: np.random.Generator, degree: int) -> np.ndarray:
    return rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)


def random_symbol(rng: np.random.Generator, dim: int = 2, n_terms: int = 3, max_n: int = 30,
                  scale: float = 0.3, margin: float = 0.05) -> Symbol:
    """phi0 = c_1 + sum c_m m^{-s} with Re c_1 = 1/2 + sum |c_m| + margin, so Re phi0 > 1/2."""
    cand = smooth_numbers(max_n, dim)[1:]
    picks = rng.choice(cand, size=min(n_terms, cand.size), replace=False)
    terms = {int(m): complex(*(scale * rng.standard_normal(2))) for m in picks}
    c1 = 0.5 + sum(abs(c) for c in terms.values()) + margin + 1j * rng.standard_normal()
    terms[1] = c1
    return Symbol.from_series(DirichletCoeffs.from_terms(terms, max(terms)))
