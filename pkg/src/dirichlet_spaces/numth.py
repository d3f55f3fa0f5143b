"""Primes, factorization and multiplicative functions.

Dense tables (smallest prime factor, prime index, exponent vectors) back the
coefficient-level code in the other modules; the segmented sieve computes
partial sums of multiplicative functions far beyond what fits in one table.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

MAX_SIEVE_X = 10**9
DEFAULT_SEGMENT = 2**22
# bytes per segment entry: float64 values, int64 cofactor product, uint8 exponent, float64 cumsum
_BYTES_PER_ENTRY = 25


class ResourceBudgetError(MemoryError):
    """Raised when a computation would exceed the configured memory budget."""

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


# ---------------------------------------------------------------------------
# primes
# ---------------------------------------------------------------------------

def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n as an int64 array (plain Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p).astype(np.int64)


class _PrimeCache:
    def __init__(self):
        self.limit = 0
        self.primes = np.zeros(0, dtype=np.int64)

    def ensure(self, n: int) -> np.ndarray:
        if n > self.limit:
            limit = max(n, 2 * self.limit, 1 << 16)
            self.primes = primes_up_to(limit)
            self.limit = limit
        return self.primes


_PRIMES = _PrimeCache()
_TABLE_PRIME_LIMIT = 10**8


def nth_prime(j: int) -> int:
    """The j-th prime, 1-based (p_1 = 2)."""
    if j < 1:
        raise ValueError("prime index starts at 1")
    bound = 16
    if j >= 6:
        bound = int(j * (math.log(j) + math.log(math.log(j)))) + 3
    return int(_PRIMES.ensure(bound)[j - 1])


def prime_index(p: int) -> int:
    """1-based index of the prime p in the sequence 2, 3, 5, ..."""
    if p <= _TABLE_PRIME_LIMIT:
        primes = _PRIMES.ensure(p)
        i = int(np.searchsorted(primes, p))
        if i >= len(primes) or primes[i] != p:
            raise ValueError(f"{p} is not prime")
        return i + 1
    import sympy

    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    return int(sympy.primepi(p))


# ---------------------------------------------------------------------------
# factorization
# ---------------------------------------------------------------------------

class MultiIndex:
    """Prime exponent vector (k_1, k_2, ...) of n = prod p_j^{k_j}; trailing zeros trimmed.

    Stored sparsely as (prime, exponent) pairs so that integers with a huge
    prime factor stay cheap; the dense vector and prime indices are computed
    only when asked for.
    """

    __slots__ = ("_pairs", "_dense")
    MAX_DENSE = 10**7

    def __init__(self, exponents: Sequence[int] = ()):
        exps = tuple(int(k) for k in exponents)
        if any(k < 0 for k in exps):
            raise ValueError("exponents must be nonnegative")
        while exps and exps[-1] == 0:
            exps = exps[:-1]
        pairs = tuple((nth_prime(j), k) for j, k in enumerate(exps, start=1) if k)
        self._pairs = pairs
        self._dense = exps

    @classmethod
    def from_factorization(cls, fac: dict[int, int]) -> "MultiIndex":
        self = cls.__new__(cls)
        self._pairs = tuple(sorted((int(p), int(k)) for p, k in fac.items() if k))
        self._dense = None
        return self

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self._pairs)

    @property
    def support(self) -> tuple[tuple[int, int], ...]:
        """(prime index j, exponent k_j) for the nonzero entries."""
        return tuple((prime_index(p), k) for p, k in self._pairs)

    @property
    def exponents(self) -> tuple[int, ...]:
        if self._dense is None:
            dim = self.dimension
            if dim > self.MAX_DENSE:
                raise ValueError(f"dense exponent vector of length {dim} is too large; use .support")
            exps = [0] * dim
            for j, k in self.support:
                exps[j - 1] = k
            self._dense = tuple(exps)
        return self._dense

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self._pairs == other._pairs

    def __hash__(self):
        return hash(self._pairs)

    def __repr__(self):
        if self._dense is not None or not self._pairs or self._pairs[-1][0] <= _TABLE_PRIME_LIMIT:
            return f"MultiIndex({self.exponents})"
        return f"MultiIndex.from_factorization({dict(self._pairs)})"

    def __len__(self):
        return self.dimension

    def __iter__(self):
        return iter(self.exponents)

    def __getitem__(self, j):
        return self.exponents[j]

    @property
    def value(self) -> int:
        return math.prod(p**k for p, k in self._pairs)

    @property
    def omega(self) -> int:
        """Omega(n): number of prime factors counted with multiplicity."""
        return sum(k for _, k in self._pairs)

    @property
    def divisor_count(self) -> int:
        return math.prod(k + 1 for _, k in self._pairs)

    @property
    def dimension(self) -> int:
        """Index of the largest prime factor (0 for n = 1)."""
        if self._dense is not None:
            return len(self._dense)
        return prime_index(self._pairs[-1][0]) if self._pairs else 0


def _trial_factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    primes = _PRIMES.ensure(max(math.isqrt(n) + 1, 2))
    for p in primes:
        p = int(p)
        if p * p > n:
            break
        if n % p == 0:
            k = 0
            while n % p == 0:
                n //= p
                k += 1
            out[p] = k
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def factor_dict(n: int) -> dict[int, int]:
    """{prime: exponent} for 1 <= n <= 2^63 - 1."""
    n = int(n)
    if n < 1:
        raise ValueError("factorize: n must be a positive integer")
    if n >= 2**63:
        raise ValueError("factorize: n must be at most 2^63 - 1")
    if n <= 10**12:
        return _trial_factor(n)
    import sympy

    return {int(p): int(k) for p, k in sympy.factorint(n).items()}


def factorize(n: int) -> MultiIndex:
    """Multi-index kappa(n) with n = prod p_j^{kappa_j}."""
    return MultiIndex.from_factorization(factor_dict(n))


# ---------------------------------------------------------------------------
# dense tables for n <= N
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def spf_table(N: int) -> np.ndarray:
    """Smallest prime factor of every n <= N (entries 0 and 1 are 1)."""
    spf = np.zeros(N + 1, dtype=np.int64)
    spf[:2] = 1
    for p in range(2, math.isqrt(N) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
            spf[p] = p
    zero = spf == 0
    spf[zero] = np.flatnonzero(zero)
    return spf


def exponent_table(N: int, prime: int) -> np.ndarray:
    """v_p(n) for n = 0..N (v_p(0) is reported as 0)."""
    e = np.zeros(N + 1, dtype=np.int64)
    q = prime
    while q <= N:
        e[q::q] += 1
        q *= prime
    e[0] = 0
    return e


def omega_table(N: int) -> np.ndarray:
    """Omega(n) for n = 1..N (index 0 is n=1, as in mult_table)."""
    # 2^Omega(n) is exact in double precision for n < 2^53
    return np.rint(np.log2(mult_table(omega_power(2.0), N))).astype(np.int64)


def mult_table(spec: "MultiplicativeSpec", N: int) -> np.ndarray:
    """Values spec(n) for n = 1..N as a float array of length N (index 0 is n=1)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    (_, vals), = iter_segments(spec, N, segment_size=N)
    return vals


def divisor_count_table(N: int) -> np.ndarray:
    return mult_table(divisor_power(1.0), N)


def exponent_matrix(ns: Sequence[int]):
    """Sparse matrix E with E[i, j-1] = kappa_j(ns[i]); shape (len(ns), max prime index).

    Vectorized over ns through a smallest-prime-factor table, so ns should be
    modest (<= ~10^7).
    """
    from scipy import sparse

    ns = np.asarray(ns, dtype=np.int64)
    if ns.size and ns.min() < 1:
        raise ValueError("exponent_matrix needs positive integers")
    N = int(ns.max()) if ns.size else 1
    spf = spf_table(max(N, 2))
    primes = _PRIMES.ensure(max(N, 2))
    rows, cols = [], []
    cur = ns.copy()
    live = np.flatnonzero(cur > 1)
    while live.size:
        p = spf[cur[live]]
        rows.append(live)
        cols.append(np.searchsorted(primes, p))
        cur[live] //= p
        live = live[cur[live] > 1]
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int64)
    d = int(c.max()) + 1 if c.size else 0
    # duplicate (row, col) pairs are summed into exponents
    E = sparse.coo_matrix((np.ones(r.size), (r, c)), shape=(len(ns), d)).tocsr()
    E.sum_duplicates()
    return E


# ---------------------------------------------------------------------------
# multiplicative functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplicativeSpec:
    """A multiplicative function determined by its (prime independent) values on p^k.

    kind is one of 'divisor_power' (d(n)^param), 'omega_power' (param^Omega(n)),
    'generalized_divisor' (d_param(n), coefficients of zeta^param) or 'table'
    (Gamma(p^k) = gammas[k], with gammas[0] == 1).
    """

    kind: str
    param: float = 0.0
    gammas: tuple[float, ...] = ()
    tail: float | None = None
    _kinds = ("divisor_power", "omega_power", "generalized_divisor", "table")

    def __post_init__(self):
        if self.kind not in self._kinds:
            raise ValueError(f"unknown multiplicative kind {self.kind!r}")
        if self.kind == "table":
            if not self.gammas or self.gammas[0] != 1:
                raise ValueError("prime-power table requires gamma_0 = 1")

    def prime_power_values(self, kmax: int) -> np.ndarray:
        """Array [f(p^0), ..., f(p^kmax)]."""
        k = np.arange(kmax + 1, dtype=np.float64)
        if self.kind == "divisor_power":
            return (k + 1.0) ** self.param
        if self.kind == "omega_power":
            return float(self.param) ** k
        if self.kind == "generalized_divisor":
            # binom(y+k-1, k) as a running product; scipy's binom is nan at negative integer y
            return np.concatenate([[1.0], np.cumprod((self.param + k[1:] - 1.0) / k[1:])])
        g = np.asarray(self.gammas, dtype=np.float64)
        if kmax < len(g):
            return g[: kmax + 1].copy()
        if self.tail is None:
            raise ValueError(f"prime-power table has no value for exponent {len(g)}")
        return np.concatenate([g, np.full(kmax + 1 - len(g), float(self.tail))])

    @property
    def integer_valued(self) -> bool:
        vals = self.prime_power_values(8)
        return bool(np.all(vals == np.round(vals)))

    def label(self) -> str:
        if self.kind == "table":
            return "table:" + ",".join(f"{g:g}" for g in self.gammas)
        short = {"divisor_power": "divisor", "omega_power": "omega", "generalized_divisor": "gdiv"}
        return f"{short[self.kind]}:{self.param:g}"


def divisor_power(alpha: float) -> MultiplicativeSpec:
    return MultiplicativeSpec("divisor_power", float(alpha))


def omega_power(y: float) -> MultiplicativeSpec:
    return MultiplicativeSpec("omega_power", float(y))


def generalized_divisor(y: float) -> MultiplicativeSpec:
    return MultiplicativeSpec("generalized_divisor", float(y))


def prime_power_table(gammas: Sequence[float], tail: float | None = None) -> MultiplicativeSpec:
    return MultiplicativeSpec("table", gammas=tuple(float(g) for g in gammas), tail=tail)


def constant_one() -> MultiplicativeSpec:
    return prime_power_table([1.0], tail=1.0)


def parse_spec(text: str) -> MultiplicativeSpec:
    """Parse 'divisor:1', 'omega:1.5', 'gdiv:0.5' or 'table:1,0.5,0.25[;tail]'."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind in ("divisor", "d"):
        return divisor_power(float(arg))
    if kind in ("omega", "y"):
        return omega_power(float(arg))
    if kind in ("gdiv", "dy"):
        return generalized_divisor(float(arg))
    if kind == "table":
        body, _, tail = arg.partition(";")
        return prime_power_table([float(v) for v in body.split(",")], float(tail) if tail else None)
    raise ValueError(f"cannot parse multiplicative spec {text!r}")


def mult_eval(spec: MultiplicativeSpec, n: int) -> float:
    """spec(n) = prod_j spec(p_j^{kappa_j})."""
    fac = factor_dict(n)
    if not fac:
        return 1.0
    vals = spec.prime_power_values(max(fac.values()))
    out = 1.0
    for k in fac.values():
        out *= vals[k]
    return float(out)


# ---------------------------------------------------------------------------
# segmented sieve
# ---------------------------------------------------------------------------

def sieve_memory_required(x: int, segment_size: int = DEFAULT_SEGMENT) -> int:
    """Bytes needed by sieve_sum for bound x."""
    seg = min(segment_size, x)
    r = math.isqrt(x) + 1
    return seg * _BYTES_PER_ENTRY + (r + 1) + 8 * int(1.3 * r / max(math.log(r), 1.0) + 10)


def _sieve_segment(lo: int, hi: int, primes: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Values of the multiplicative function on [lo, hi)."""
    m = hi - lo
    val = np.ones(m, dtype=np.float64)
    prod = np.ones(m, dtype=np.int64)
    e = np.empty(m, dtype=np.uint8)
    for p in primes:
        p = int(p)
        if p * p >= hi:
            break
        s = (-lo) % p
        if s >= m:
            continue
        ev = e[s:m:p]
        ev[:] = 1
        prod[s:m:p] *= p
        q, j = p * p, 2
        while q < hi:
            sq = (-lo) % q
            if sq < m:
                e[sq:m:q] = j
                prod[sq:m:q] *= p
            q *= p
            j += 1
        val[s:m:p] *= table[ev]
    n = np.arange(lo, hi, dtype=np.int64)
    # at most one prime factor above sqrt(hi) remains
    val[prod != n] *= table[1]
    return val


def iter_segments(spec: MultiplicativeSpec, x: int, segment_size: int = DEFAULT_SEGMENT,
                  start: int = 1, workers: int = 1) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (lo, values of spec on [lo, lo + len)) covering start..x in order."""
    x = int(x)
    primes = primes_up_to(math.isqrt(x) + 1)
    kmax = max(1, int(math.log2(max(x, 2))) + 1)
    table = spec.prime_power_values(kmax)
    bounds = [(lo, min(lo + segment_size, x + 1)) for lo in range(start, x + 1, segment_size)]

    def job(b):
        lo, hi = b
        vals = _sieve_segment(lo, hi, primes, table)
        if lo == 1:
            vals[0] = 1.0
        return lo, vals

    if workers <= 1:
        for b in bounds:
            yield job(b)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # bounded lookahead keeps memory at O(workers * segment)
        pending = []
        it = iter(bounds)
        for b in it:
            pending.append(pool.submit(job, b))
            if len(pending) >= workers:
                yield pending.pop(0).result()
        for fut in pending:
            yield fut.result()


def sieve_sum(spec: MultiplicativeSpec, x: int, checkpoints: Sequence[int] | None = None,
              segment_size: int = DEFAULT_SEGMENT, memory_budget: int | None = None,
              workers: int = 1, weight=None) -> list[tuple[int, float]]:
    """Partial sums S(t) = sum_{n<=t} spec(n) at each checkpoint t (default: t = x).

    `weight`, if given, maps an int64 array of n to per-n factors multiplied into
    the summand; the result is then sum_{n<=t} spec(n) * weight(n).
    """
    x = int(x)
    if x < 1:
        raise ValueError("x must be positive")
    checkpoints = [x] if not checkpoints else [int(t) for t in checkpoints]
    if any(b < a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be sorted")
    if checkpoints[0] < 1 or checkpoints[-1] > x:
        raise ValueError("checkpoints must lie in [1, x]")
    required = sieve_memory_required(x, segment_size)
    if x > MAX_SIEVE_X:
        raise ResourceBudgetError(f"x={x} exceeds the supported bound {MAX_SIEVE_X}", required)
    if memory_budget is not None and required > memory_budget:
        raise ResourceBudgetError(
            f"sieve to x={x} with segment {segment_size} needs {required} bytes, budget is {memory_budget}",
            required)

    out: list[tuple[int, float]] = []
    ci = 0
    running = 0.0
    for lo, vals in iter_segments(spec, x, segment_size, workers=workers):
        if weight is not None:
            vals = vals * weight(np.arange(lo, lo + len(vals), dtype=np.int64))
        hi = lo + len(vals)
        if ci < len(checkpoints) and checkpoints[ci] < hi:
            csum = np.cumsum(vals)
            while ci < len(checkpoints) and checkpoints[ci] < hi:
                out.append((checkpoints[ci], running + float(csum[checkpoints[ci] - lo])))
                ci += 1
            running += float(csum[-1])
        else:
            running += float(vals.sum())
        if ci == len(checkpoints):
            break
    return out
