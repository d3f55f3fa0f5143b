"""Bohr lift of Dirichlet polynomials and range checks for composition symbols."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from . import numth
from .dseries import DirichletCoeffs, HalfPlanePoint, evaluate
from .numth import MultiIndex


class UnsupportedDimension(ValueError):
    """Grid search over the torus is too expensive in this many variables."""


class UnsupportedSymbol(ValueError):
    pass


class BohrPoly:
    """Sparse polynomial in z_1, z_2, ... where z_j stands for p_j^{-s}.

    Stored as an integer exponent matrix (terms x d) and a coefficient vector.
    """

    __slots__ = ("exps", "coeffs")

    def __init__(self, exps, coeffs):
        exps = np.asarray(exps, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()
        if exps.ndim == 1:
            exps = exps.reshape(coeffs.size, -1) if coeffs.size else np.zeros((0, 0), np.int64)
        if exps.shape[0] != coeffs.size:
            raise ValueError("one exponent row per coefficient required")
        keep = coeffs != 0
        exps, coeffs = exps[keep], coeffs[keep]
        # trim trailing all-zero columns so d is the largest active prime index
        if exps.size:
            active = np.flatnonzero(exps.any(axis=0))
            d = int(active[-1]) + 1 if active.size else 0
        else:
            d = 0
        self.exps = np.ascontiguousarray(exps[:, :d]) if exps.ndim == 2 else np.zeros((0, 0), np.int64)
        self.coeffs = coeffs

    @classmethod
    def from_terms(cls, terms: Mapping) -> "BohrPoly":
        """Build from {MultiIndex or exponent tuple: coefficient}, merging duplicates."""
        merged: dict[tuple, complex] = {}
        for k, c in terms.items():
            key = MultiIndex(tuple(k.exponents if isinstance(k, MultiIndex) else k)).exponents
            merged[key] = merged.get(key, 0) + complex(c)
        d = max((len(k) for k in merged), default=0)
        exps = np.zeros((len(merged), d), dtype=np.int64)
        for i, k in enumerate(merged):
            exps[i, : len(k)] = k
        return cls(exps, list(merged.values()))

    @property
    def d(self) -> int:
        return self.exps.shape[1]

    @property
    def degree(self) -> int:
        return int(self.exps.sum(axis=1).max()) if self.coeffs.size else 0

    @property
    def terms(self) -> dict[MultiIndex, complex]:
        return {MultiIndex(tuple(int(e) for e in row)): complex(c)
                for row, c in zip(self.exps, self.coeffs)}

    def constant_term(self) -> complex:
        zero = ~self.exps.any(axis=1) if self.d else np.ones(self.coeffs.size, bool)
        return complex(self.coeffs[zero].sum())

    def __repr__(self):
        parts = []
        for mi, c in list(self.terms.items())[:6]:
            mono = "*".join(f"z{j + 1}^{e}" if e > 1 else f"z{j + 1}"
                            for j, e in enumerate(mi.exponents) if e)
            parts.append(f"({c:.6g}){'*' + mono if mono else ''}")
        return f"BohrPoly(d={self.d}, degree={self.degree}: {' + '.join(parts) or '0'})"

    def __eq__(self, other):
        if not isinstance(other, BohrPoly):
            return NotImplemented
        return self.terms == other.terms

    def __mul__(self, other: "BohrPoly") -> "BohrPoly":
        d = max(self.d, other.d)
        a = np.zeros((self.coeffs.size, d), np.int64)
        b = np.zeros((other.coeffs.size, d), np.int64)
        a[:, : self.d] = self.exps
        b[:, : other.d] = other.exps
        exps = (a[:, None, :] + b[None, :, :]).reshape(a.shape[0] * b.shape[0], d)
        coeffs = np.multiply.outer(self.coeffs, other.coeffs).ravel()
        return BohrPoly.from_terms(_accumulate(exps, coeffs))

    def __call__(self, z) -> np.ndarray:
        return eval_bohr(self, z)


def _accumulate(exps: np.ndarray, coeffs: np.ndarray) -> dict:
    out: dict[tuple, complex] = {}
    for row, c in zip(map(tuple, exps.tolist()), coeffs):
        out[row] = out.get(row, 0) + c
    return out


def bohr_lift(f: DirichletCoeffs) -> BohrPoly:
    """a_n n^{-s}  ->  a_n z^{kappa(n)}."""
    ns = f.support()
    if ns.size == 0:
        return BohrPoly(np.zeros((0, 0)), [])
    E = numth.exponent_matrix(ns).toarray()
    return BohrPoly(E, f.a[ns - 1])


def inverse_bohr(P: BohrPoly, N: int, return_dropped: bool = False):
    """Dirichlet polynomial with coefficient of z^kappa placed at n = prod p_j^kappa_j.

    Terms with n > N are dropped; with return_dropped=True their count is returned too.
    """
    a = np.zeros(N, dtype=np.complex128)
    dropped = 0
    primes = [numth.nth_prime(j + 1) for j in range(P.d)]
    for row, c in zip(P.exps.tolist(), P.coeffs):
        # exact integer product; stop early once it passes N
        n = 1
        for p, e in zip(primes, row):
            n *= p ** e
            if n > N:
                break
        if n > N:
            dropped += 1
            continue
        a[n - 1] += c
    out = DirichletCoeffs(a)
    return (out, dropped) if return_dropped else out


def eval_bohr(P: BohrPoly, z) -> np.ndarray:
    """Evaluate at z of shape (d,) or (batch, d); longer vectors are allowed."""
    z = np.asarray(z, dtype=np.complex128)
    single = z.ndim == 1
    Z = z[None, :] if single else z
    if Z.shape[-1] < P.d:
        raise ValueError(f"point has {Z.shape[-1]} coordinates, polynomial needs {P.d}")
    out = np.zeros(Z.shape[0], dtype=np.complex128)
    for row, c in zip(P.exps, P.coeffs):
        term = np.full(Z.shape[0], c, dtype=np.complex128)
        for j in np.flatnonzero(row):
            term *= Z[:, j] ** int(row[j])
        out += term
    return out[0] if single else out


def _re_on_angles(P: BohrPoly, theta: np.ndarray) -> np.ndarray:
    """Re P(e^{i theta}) for theta of shape (batch, d); uses exp(i E theta)."""
    phase = theta @ P.exps.T.astype(np.float64)
    return np.real(np.exp(1j * phase) @ P.coeffs)


def min_re_on_torus(P: BohrPoly, grid: int = 720, refine_iters: int = 40,
                    max_points: int = 2_000_000, n_starts: int = 8):
    """Minimum of Re P over the distinguished boundary T^d.

    Coarse grid over [-pi, pi)^d (the per-axis resolution is lowered so the grid
    has at most max_points nodes), then coordinate descent with a shrinking step
    from the best n_starts nodes. Returns (min_value, theta) with theta in [-pi, pi)^d.
    """
    d = P.d
    if d == 0:
        return float(P.constant_term().real), np.zeros(0)
    if d > 4:
        raise UnsupportedDimension(
            f"grid search needs d <= 4 (got d={d}); use min_re_monte_carlo instead")
    g = int(min(grid, math.floor(max_points ** (1.0 / d))))
    g = max(g, 4)
    axis = -math.pi + 2 * math.pi * np.arange(g) / g
    vals = np.empty(g ** d)
    chunk = 1 << 18
    for lo in range(0, g ** d, chunk):
        idx = np.arange(lo, min(lo + chunk, g ** d))
        theta = axis[np.stack(np.unravel_index(idx, (g,) * d), axis=1)]
        vals[lo : lo + idx.size] = _re_on_angles(P, theta)
    # stable sort keeps the lexicographically first node among ties
    order = np.argsort(vals, kind="stable")[:n_starts]
    best_val, best_theta = math.inf, None
    for flat in order:
        theta = axis[np.array(np.unravel_index(flat, (g,) * d))].astype(np.float64)
        val = float(vals[flat])
        step = 2 * math.pi / g
        for _ in range(refine_iters):
            improved = False
            for j in range(d):
                trial = np.repeat(theta[None, :], 2, axis=0)
                trial[0, j] += step
                trial[1, j] -= step
                tv = _re_on_angles(P, trial)
                k = int(np.argmin(tv))
                if tv[k] < val:
                    val, theta, improved = float(tv[k]), trial[k], True
            if not improved:
                step *= 0.5
        if val < best_val:
            best_val, best_theta = val, theta
    best_theta = (best_theta + math.pi) % (2 * math.pi) - math.pi
    return best_val, best_theta


def min_re_monte_carlo(P: BohrPoly, n: int = 1_000_000, seed: int = 0, refine_iters: int = 40):
    """Random-start variant of min_re_on_torus for any dimension."""
    rng = np.random.Generator(np.random.Philox(seed))
    d = P.d
    if d == 0:
        return float(P.constant_term().real), np.zeros(0)
    best_val, best_theta = math.inf, None
    chunk = max(1, (1 << 20) // d)
    for lo in range(0, n, chunk):
        theta = rng.uniform(-math.pi, math.pi, size=(min(chunk, n - lo), d))
        v = _re_on_angles(P, theta)
        k = int(np.argmin(v))
        if v[k] < best_val:
            best_val, best_theta = float(v[k]), theta[k]
    step = 2 * math.pi / max(n ** (1.0 / d), 4)
    for _ in range(refine_iters):
        improved = False
        for j in range(d):
            for sgn in (1.0, -1.0):
                trial = best_theta.copy()
                trial[j] += sgn * step
                v = float(_re_on_angles(P, trial[None, :])[0])
                if v < best_val:
                    best_val, best_theta, improved = v, trial, True
        if not improved:
            step *= 0.5
    return best_val, (best_theta + math.pi) % (2 * math.pi) - math.pi


@dataclass
class Symbol:
    """phi(s) = c0 s + phi0(s); only c0 = 0 is handled downstream."""

    phi0: DirichletCoeffs
    c0: int = 0
    status: str = "unverified"          # unverified | G-verified | G-violated
    min_re: Optional[float] = None
    argmin: Optional[np.ndarray] = None  # angles on T^d of the minimizer / witness
    unrestricted_range: Optional[bool] = None
    tol: float = 1e-6
    notes: list = field(default_factory=list)

    @property
    def c1(self) -> complex:
        return self.phi0[1]

    def tail(self) -> DirichletCoeffs:
        """phi0 without its constant term."""
        a = self.phi0.a.copy()
        a[0] = 0
        return DirichletCoeffs(a)

    def lift(self) -> BohrPoly:
        return bohr_lift(self.phi0)

    def __call__(self, s) -> complex:
        s = s.s if isinstance(s, HalfPlanePoint) else complex(s)
        return self.c0 * s + evaluate(self.phi0, s)[0]

    def to_json(self) -> dict:
        out = {"c0": self.c0,
               "coeffs": [[n, c.real, c.imag] for n, c in self.phi0.items()],
               "tol": self.tol}
        if self.status != "unverified":
            out["status"] = self.status
            out["min_re"] = self.min_re
            out["argmin"] = None if self.argmin is None else [float(x) for x in self.argmin]
            out["unrestricted_range"] = self.unrestricted_range
        return out

    @classmethod
    def from_json(cls, obj) -> "Symbol":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if "coeffs" not in obj:
            raise ValueError("symbol JSON needs 'coeffs'")
        c0 = obj.get("c0", 0)
        if not isinstance(c0, int) or c0 < 0:
            raise ValueError("symbol characteristic c0 must be a nonnegative integer")
        rows = obj["coeffs"]
        N = max((int(r[0]) for r in rows), default=1)
        phi0 = DirichletCoeffs.from_json({"N": N, "coeffs": rows})
        return cls(phi0=phi0, c0=c0, tol=float(obj.get("tol", 1e-6)))

    @classmethod
    def from_series(cls, phi0: DirichletCoeffs, tol: float = 1e-6) -> "Symbol":
        return cls(phi0=phi0, c0=0, tol=tol)


def classify_symbol(sym: Symbol, tol: Optional[float] = None, grid: int = 720,
                    refine_iters: int = 40) -> Symbol:
    """Decide membership of a characteristic-zero symbol from min Re over T^d.

    G-verified iff min >= 1/2 - tol; unrestricted range iff also min <= 1/2 + tol.
    Returns a new Symbol; the input is not modified.
    """
    if sym.c0 != 0:
        raise UnsupportedSymbol("only characteristic c0 = 0 is supported")
    tol = sym.tol if tol is None else tol
    P = sym.lift()
    try:
        mval, theta = min_re_on_torus(P, grid, refine_iters)
        notes = []
    except UnsupportedDimension:
        mval, theta = min_re_monte_carlo(P, refine_iters=refine_iters)
        notes = ["monte-carlo range search (d > 4)"]
    ok = mval >= 0.5 - tol
    unrestricted = ok and mval <= 0.5 + tol
    if unrestricted:
        notes.append("minimum within tolerance of 1/2")
    return replace(sym, status="G-verified" if ok else "G-violated", min_re=mval,
                   argmin=theta, unrestricted_range=unrestricted if ok else None,
                   tol=tol, notes=notes)


def transference_symbol(N: int, taper: Optional[str] = None) -> Symbol:
    """Truncation of psi(s) = T(2^{-s}), T(z) = 1/2 + (1 - z)/(1 + z).

    Coefficients: 3/2 at n = 1 and 2(-1)^k at n = 2^k <= N. With taper='fejer'
    the k-th coefficient is multiplied by 1 - k/(K+1) (K = floor(log2 N)); the
    Fejer mean keeps Re on the torus at or above 1/2, which the raw partial sum
    does not.
    """
    if N < 2:
        raise ValueError("transference_symbol needs N >= 2")
    K = int(math.floor(math.log2(N)))
    while 2 ** (K + 1) <= N:
        K += 1
    while 2 ** K > N:
        K -= 1
    a = np.zeros(N, dtype=np.complex128)
    a[0] = 1.5
    for k in range(1, K + 1):
        w = 1.0 if taper is None else 1.0 - k / (K + 1)
        if taper not in (None, "fejer"):
            raise ValueError(f"unknown taper {taper!r}")
        a[2 ** k - 1] = 2.0 * (-1) ** k * w
    return Symbol(phi0=DirichletCoeffs(a))
