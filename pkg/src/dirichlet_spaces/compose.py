"""Composition C_phi f = f o phi for characteristic-zero symbols, and finite sections of C_phi."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import numth
from .bohr import Symbol, UnsupportedSymbol, classify_symbol
from .dseries import DirichletCoeffs, _log_n, exp_series


class RefusedSymbol(ValueError):
    """The symbol failed the range check and force was not given."""


def _checked(phi: Symbol, force: bool) -> Symbol:
    if phi.c0 != 0:
        raise UnsupportedSymbol("composition is implemented for characteristic c0 = 0 only")
    if phi.status == "unverified":
        phi = classify_symbol(phi)
    if phi.status == "G-violated" and not force:
        raise RefusedSymbol(
            f"symbol range leaves Re > 1/2 (min Re = {phi.min_re:.6g}); pass force=True to compose anyway")
    return phi


def monomial_image(n: int, phi: Symbol, N_out: int) -> DirichletCoeffs:
    """Coefficients of n^{-phi(s)} = n^{-c_1} exp(-log n * sum_{m>=2} c_m m^{-s})."""
    if n == 1:
        return DirichletCoeffs.one(N_out)
    ln = math.log(n)
    g = exp_series(phi.tail() * (-ln), N_out)
    return g * np.exp(-phi.c1 * ln)


def compose_coeffs(f: DirichletCoeffs, phi: Symbol, N_out: int, force: bool = False) -> DirichletCoeffs:
    """Coefficients of f o phi up to N_out."""
    phi = _checked(phi, force)
    out = np.zeros(N_out, dtype=np.complex128)
    for n, c in f.items():
        out += c * monomial_image(n, phi, N_out).a
    return DirichletCoeffs(out)


def compose_tail_bound(f: DirichletCoeffs, phi: Symbol, N_out: int, sigma: float) -> float:
    """Bound on |(f o phi)(s) - (compose_coeffs truncated at N_out)(s)| for Re s >= sigma.

    For each monomial, the dropped coefficients are dominated by those of
    exp(log n * sum |c_m| m^{-s}) whose full sum at sigma is known in closed form,
    so the bound is  sum |a_n| n^{-Re c_1} [exp(log n * S) - partial sum], S = sum |c_m| m^{-sigma}.
    A floating-point slack proportional to the magnitudes involved is added.
    """
    tail = phi.tail()
    abs_tail = DirichletCoeffs(np.abs(tail.a))
    S = float(np.sum(np.abs(tail.a) * np.exp(-sigma * _log_n(tail.N))))
    kpow = np.exp(-sigma * _log_n(N_out))
    total = 0.0
    scale = 0.0
    for n, c in f.items():
        if n == 1:
            continue
        ln = math.log(n)
        full = math.exp(ln * S)
        partial = float(np.sum(exp_series(abs_tail * ln, N_out).a.real * kpow))
        w = abs(c) * math.exp(-phi.c1.real * ln)
        total += w * max(full - partial, 0.0)
        scale += w * full
    return total + 64 * np.finfo(float).eps * (scale + 1.0)


@dataclass
class TruncatedOperator:
    """Finite section M[m, n] of C_phi : D_alpha -> D_beta in normalized monomial bases.

    Row m and column n are 1-based Dirichlet indices; matrix is stored sparse with
    shape (N_out, N_in).
    """

    matrix: sp.csr_matrix
    alpha: float
    beta: float
    N_in: int
    N_out: int
    symbol: dict

    @property
    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def column(self, n: int) -> np.ndarray:
        return self.matrix[:, n - 1].toarray().ravel()

    def export(self, path, fmt: str = "binary") -> Path:
        """Write the matrix row-major.

        csv: header comment lines, then one row per line as alternating re,im.
        binary: b"DSOP1\\n", one JSON header line, then N_out*N_in complex128 values.
        """
        path = Path(path)
        header = {"N_in": self.N_in, "N_out": self.N_out, "alpha": self.alpha,
                  "beta": self.beta, "symbol": self.symbol, "dtype": "complex128",
                  "order": "row-major"}
        M = self.dense
        if fmt == "csv":
            with path.open("w") as fh:
                fh.write("# " + json.dumps(header) + "\n")
                inter = np.empty((M.shape[0], 2 * M.shape[1]))
                inter[:, 0::2], inter[:, 1::2] = M.real, M.imag
                np.savetxt(fh, inter, delimiter=",", fmt="%.17g")
        elif fmt == "binary":
            with path.open("wb") as fh:
                fh.write(b"DSOP1\n")
                fh.write(json.dumps(header).encode() + b"\n")
                fh.write(np.ascontiguousarray(M, dtype="<c16").tobytes())
        else:
            raise ValueError("fmt must be 'csv' or 'binary'")
        return path

    @staticmethod
    def load(path) -> tuple[dict, np.ndarray]:
        path = Path(path)
        with path.open("rb") as fh:
            first = fh.readline()
            if first == b"DSOP1\n":
                header = json.loads(fh.readline())
                data = np.frombuffer(fh.read(), dtype="<c16")
                return header, data.reshape(header["N_out"], header["N_in"])
        text = path.read_text().splitlines()
        header = json.loads(text[0][2:])
        vals = np.loadtxt(text[1:], delimiter=",", ndmin=2)
        return header, vals[:, 0::2] + 1j * vals[:, 1::2]


def operator_matrix(phi: Symbol, alpha: float, beta: float, N_in: int, N_out: int,
                    force: bool = False) -> TruncatedOperator:
    """Column n: coefficients of n^{-phi} times d(n)^{alpha/2}; row m scaled by d(m)^{-beta/2}."""
    phi = _checked(phi, force)
    d_in = numth.divisor_count_table(N_in).astype(np.float64)
    d_out = numth.divisor_count_table(N_out).astype(np.float64)
    row_scale = d_out ** (-beta / 2.0)
    rows, cols, vals = [], [], []
    for n in range(1, N_in + 1):
        col = monomial_image(n, phi, N_out).a * row_scale * d_in[n - 1] ** (alpha / 2.0)
        nz = np.flatnonzero(col)
        rows.append(nz)
        cols.append(np.full(nz.size, n - 1))
        vals.append(col[nz])
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N_out, N_in))
    return TruncatedOperator(M, alpha, beta, N_in, N_out, phi.to_json())


def estimate_operator_norm(T, iters: int = 200, seed: int = 0) -> float:
    """Largest singular value by power iteration on T*T from a seeded start (a lower bound)."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    M = T.matrix if isinstance(T, TruncatedOperator) else T
    M = sp.csr_matrix(M) if not sp.issparse(M) else M.tocsr()
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    MH = M.conj().T.tocsr()
    lam = 0.0
    for _ in range(iters):
        w = MH @ (M @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return float(np.linalg.norm(M @ v))
