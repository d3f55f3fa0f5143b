import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirichlet_spaces import compose, dseries as ds, numth
from dirichlet_spaces.bohr import Symbol
from dirichlet_spaces.dseries import DirichletCoeffs
from dirichlet_spaces.families import random_polynomial, random_symbol


def sym(text: str) -> Symbol:
    return Symbol.from_series(ds.parse_series(text))


SIMPLE = sym("3/2-2^-s")


def test_compose_constant():
    g = compose.compose_coeffs(DirichletCoeffs.one(1), SIMPLE, 50)
    assert g == DirichletCoeffs.one(50)


def test_compose_monomial_example():
    g = compose.compose_coeffs(DirichletCoeffs.monomial(2), SIMPLE, 1024)
    ln2 = math.log(2)
    for n in range(1, 1025):
        k = int(round(math.log2(n)))
        expect = 2 ** -1.5 * ln2 ** k / math.factorial(k) if 2 ** k == n else 0.0
        assert g[n] == pytest.approx(expect, abs=1e-15)


def test_compose_refuses_violated_symbol():
    bad = sym("1-2^-s")
    with pytest.raises(compose.RefusedSymbol):
        compose.compose_coeffs(DirichletCoeffs.monomial(2), bad, 10)
    g = compose.compose_coeffs(DirichletCoeffs.monomial(2), bad, 10, force=True)
    assert g[1] == pytest.approx(0.5)


def test_compose_rejects_characteristic_one():
    s = sym("3/2-2^-s")
    s.c0 = 1
    with pytest.raises(Exception) as info:
        compose.compose_coeffs(DirichletCoeffs.monomial(2), s, 10)
    assert "characteristic" in str(info.value)


def test_compose_matches_direct_evaluation():
    # oracle: evaluate f at the point phi(3) directly
    r = np.random.default_rng(7)
    worst = 0.0
    for _ in range(25):
        f = random_polynomial(r, int(r.integers(2, 60)), dim=3, density=0.5)
        phi = random_symbol(r, dim=int(r.integers(1, 4)), n_terms=3, max_n=30)
        N_out, sigma = 2000, 3.0
        g = compose.compose_coeffs(f, phi, N_out)
        direct = ds.evaluate(f, phi(sigma))[0]
        got = ds.evaluate(g, sigma)[0]
        bound = compose.compose_tail_bound(f, phi, N_out, sigma)
        assert abs(got - direct) <= bound
        worst = max(worst, abs(got - direct) / bound)
    assert worst < 1


@settings(max_examples=15)
@given(st.integers(0, 10 ** 6))
def test_compose_is_multiplicative(seed):
    r = np.random.default_rng(seed)
    N = 64
    f, g = random_polynomial(r, 12, density=0.5), random_polynomial(r, 12, density=0.5)
    phi = random_symbol(r, dim=2)
    lhs = compose.compose_coeffs(ds.convolve(f, g, 144), phi, N)
    rhs = ds.convolve(compose.compose_coeffs(f, phi, N), compose.compose_coeffs(g, phi, N), N)
    np.testing.assert_allclose(lhs.a, rhs.a, atol=1e-10 * max(1.0, np.abs(lhs.a).max()))


# --- operator matrix -------------------------------------------------------------

def test_operator_first_column_is_unit_vector():
    T = compose.operator_matrix(SIMPLE, 1.0, 0.5, 32, 64)
    e1 = np.zeros(64)
    e1[0] = 1
    np.testing.assert_array_equal(T.column(1), e1)
    assert T.matrix.shape == (64, 32)


def test_operator_scaling():
    T0 = compose.operator_matrix(SIMPLE, 0.0, 0.0, 16, 64).dense
    T = compose.operator_matrix(SIMPLE, 1.0, 0.5, 16, 64).dense
    d_in = numth.divisor_count_table(16)
    d_out = numth.divisor_count_table(64)
    np.testing.assert_allclose(T, T0 * np.sqrt(d_in)[None, :] * d_out[:, None] ** -0.25, rtol=1e-14)


def test_restricted_symbol_columns_decay():
    # |n^{-phi}| <= n^{-3/4} on the torus, so the l2 mass of column n is at most n^{-3/4}
    T = compose.operator_matrix(sym("7/4-2^-s"), 0.0, 0.0, 256, 4096)
    norms = np.linalg.norm(T.dense, axis=0)
    n = np.arange(1, 257)
    assert np.all(norms <= n ** -0.75 * (1 + 1e-9))
    # exact: n^{-phi} = n^{-7/4} sum_k (log n)^k / k! 2^{-ks}, kept for 2^k <= 4096
    ln = np.log(n)
    exact = n ** -1.75 * np.sqrt(sum(ln ** (2 * k) / math.factorial(k) ** 2 for k in range(13)))
    np.testing.assert_allclose(norms, exact, rtol=1e-12)


def test_norm_nondecreasing_in_n():
    vals = [compose.estimate_operator_norm(compose.operator_matrix(SIMPLE, 0.0, 0.0, N, N))
            for N in [2 ** k for k in range(4, 11)]]
    assert all(b >= a * (1 - 1e-9) for a, b in zip(vals, vals[1:]))


def test_norm_estimator_examples():
    assert compose.estimate_operator_norm(np.eye(5)) == pytest.approx(1.0)
    assert compose.estimate_operator_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    r = np.random.default_rng(0)
    u, v = r.standard_normal(7), r.standard_normal(5) + 1j * r.standard_normal(5)
    M = np.outer(u, v.conj())
    assert compose.estimate_operator_norm(M) == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-8)
    with pytest.raises(ValueError):
        compose.estimate_operator_norm(M, iters=0)


@given(st.integers(0, 10 ** 6))
def test_norm_estimator_matches_svd(seed):
    M = np.random.default_rng(seed).standard_normal((12, 9))
    assert compose.estimate_operator_norm(M, iters=500) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0],
                                                                          rel=1e-6)


@pytest.mark.parametrize("fmt", ["csv", "binary"])
def test_export_roundtrip(tmp_path, fmt):
    T = compose.operator_matrix(sym("17/10-2^-s+0.1j*3^-s"), 1.0, 1.0, 16, 32)
    path = T.export(tmp_path / f"op.{fmt}", fmt)
    header, M = compose.TruncatedOperator.load(path)
    assert header["N_in"] == 16 and header["order"] == "row-major"
    np.testing.assert_array_equal(M, T.dense)
    with pytest.raises(ValueError):
        T.export(tmp_path / "x", "xml")
