import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import beta as beta_fn, gammaln

from dirichlet_spaces import dseries as ds, embed
from dirichlet_spaces.dseries import DirichletCoeffs
from dirichlet_spaces.families import random_disc_polynomial, random_polynomial


# --- Weissler -------------------------------------------------------------------------

def test_weissler_examples():
    assert tuple(embed.weissler_margin([1.0], 1.3)) == pytest.approx((1.0, 1.0, 0.0), abs=1e-14)
    lhs, rhs, margin = embed.weissler_margin([1, 1], 1.0)
    assert lhs == pytest.approx(math.sqrt(1.5))
    assert rhs == pytest.approx(4 / math.pi, abs=1e-7)
    assert margin > 0
    with pytest.raises(ValueError):
        embed.weissler_margin([1, 1], 2.5)


@given(st.integers(0, 10 ** 6), st.integers(0, 30))
def test_weissler_parseval_at_two(seed, degree):
    a = random_disc_polynomial(np.random.default_rng(seed), degree)
    assert abs(embed.weissler_margin(a, 2.0).margin) < 1e-12 * np.linalg.norm(a)


@pytest.mark.parametrize("p", [1.0, 1.25, 1.5, 1.75, 2.0])
def test_weissler_inequality_holds(p):
    r = np.random.default_rng(int(p * 100))
    worst = min(embed.weissler_margin(random_disc_polynomial(r, int(r.integers(0, 40))), p).margin
                for _ in range(1000))
    # equispaced rule is exact for |f|^2 and spectrally accurate otherwise
    assert worst >= -1e-9


# --- Helson -----------------------------------------------------------------------------

def test_helson_one_variable_example():
    d1, est, sig = embed.helson_margin(ds.parse_series("1+2^-s"), n_mc=400_000, seed=2)
    assert d1 == pytest.approx(math.sqrt(1.5))
    assert abs(est.mean - 4 / math.pi) <= 3 * est.stderr
    assert sig > 0


def test_helson_constant_is_equality():
    d1, est, sig = embed.helson_margin(DirichletCoeffs([2 - 2j]), n_mc=10)
    assert d1 == pytest.approx(est.mean) and sig == 0


def test_helson_random_family():
    r = np.random.default_rng(8)
    for _ in range(30):
        f = random_polynomial(r, int(r.integers(2, 51)), dim=int(r.integers(1, 4)))
        _, _, sig = embed.helson_margin(f, n_mc=100_000, seed=int(r.integers(1 << 30)))
        assert sig >= -3


# --- local embedding at p = 2 -------------------------------------------------------------

def test_local_embedding_examples():
    m = embed.local_embedding_p2(DirichletCoeffs.monomial(7))
    assert m.lhs == pytest.approx(1 / 7, rel=1e-12)
    assert m.extra["ratio"] == pytest.approx(1 / 7, rel=1e-12)
    c = embed.local_embedding_p2(DirichletCoeffs([3.0]))
    assert c.extra["ratio"] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_local_embedding_closed_form(seed):
    # int_0^1 (m n)^{-1/2} (n/m)^{it} dt in closed form for every pair
    f = random_polynomial(np.random.default_rng(seed), 30, density=0.5)
    ns = f.support()
    a = f.a[ns - 1]
    lam = np.log(ns)[None, :] - np.log(ns)[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        kern = np.where(lam == 0, 1.0, (1 - np.exp(-1j * lam)) / (1j * np.where(lam == 0, 1, lam)))
    exact = np.real(np.conj(a)[:, None] * a[None, :] / np.sqrt(np.outer(ns, ns)) * kern).sum()
    assert embed.local_embedding_p2(f).lhs == pytest.approx(exact, rel=1e-7)


# --- Bergman-type left side --------------------------------------------------------------

@pytest.mark.parametrize("p", [1.0, 1.2, 1.5, 1.9])
def test_bergman_constant_closed_form(p):
    # int_0^inf x^{mu-2} sqrt(pi) Gamma(mu-1/2)/Gamma(mu) (1+x)^{1-2mu} dx with mu = 2/p
    mu = 2 / p
    const = math.exp(0.5 * math.log(math.pi) + gammaln(mu - 0.5) - gammaln(mu)) * beta_fn(mu - 1, mu)
    assert embed.bergman_lhs(DirichletCoeffs([2.0]), p) == pytest.approx(2 * math.sqrt(const), rel=1e-10)
    if p == 1.0:
        assert embed.bergman_lhs(DirichletCoeffs([1.0]), p) == pytest.approx(math.sqrt(math.pi) / 2)


def test_bergman_zero_and_domain():
    assert embed.bergman_lhs(DirichletCoeffs(np.zeros(4)), 1.5) == 0
    with pytest.raises(ValueError):
        embed.bergman_lhs(DirichletCoeffs([1.0]), 2.0)


def _bergman_nested_quad(f, p):
    mu = 2 / p

    def inner(sig):
        s_r = sig + 0.5
        g = lambda t: abs(ds.evaluate(f, complex(sig, t))[0]) ** 2 * (s_r ** 2 + t ** 2) ** (-mu)
        return 2 * quad(g, 0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)[0] if np.all(f.a.imag == 0) \
            else quad(g, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)[0]

    a = quad(inner, 0.5, 1.5, weight="alg", wvar=(mu - 2, 0), epsabs=1e-12, epsrel=1e-10, limit=200)[0]
    b = quad(lambda x: inner(x) * (x - 0.5) ** (mu - 2), 1.5, np.inf, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
    return math.sqrt(a + b)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_bergman_against_nested_quadrature():
    f = ds.parse_series("1+2^-s")
    assert embed.bergman_lhs(f, 1.0) == pytest.approx(_bergman_nested_quad(f, 1.0), rel=1e-6)


@pytest.mark.parametrize("mu", [1.05, 4 / 3, 1.6, 2.0])
@pytest.mark.parametrize("lam", [0.0, 0.4, 1.1, 3.0])
def test_t_integral_against_quad(mu, lam):
    c = 1.3
    ref = 2 * quad(lambda t: math.cos(lam * t) * (c * c + t * t) ** (-mu), 0, np.inf, limit=400,
                   epsabs=1e-14)[0] if lam == 0 else \
        2 * quad(lambda t: (c * c + t * t) ** (-mu), 0, np.inf, weight="cos", wvar=lam, limlst=200)[0]
    assert embed._t_integral(np.array([lam]), np.array([c]), mu)[0] == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("p", [1.0, 1.3, 1.7, 1.95])
def test_sigma_rule_against_quad(p):
    # smooth decaying test function against the endpoint power x^{2/p-2}
    g = lambda x: np.exp(-1.7 * x) / (1 + x) ** 2
    e = 2 / p - 2
    ref = quad(g, 0, 1, weight="alg", wvar=(e, 0), epsabs=1e-14)[0] + \
        quad(lambda x: g(x) * x ** e, 1, np.inf, epsabs=1e-14)[0]
    x, w = embed._sigma_rule(p)
    assert float(w @ g(x)) == pytest.approx(ref, rel=1e-9)


@given(st.integers(0, 10 ** 6), st.floats(0.1, 10), st.floats(-math.pi, math.pi))
@settings(max_examples=30)
def test_bergman_homogeneous(seed, scale, angle):
    f = random_polynomial(np.random.default_rng(seed), 20, density=0.5)
    c = scale * np.exp(1j * angle)
    assert embed.bergman_lhs(f * c, 1.5) == pytest.approx(abs(c) * embed.bergman_lhs(f, 1.5), rel=1e-12)


def test_bergman_ratio_to_hp_bounded():
    r = np.random.default_rng(21)
    fam = [random_polynomial(r, int(r.integers(2, 41)), dim=3, density=0.6) for _ in range(200)]
    from dirichlet_spaces.sampling import estimate_hp_norm_family
    hp = estimate_hp_norm_family(fam, 1.5, 50_000, seed=3)
    ratios = [embed.bergman_lhs(f, 1.5) / e.mean for f, e in zip(fam, hp)]
    # the constant is not quantified; this family peaks near 2.4
    assert max(ratios) < 5.0


# --- optimality probe --------------------------------------------------------------------

def test_restricted_norm_positive_and_monotone_in_eps():
    vals = [embed.dbi_restricted_norm_sq(e, 1.5, 0.1) for e in [2.0 ** -6, 2.0 ** -8, 2.0 ** -10]]
    assert all(v > 0 for v in vals)
    assert vals[0] < vals[1] < vals[2]      # beta below threshold: blow-up as eps -> 0
    with pytest.raises(ValueError):
        embed.dbi_restricted_norm_sq(0.1, 1.5, 0.0)


def test_optimality_probe_at_threshold():
    fit = embed.optimality_probe(1.5, 1 / 3, [2.0 ** -k for k in range(6, 13)])
    assert fit.slope == pytest.approx(embed.optimality_slope_theory(1.5, 1 / 3), abs=0.08)
    assert embed.optimality_slope_theory(1.5, 1 / 3) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        embed.optimality_probe(2.0, 0.5, [0.1, 0.01])


# --- dichotomy -------------------------------------------------------------------------

def test_dichotomy_partial_sums_match_direct():
    xs = [100, 1000, 10 ** 4, 10 ** 5]
    rep = embed.convergence_dichotomy(1.0, 2.0, xs)
    from dirichlet_spaces import numth
    d = numth.divisor_count_table(xs[-1]).astype(float)
    n = np.arange(1, xs[-1] + 1, dtype=float)
    terms = np.zeros_like(n)
    terms[1:] = d[1:] / (n[1:] * np.log(n[1:]) ** 2)
    cum = np.cumsum(terms)
    np.testing.assert_allclose(rep.partial_sums, [cum[x - 1] for x in xs], rtol=1e-10)
    assert rep.theory_exponent == pytest.approx(-1.0)
    assert rep.theory_convergent is False
    with pytest.raises(ValueError):
        embed.convergence_dichotomy(0, 2, [10, 5, 100, 1000])


# --- H^4 norm of the Hilbert symbol ------------------------------------------------------

def test_h4_small_case_by_hand():
    l2, l3 = math.log(2), math.log(3)
    c4 = 1 / (2 * l2 ** 2)
    c6 = 2 / (math.sqrt(6) * l2 * l3)
    c9 = 1 / (3 * l3 ** 2)
    assert embed.h4_norm_of_g(3) == pytest.approx(c4 ** 2 + c6 ** 2 + c9 ** 2, rel=1e-14)
    with pytest.raises(ValueError):
        embed.h4_norm_of_g(1)


def test_h4_matches_convolution_and_is_monotone():
    vals = []
    for N in [4, 10, 30, 100, 300]:
        g = ds.hilbert_symbol_g(N)
        sq = ds.convolve(g, g, N * N)
        assert embed.h4_norm_of_g(N) == pytest.approx(ds.h2_norm(sq) ** 2, rel=1e-12)
        vals.append(embed.h4_norm_of_g(N))
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_partial_norms_are_lower_bounds():
    cps = [50, 100, 1000, 5000]
    rows = embed.g_square_partial_norms(cps, segment=777)
    g = ds.hilbert_symbol_g(5000)
    full = ds.convolve(g, g, 5000).a.real
    for N, T in rows:
        assert T == pytest.approx(float(np.sum(full[:N] ** 2)), rel=1e-12)
        assert T <= embed.h4_norm_of_g(min(N, 5000))


def test_h4_growth_report_shape():
    rep = embed.h4_growth([10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
    assert rep["increments_positive"]
    assert len(rep["increments"]) == 3


# --- Hilbert ratio --------------------------------------------------------------------

def test_hilbert_ratio_examples():
    g = ds.hilbert_symbol_g(500)
    out = embed.hilbert_ratio(2.0, [DirichletCoeffs([5.0]), g])
    assert out["ratios"][0] == 0
    assert out["ratios"][1] == pytest.approx(ds.h2_norm(g), rel=1e-12)
    assert out["argmax"] == 1
    with pytest.raises(ValueError):
        embed.hilbert_ratio(1.0, [g])


def test_hilbert_ratio_bounded_by_cauchy_schwarz():
    r = np.random.default_rng(5)
    fam = [random_polynomial(r, int(r.integers(2, 1001)), density=0.3) for _ in range(100)]
    out = embed.hilbert_ratio(2.0, fam)
    assert out["max_ratio"] <= ds.h2_norm(ds.hilbert_symbol_g(1000)) * (1 + 1e-12)


def test_cayley_map():
    assert embed.cayley_to_half_plane(0) == 1.5
    z = np.exp(1j * np.linspace(-3, 3, 7))
    np.testing.assert_allclose(embed.cayley_to_half_plane(z).real, 0.5, atol=1e-12)
