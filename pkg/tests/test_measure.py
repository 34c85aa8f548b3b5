import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import all_configs, ising_chain_energy, line
from gibbsium.lattice import Box, Config, boundary_shell, cube
from gibbsium.measure import (TransferChain, check_domination, entropy_formula_rhs, exact_gibbs, heatbath_sample,
                              ks_entropy_rate, marginal, conditional, plus_decomposition,
                              plus_referenced_decomposition, relative_entropy_rate, specific_energy, up_sets,
                              window_table)
from gibbsium.potential import ising
from gibbsium.specification import GibbsSpecification
from gibbsium.tables import INFINITE, ProbTable, ZeroProbabilityError, point_mass, product_table, uniform

PM = (-1, 1)


def plus_bc(box):
    return Config.constant(boundary_shell(box, 1), 1)


def test_exact_gibbs_uniform_and_single_site():
    box = line(3)
    assert np.allclose(exact_gibbs(ising(0.0), box, plus_bc(box)).p, 1 / 8, rtol=1e-15)
    one = Box(((0,),), 1)
    omega = Config.from_mapping({(-1,): 1, (1,): -1})
    a = exact_gibbs(ising(0.8, 0.3), one, omega)
    b = GibbsSpecification(ising(0.8, 0.3)).kernel(one, omega)
    assert np.array_equal(a.p, b.p)


def test_exact_gibbs_against_transfer_product():
    beta, h = 0.9, 0.2
    box = line(3)
    t = exact_gibbs(ising(beta, h), box, Config.from_mapping({(-1,): 1, (3,): 1}))
    # finite transfer product T(+, s1) T(s1, s2) T(s2, s3) T(s3, +)
    w = {c.values: math.exp(-ising_chain_energy(beta, h, c.values, 1, 1)) for c in all_configs(box)}
    z = sum(w.values())
    for c in all_configs(box):
        assert t.prob(c) == pytest.approx(w[c.values] / z, abs=1e-14)


def test_marginal_conditional_basics():
    box = line(2)
    mu = exact_gibbs(ising(1.0, 0.4), box, plus_bc(box))
    assert marginal(mu, box) is mu
    prod = product_table(box, PM, [0.3, 0.7])
    c = conditional(prod, Box(((0,),), 1), Config.from_mapping({(1,): -1}))
    assert np.allclose(c.p, [0.3, 0.7], atol=1e-15)
    # conditioning a 2-site Ising table on a neighbour gives the single-site kernel
    k = conditional(mu, Box(((1,),), 1), Config.from_mapping({(0,): -1}))
    direct = GibbsSpecification(ising(1.0, 0.4)).kernel(Box(((1,),), 1), Config.from_mapping({(0,): -1, (2,): 1}))
    assert np.allclose(k.p, direct.p, atol=1e-14)
    zero = ProbTable(box, PM, np.array([[0.5, 0.5], [0.0, 0.0]]))
    with pytest.raises(ZeroProbabilityError):
        zero.conditional(Box(((1,),), 1), Config.from_mapping({(0,): 1}))


def test_ks_entropy_examples():
    assert ks_entropy_rate(uniform(cube(1, 1), PM), 1) == pytest.approx(math.log(2), abs=1e-15)
    assert ks_entropy_rate(point_mass(cube(1, 1), PM, 1), 1) == 0.0
    q = 0.3
    want = -q * math.log(q) - (1 - q) * math.log(1 - q)
    assert ks_entropy_rate(product_table(cube(1, 1), PM, [q, 1 - q]), 1) == pytest.approx(want, abs=1e-15)


def test_relative_entropy_examples():
    box = cube(1, 1)
    mu = product_table(box, PM, [0.3, 0.7])
    assert relative_entropy_rate(mu, mu, 1) == 0.0
    want = 0.3 * math.log(0.6) + 0.7 * math.log(1.4)
    assert relative_entropy_rate(mu, uniform(box, PM), 1) == pytest.approx(want, abs=1e-15)
    assert relative_entropy_rate(mu, point_mass(box, PM, 1), 1) == INFINITE


def random_table(seed, box, zeros=False):
    rng = np.random.default_rng(seed)
    p = rng.random((2,) * len(box)) + (0 if zeros else 1e-3)
    if zeros:
        p[p < 0.2] = 0.0
        p.flat[0] += 1e-3
    return ProbTable(box, PM, p / p.sum())


seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=50)
@given(seeds, seeds, st.booleans())
def test_jensen_positivity(a, b, zeros):
    box = cube(1, 1)
    assert relative_entropy_rate(random_table(a, box, zeros), random_table(b, box, zeros), 1) >= 0


@settings(max_examples=30)
@given(seeds, seeds)
def test_filtration_monotone(a, b):
    box = cube(1, 2)
    mu, nu = random_table(a, box), random_table(b, box)
    small = Box(((0, 0), (0, 1)), 2)
    mid = Box(((0, 0), (0, 1), (1, 1), (-1, 0)), 2)
    h = [mu.marginal(s).kl(nu.marginal(s)) for s in (small, mid)] + [mu.kl(nu)]
    assert h[0] <= h[1] + 1e-12 and h[1] <= h[2] + 1e-12


@settings(max_examples=40)
@given(seeds, seeds)
def test_plus_decompositions(a, b):
    box = cube(1, 1)
    mu, nu = random_table(a, box), random_table(b, box)
    for f in (plus_decomposition, plus_referenced_decomposition):
        lhs, rhs = f(mu, nu, 1)
        assert abs(lhs - rhs) <= 1e-10


def test_plus_decompositions_on_gibbs_tables():
    box = cube(2, 1)
    mu = exact_gibbs(ising(0.3, 0.1), box, plus_bc(box))
    nu = exact_gibbs(ising(0.7, -0.2), box, Config.constant(boundary_shell(box, 1), -1))
    for n in (0, 1, 2):
        for f in (plus_decomposition, plus_referenced_decomposition):
            lhs, rhs = f(mu, nu, n)
            assert abs(lhs - rhs) <= 1e-10


def test_specific_energy_examples():
    box = cube(1, 1)
    assert specific_energy(uniform(box, (-1, 0, 1)), None, 1) == pytest.approx(math.log(3), abs=1e-15)
    assert specific_energy(exact_gibbs(ising(0.0), box, plus_bc(box)), None, 1) == pytest.approx(math.log(2))
    prod = product_table(cube(2, 1), PM, [0.4, 0.6])
    assert specific_energy(prod, None, 1) == pytest.approx(specific_energy(prod, None, 2), abs=1e-15)


@pytest.mark.parametrize("beta", [0.3, 1.0, 2.0])
def test_transfer_chain_e_plus(beta):
    ch = TransferChain(ising(beta))
    e = math.log(2 * math.cosh(beta)) - beta
    assert ch.e_plus() == pytest.approx(e, abs=1e-12)
    # the finite-n value approaches the limit like (log 2 - e)/m at h=0
    m = 41
    assert specific_energy(ch, None, 20) == pytest.approx(e + (math.log(2) - e) / m, abs=1e-12)


def test_transfer_chain_is_stationary():
    ch = TransferChain(ising(0.8, 0.3))
    assert np.max(np.abs(ch.P.sum(axis=1) - 1)) <= 1e-12
    assert np.max(np.abs(ch.pi @ ch.P - ch.pi)) <= 1e-10
    assert TransferChain(ising(0.0)).entropy_rate() == pytest.approx(math.log(2), abs=1e-15)


def test_transfer_chain_matches_long_box():
    beta, h = 0.1, 0.3
    box = cube(10, 1)
    big = exact_gibbs(ising(beta, h), box, plus_bc(box))
    w = cube(1, 1)
    a = big.marginal(w)
    b = window_table(TransferChain(ising(beta, h)), w)
    assert np.max(np.abs(a.p - b.p)) <= 1e-8


def test_entropy_formula_trivial():
    box = cube(1, 1)
    u = uniform(box, PM)
    assert entropy_formula_rhs(GibbsSpecification(ising(0.0)), u, u, None, 1) == pytest.approx(0.0, abs=1e-15)


def test_up_set_counts():
    assert [len(up_sets(k)) for k in range(5)] == [2, 3, 6, 20, 168]


def test_domination_examples():
    box = line(2)
    lo = exact_gibbs(ising(1.0), box, Config.constant(boundary_shell(box, 1), -1))
    hi = exact_gibbs(ising(1.0), box, plus_bc(box))
    assert check_domination(lo, lo)
    assert check_domination(lo, hi) and not check_domination(hi, lo)
    one = Box(((0,),), 1)
    assert check_domination(product_table(one, PM, [0.6, 0.4]), product_table(one, PM, [0.5, 0.5]))
    assert not check_domination(product_table(one, PM, [0.4, 0.6]), product_table(one, PM, [0.5, 0.5]))
    with pytest.raises(ValueError):
        check_domination(uniform(line(5), PM), uniform(line(5), PM))


@settings(max_examples=30)
@given(seeds, seeds)
def test_domination_antisymmetry(a, b):
    box = line(3)
    mu, nu = random_table(a, box), random_table(b, box)
    if check_domination(mu, nu) and check_domination(nu, mu):
        assert np.allclose(mu.p, nu.p, atol=1e-10)


def test_heatbath_beta_zero_uniform():
    box = line(3)
    s = heatbath_sample(GibbsSpecification(ising(0.0)), box, plus_bc(box), 1, seed=5, n_chains=8000)
    counts = (s.frequencies(PM).p * len(s)).reshape(-1)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_heatbath_deterministic():
    box = line(3)
    spec = GibbsSpecification(ising(0.7))
    a = heatbath_sample(spec, box, plus_bc(box), 5, seed=11, n_chains=50)
    b = heatbath_sample(spec, box, plus_bc(box), 5, seed=11, n_chains=50)
    assert np.array_equal(a.values, b.values) and a.seed == 11


def test_heatbath_magnetisation():
    box = line(3)
    phi = ising(0.7, 0.2)
    exact = exact_gibbs(phi, box, plus_bc(box))
    m = exact.expect(lambda v: v[..., 1])
    s = heatbath_sample(GibbsSpecification(phi), box, plus_bc(box), 30, seed=3, n_chains=4000)
    x = s.values[:, 1]
    assert abs(x.mean() - m) <= 3 * x.std() / math.sqrt(len(x))
