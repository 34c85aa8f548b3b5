import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_configs, line
from gibbsium.disordered import (ChainJoint, DenseJoint, DisorderLaw, ad_ratio, annealed_kernel, boundary_size,
                                 c1_hat, conditional_residual, delta_H, entropy_decomposition,
                                 joint_conditional, joint_entropy_bound, joint_specific_energy, joint_table,
                                 q_factor, quenched_kernel, r_plus_minus, sample_disorder, sup_log_ratio)
from gibbsium.experiments import random_xi_outside
from gibbsium.lattice import Box, Config, boundary_shell, cube
from gibbsium.measure import exact_gibbs, make_rng
from gibbsium.potential import hamiltonian, rfim
from gibbsium.tables import JointTable

LAW = DisorderLaw()
ORIGIN = Box(((0,),), 1)


def eta_on(box, vals):
    return Config(box, tuple(vals))


def test_disorder_law():
    assert LAW.symmetric and LAW.entropy == pytest.approx(math.log(2))
    assert not DisorderLaw((-1, 1), (0.3, 0.7)).symmetric
    with pytest.raises(ValueError):
        DisorderLaw((-1, 1), (0.3, 0.6))


def test_quenched_kernel_examples():
    box = line(3)
    region = box | boundary_shell(box, 1)
    eta = Config(region, (1, -1, 1, 1, -1))
    assert np.allclose(quenched_kernel(rfim(0.0, 0.0), box, eta, 1).p, 1 / 8, rtol=1e-15)
    h = 0.4
    k = quenched_kernel(rfim(0.0, h), box, eta, 1)
    single = [np.exp(h * e * np.array([-1, 1])) / (2 * np.cosh(h)) for e in eta.restrict(box).values]
    assert np.allclose(k.p, np.einsum("a,b,c->abc", *single), atol=1e-15)
    neg = Config(region, tuple(-v for v in eta.values))
    a = quenched_kernel(rfim(1.0, h), box, eta, 1)
    b = quenched_kernel(rfim(1.0, h), box, neg, -1)
    assert np.allclose(a.p, b.p[::-1, ::-1, ::-1], atol=1e-15)


def test_joint_table_trivial_and_marginals():
    box = line(3)
    K = joint_table(rfim(0.0, 0.0), LAW, box, 1)
    assert np.allclose(K.p, 1 / 4 ** 3, rtol=1e-14)
    K = joint_table(rfim(1.0, 0.5), LAW, box, 1, -1)
    assert np.max(np.abs(K.disorder_marginal().p - LAW.table(box).p)) <= 1e-12


def test_joint_table_double_loop_oracle():
    beta, h = 1.0, 0.5
    box = line(3)
    phi = rfim(beta, h)
    K = joint_table(phi, LAW, box, 1, -1)
    shell = boundary_shell(box, 1)
    sb = Config.constant(shell, 1)
    for eta in all_configs(box):
        full = eta.merge(Config.constant(shell, -1))
        w = {s.values: math.exp(-hamiltonian(phi, box, s, sb, full)) for s in all_configs(box)}
        z = sum(w.values())
        for s in all_configs(box):
            xi = Config(box, tuple(zip(s.values, eta.values)))
            assert K.prob(xi) == pytest.approx(0.125 * w[s.values] / z, abs=1e-15)


@settings(max_examples=10)
@given(st.lists(st.sampled_from([-1, 1]), min_size=3, max_size=3))
def test_spin_given_disorder_is_quenched_kernel(vals):
    box = line(3)
    phi = rfim(1.0, 0.5)
    K = joint_table(phi, LAW, box, 1, -1)
    eta = eta_on(box, vals)
    full = eta.merge(Config.constant(boundary_shell(box, 1), -1))
    want = quenched_kernel(phi, box, full, 1)
    assert np.max(np.abs(K.spin_given_disorder(eta).p - want.p)) <= 1e-12


def test_delta_H():
    phi = rfim(1.0, 0.7)
    box = line(2)
    out1 = Config.from_mapping({(-1,): 1, (2,): -1})
    out2 = Config.from_mapping({(-1,): -1, (2,): -1})
    e1, e2 = eta_on(box, (1, -1)), eta_on(box, (-1, -1))
    for s in all_configs(box):
        sig = s.merge(Config.from_mapping({(-1,): 1, (2,): 1}))
        assert delta_H(phi, box, e1, e1, out1, sig) == 0.0
        want = -0.7 * sum((a - b) * x for a, b, x in zip(e1.values, e2.values, s.values))
        assert delta_H(phi, box, e1, e2, out1, sig) == pytest.approx(want, abs=1e-14)
        assert delta_H(phi, box, e1, e2, out2, sig) == delta_H(phi, box, e1, e2, out1, sig)


def test_q_factor():
    box = ORIGIN
    outside = Config.from_mapping({(-1,): 1, (1,): 1})
    e1, e2 = eta_on(box, (1,)), eta_on(box, (-1,))
    phi = rfim(1.0, 0.6)
    mu = exact_gibbs(phi, box, Config.constant(boundary_shell(box, 1), 1), outside.merge(e2))
    assert q_factor(mu, phi, box, e1, e1, outside) == pytest.approx(1.0, abs=1e-15)
    flat = rfim(1.0, 0.0)
    mu0 = exact_gibbs(flat, box, Config.constant(boundary_shell(box, 1), 1), outside.merge(e2))
    assert q_factor(mu0, flat, box, e1, e2, outside) == pytest.approx(1.0, abs=1e-15)
    # plus neighbours: Q = Z(eta1) / Z(eta2) with Z(e) = 2 cosh(2 beta + h e)
    beta, h = 0.5, 0.6
    phi = rfim(beta, h)
    mus = exact_gibbs(phi, box, Config.constant(boundary_shell(box, 1), 1), outside.merge(e2))
    want = math.cosh(2 * beta + h) / math.cosh(2 * beta - h)
    assert q_factor(mus, phi, box, e1, e2, outside) == pytest.approx(want, abs=1e-14)


def test_annealed_kernel():
    box = line(2)
    xi = Config.from_mapping({(-1,): (1, 1), (2,): (-1, -1)})
    t = annealed_kernel(0.0, 0.0, LAW, box, xi)
    assert np.allclose(t.p, 1 / 16, rtol=1e-14)
    beta, h = 0.8, 0.4
    t = annealed_kernel(beta, h, LAW, box, xi)
    assert abs(t.p.sum() - 1) <= 1e-12
    w = {}
    for s0, s1, e0, e1 in itertools.product((-1, 1), repeat=4):
        e = -beta * (1 * s0 + s0 * s1 + s1 * -1) - h * (e0 * s0 + e1 * s1) - 2 * math.log(0.5)
        w[(s0, e0), (s1, e1)] = math.exp(-e)
    z = sum(w.values())
    for key, val in w.items():
        assert t.prob(Config(box, key)) == pytest.approx(val / z, abs=1e-15)


def test_joint_conditional_beta_zero():
    law = LAW
    phi = rfim(0.0, 0.5)
    oracle = joint_table(phi, law, cube(3, 1), 1, -1)
    xi = random_xi_outside(make_rng(1), ORIGIN, 3, law)
    for R in (1, 2, 3):
        assert conditional_residual(phi, law, ORIGIN, xi, R, oracle) <= 1e-12
    t = joint_conditional(phi, law, ORIGIN, xi, 2, 1, -1)
    assert abs(t.p.sum() - 1) <= 1e-12


def test_joint_conditional_residual_shrinks():
    phi = rfim(1.0, 0.5)
    oracle = joint_table(phi, LAW, cube(5, 1), 1, -1)
    xi = random_xi_outside(make_rng(7), ORIGIN, 5, LAW)
    res = [conditional_residual(phi, LAW, ORIGIN, xi, R, oracle) for R in range(1, 6)]
    assert all(a >= b for a, b in zip(res, res[1:]))
    assert res[-1] <= 1e-12 < res[1]


def test_r_plus_minus():
    box = cube(1, 1)
    eta = Config(box, (1, -1, 1))
    rp, rm = r_plus_minus(1.5, 0.0, box, eta)
    assert rp == rm == 0.5
    rp, rm = r_plus_minus(0.0, 0.3, box, eta)
    assert rp == pytest.approx(0.5, abs=1e-15) and rm == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=25)
@given(st.lists(st.sampled_from([-1, 1]), min_size=5, max_size=5), st.floats(0.05, 2.0), st.floats(0.05, 1.0))
def test_r_plus_below_r_minus(vals, beta, h):
    box = cube(2, 1)
    rp, rm = r_plus_minus(beta, h, box, Config(box, vals))
    assert 0 < rp < rm < 1


def test_entropy_bound_trivial_cases():
    _, rows = joint_entropy_bound(rfim(0.0, 0.5), LAW, [1, 2])
    assert all(abs(r.h) <= 1e-12 for r in rows)
    _, rows = joint_entropy_bound(rfim(1.0, 0.5), LAW, [1, 2], 1, 1)
    assert all(r.h == 0.0 for r in rows)


def test_c1_hat_rfim():
    # one crossing bond per boundary site, oscillation 2 beta each
    assert c1_hat(rfim(1.0, 0.5), [cube(2, 1)]) == pytest.approx(2.0)
    assert boundary_size(cube(2, 1), 1) == 2


def test_sup_log_ratio():
    phi = rfim(1.0, 0.5)
    box = cube(3, 1)
    Kp = joint_table(phi, LAW, box, 1, -1)
    Km = joint_table(phi, LAW, box, -1, -1)
    w = cube(1, 1)
    assert sup_log_ratio(Kp, Kp, w) == 0.0
    flat = rfim(0.0, 0.5)
    assert sup_log_ratio(joint_table(flat, LAW, box, 1), joint_table(flat, LAW, box, -1), w) <= 1e-12
    C = 4 * c1_hat(phi, [w])
    assert sup_log_ratio(Kp, Km, w) <= C * boundary_size(w, 1)


def test_ad_ratio():
    a = Config.from_mapping({(0,): 1, (1,): -1})
    b = Config.from_mapping({(3,): 1, (4,): 1})
    assert ad_ratio(LAW, 1, 1, a, b) == 1.0
    assert ad_ratio(DisorderLaw((-1, 0, 1), (0.2, 0.5, 0.3)), 1, 1, Config.from_mapping({(0,): 0}),
                    Config.from_mapping({(5,): 1})) == 1.0
    K0 = joint_table(rfim(0.0, 0.5), LAW, cube(4, 1), 1)
    ja = Config.from_mapping({(0,): (1, -1), (1,): (-1, -1)})
    jb = Config.from_mapping({(3,): (1, 1), (4,): (-1, 1)})
    assert ad_ratio(K0, 1, 1, ja, jb) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ad_ratio(K0, 1, 1, ja, Config.from_mapping({(2,): (1, 1)}))


def test_chain_backend_matches_dense():
    phi = rfim(1.0, 0.5)
    for n in (1, 2):
        dense = DenseJoint(joint_table(phi, LAW, cube(n, 1), -1, -1), phi, LAW)
        chain = ChainJoint(phi, LAW, n, -1, -1)
        assert np.max(np.abs(dense.log_z - chain.log_z)) <= 1e-12
        assert chain.entropy() == pytest.approx(dense.entropy(), abs=1e-12)
        ref_d = DenseJoint(joint_table(phi, LAW, cube(n, 1), 1, -1), phi, LAW)
        assert chain.kl(ChainJoint(phi, LAW, n, 1, -1)) == pytest.approx(dense.kl(ref_d), abs=1e-12)
        sig = np.array([1, -1, 1, 1, -1][: 2 * n + 1], dtype=float)
        assert np.allclose(chain.log_prob_config(sig), dense.log_prob_config(sig), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_decomposition_trivial(n):
    phi = rfim(0.0, 0.0)
    K = joint_table(phi, LAW, cube(n, 1), -1) if n <= 3 else ChainJoint(phi, LAW, n, -1)
    assert abs(entropy_decomposition(K, phi, LAW, n, 1).residual) <= 1e-12


def test_decomposition_disorder_term_positive():
    phi = rfim(1.0, 0.5)
    box = cube(1, 1)
    K = joint_table(phi, LAW, box, -1, -1)
    tilt = np.array([0.3, 0.7])
    s = K.split() * np.einsum("a,b,c->abc", tilt, tilt, tilt)[None, :, None, :, None, :] * 8
    p = (s / s.sum()).reshape(K.p.shape)
    Kt = JointTable(box, K.spins, K.disorder, p, sigma_bar=K.sigma_bar, eta_bar=K.eta_bar, log_z=K.log_z_eta)
    d = entropy_decomposition(Kt, phi, LAW, 1, 1)
    assert d.terms["h_Kd_P"] > 0.01


def test_decomposition_residual_shrinks():
    phi = rfim(1.0, 0.5)
    r4 = entropy_decomposition(joint_table(phi, LAW, cube(4, 1), -1, -1), phi, LAW, 4, 1).residual
    r8 = entropy_decomposition(ChainJoint(phi, LAW, 8, -1, -1), phi, LAW, 8, 1).residual
    assert abs(r8) < abs(r4)


def test_joint_specific_energy():
    phi = rfim(0.0, 0.0)
    e = joint_specific_energy(ChainJoint(phi, LAW, 2, 1), 1, phi, LAW, 2)
    assert abs(e.residual) <= 1e-12
    assert e.lhs == pytest.approx(2 * math.log(2), abs=1e-12)
    sym = rfim(1.0, 0.0)
    a = joint_specific_energy(ChainJoint(sym, LAW, 2, 1), 1, sym, LAW, 2)
    b = joint_specific_energy(ChainJoint(sym, LAW, 2, -1), -1, sym, LAW, 2)
    assert a.lhs == pytest.approx(b.lhs, abs=1e-12)
    phi = rfim(1.0, 0.5)
    res = [abs(joint_specific_energy(ChainJoint(phi, LAW, n, 1, -1), 1, phi, LAW, n).residual)
           for n in range(2, 7)]
    assert all(x > y for x, y in zip(res, res[1:]))


def test_sample_disorder_deterministic():
    a = sample_disorder(LAW, line(4), 3, 5)
    b = sample_disorder(LAW, line(4), 3, 5)
    assert a == b and len({c.values for c in a}) > 1
