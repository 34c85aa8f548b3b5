"""Named experiments: each returns one or more result tables."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .disordered import (ChainJoint, DisorderLaw, ad_ratio, boundary_size, c1_hat, entropy_decomposition,
                         conditional_residual, joint_entropy_bound, joint_specific_energy, joint_table, r_plus_minus,
                         sample_disorder)
from .lattice import Box, Config, boundary_shell, cube, origin
from .measure import (TransferChain, check_domination, entropy_formula_terms, exact_gibbs, make_rng,
                      relative_entropy_rate)
from .potential import (FiniteRangePotential, energy_tensor, hamiltonian, ising, random_potential, rfim,
                        vacuum_transform)
from .specification import GibbsSpecification, check_consistency, telescope_E
from .transform import decimate, grising_table, grising_zero_rate, grising_sample


@dataclass
class Table:
    suffix: str
    header: list[str]
    rows: list[list]
    summary: str = ""


def pmap(fn, args, jobs: int = 1):
    """Ordered map, fanned out to at most `jobs` worker processes."""
    args = list(args)
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, args, chunksize=max(1, len(args) // (4 * jobs))))


# -- random instances (shared with the test suite) -------------------------

def random_box(rng: np.random.Generator, d: int, max_sites: int) -> Box:
    if d == 1:
        k = int(rng.integers(1, max_sites + 1))
        lo = int(rng.integers(-k, 1))
        return Box(tuple((lo + i,) for i in range(k)), 1)
    while True:
        a, b = (int(x) for x in rng.integers(1, 4, size=2))
        if a * b <= max_sites:
            break
    return Box(tuple((i, j) for i in range(a) for j in range(b)), 2)


def random_config(rng: np.random.Generator, box: Box, alphabet=(-1, 1)) -> Config:
    return Config(box, tuple(int(alphabet[i]) for i in rng.integers(0, len(alphabet), size=len(box))))


def telescope_instance(arg) -> tuple:
    seed, d, max_range, max_sites, coef = arg
    rng = make_rng(seed)
    phi = random_potential(rng, d, max_range, int(rng.integers(1, 4)), coef=coef)
    box = random_box(rng, d, max_sites)
    sigma = random_config(rng, box)
    shell = boundary_shell(box, phi.range)
    omega = random_config(rng, shell) if len(shell) else None
    direct, tele = telescope_E(GibbsSpecification(phi), box, sigma, omega)
    return d, len(box), phi.range, direct, tele, abs(direct - tele)


def vacuum_instance(arg) -> tuple:
    seed, d, max_range, max_sites, coef = arg
    rng = make_rng(seed)
    phi = random_potential(rng, d, max_range, int(rng.integers(1, 4)), coef=coef)
    vac = vacuum_transform(phi)
    ip = phi.alphabet.index(1)
    # vacuum property: any + in the support gives an exact zero
    worst_vac = 0.0
    for t in vac.terms:
        tab = t.fn.table
        for ax in range(tab.ndim):
            worst_vac = max(worst_vac, float(np.max(np.abs(np.take(tab, ip, axis=ax)))))
    box = random_box(rng, d, max_sites)
    r = max(phi.range, vac.range)
    shell = boundary_shell(box, r)
    omega = random_config(rng, shell) if len(shell) else None
    g1 = GibbsSpecification(phi).kernel(box, omega)
    g2 = GibbsSpecification(vac).kernel(box, omega)
    kdev = float(np.max(np.abs(g1.p - g2.p)))
    plus_in = Config.constant(box, 1)
    plus_out = Config.constant(shell, 1) if len(shell) else None
    h_plus = hamiltonian(vac, box, plus_in, plus_out)
    return d, len(box), phi.range, vac.range, worst_vac, kdev, h_plus


def _consistency_rows(name, phi, spec_for, d, boundaries, outer_sites, seed):
    rng = make_rng(seed)
    rows = []
    # all nestings inside outer boxes of up to `outer_sites` sites
    if d == 1:
        outers = [Box(tuple((i,) for i in range(k)), 1) for k in range(1, outer_sites + 1)]
    else:
        outers = [Box(((0, 0),), 2), Box(((0, 0), (0, 1)), 2), Box(((0, 0), (0, 1), (1, 0)), 2),
                  Box(((0, 0), (0, 1), (1, 0), (1, 1)), 2)][:outer_sites]
    for outer in outers:
        shell = boundary_shell(outer, phi.range)
        for j in range(boundaries):
            omega = random_config(rng, shell)
            spec = spec_for(rng, outer | shell)
            for k in range(1, len(outer) + 1):
                for inner_sites in itertools.combinations(outer.sites, k):
                    inner = Box(inner_sites, d)
                    dev = check_consistency(spec, inner, outer, omega)
                    rows.append([name, len(outer), "|".join(map(str, inner.sites)), j, dev])
    return rows


# -- experiment runners ----------------------------------------------------

def run_telescope(cfg: ExperimentConfig, jobs: int) -> list[Table]:
    p = cfg.params
    ss = np.random.SeedSequence(cfg.seed).spawn(p["instances"])
    dims = p["dims"]
    args = [(s, dims[i % len(dims)], p["max_range"], p["max_sites"], p["coef"]) for i, s in enumerate(ss)]
    res = pmap(telescope_instance, args, jobs)
    rows = [[i, *r] for i, r in enumerate(res)]
    worst = max(r[-1] for r in res)
    return [Table("", ["instance", "d", "sites", "range", "direct", "telescoped", "abs_diff"], rows,
                  f"max |direct - telescoped| = {worst:.3e}")]


def run_consistency(cfg: ExperimentConfig, jobs: int) -> list[Table]:
    p = cfg.params
    d = p["d"]
    rows = []
    ss = np.random.SeedSequence(cfg.seed).spawn(len(p["potentials"]))
    law = DisorderLaw()
    for name, s in zip(p["potentials"], ss):
        if name == "ising":
            phi = ising(p["beta"], p["h"], d)
            spec_for = lambda rng, region, phi=phi: GibbsSpecification(phi)
        else:
            phi = rfim(p["beta"], p["h"], d)
            spec_for = lambda rng, region, phi=phi: GibbsSpecification(phi, law.sample(region, rng))
        rows += _consistency_rows(name, phi, spec_for, d, p["boundaries"], p["outer_sites"], s)
    worst = max(r[-1] for r in rows)
    return [Table("", ["potential", "outer_sites", "inner", "boundary", "deviation"], rows,
                  f"max consistency deviation = {worst:.3e}")]


def run_vp1d(cfg: ExperimentConfig, jobs: int) -> list[Table]:
    p = cfg.params
    mu = TransferChain(ising(p["beta_mu"], p["h"]))
    nu = TransferChain(ising(p["beta_nu"], p["h"]))
    spec = GibbsSpecification(ising(p["beta_nu"], p["h"]))
    rows = []
    for n in p["n"]:
        t = entropy_formula_terms(spec, mu, nu, None, n)
        direct = relative_entropy_rate(mu, nu, n)
        rows.append([n, t["h_mu"], t["e_nu"], t["D"], t["rhs"], direct, t["rhs"] - direct])
    return [Table("", ["n", "h_mu", "e_plus_nu", "D_integral", "rhs", "direct", "diff"], rows,
                  f"rhs - direct at n={rows[-1][0]}: {rows[-1][-1]:.3e}")]


def run_grising(cfg: ExperimentConfig, jobs: int) -> list[Table]:
    pr = cfg.params
    ss = np.random.SeedSequence(cfg.seed).spawn(len(pr["p"]))
    rows = []
    o = origin(pr["d"])
    for p, s in zip(pr["p"], ss):
        a, b = s.spawn(2)
        z = grising_zero_rate(p, pr["n"], pr["d"], pr["beta"], pr["samples"], a)
        smp = grising_sample(p, pr["beta"], Box((o,), pr["d"]), b, pr["samples"])
        freq = [float(np.mean(smp.values[:, 0] == v)) for v in (-1, 0, 1)]
        rows.append([p, pr["n"], pr["d"], pr["samples"], z.exact, math.log1p(-p), z.empirical, z.lo, z.hi,
                     int(z.covered), *freq, p / 2, 1 - p, p / 2])
    return [Table("", ["p", "n", "d", "samples", "exact_rate", "log_1_minus_p", "empirical_rate", "ci_lo",
                       "ci_hi", "covered", "emp_minus", "emp_zero", "emp_plus", "exact_minus", "exact_zero",
                       "exact_plus"], rows, f"all covered: {all(r[9] for r in rows)}")]


def decimated_pair(beta: float, n: int, b: int, window: int):
    box = cube(n, 1)
    phi = ising(beta)
    shell = boundary_shell(box, 1)
    lo = exact_gibbs(phi, box, Config.constant(shell, -1))
    hi = exact_gibbs(phi, box, Config.constant(shell, 1))
    w = cube(window, 1)
    return decimate(lo, b, w), decimate(hi, b, w)


def run_decimate(cfg: ExperimentConfig, jobs: int) -> list[Table]:
    p = cfg.params
    rows = []
    for beta in p["beta"]:
        lo, hi = decimated_pair(beta, p["n"], p["b"], p["window"])
        rows.append([beta, p["b"], p["n"], len(lo.box), int(check_domination(lo, hi)), int(check_domination(hi, lo))])
    return [Table("", ["beta", "b", "n", "window_sites", "minus_le_plus", "plus_le_minus"], rows,
                  f"minus <= plus for all beta: {all(r[4] for r in rows)}")]


def _rpm_task(arg):
    beta, h, d, eta = arg
    box = cube(1, d)
    return r_plus_minus(beta, h, box, eta)


def random_xi_outside(rng, box: Box, R: int, law: DisorderLaw) -> Config:
    """Random joint configuration on cube(R) minus the box."""
    outs = cube(R, box.d) - box
    vals = tuple((int(rng.choice([-1, 1])), law.support[int(rng.integers(len(law.support)))]) for _ in outs.sites)
    return Config(outs, vals)


def run_rfim(cfg: ExperimentConfig, jobs: int) -> list[Table]:
    p = cfg.params
    law = DisorderLaw()
    phi = rfim(p["beta"], p["h"])
    s_bound, s_cond, s_rpm = np.random.SeedSequence(cfg.seed).spawn(3)
    out = []
    C1, rows = joint_entropy_bound(phi, law, p["n"])
    out.append(Table("bound", ["n", "h", "bound", "per_site", "ok", "c1_hat", "radius"],
                     [[r.n, r.h, r.bound, r.per_site, int(r.ok), C1, r.radius] for r in rows],
                     f"bound holds: {all(r.ok for r in rows)}"))
    rng = make_rng(s_cond)
    box = Box((origin(1),), 1)
    R0 = p["oracle_radius"]
    cond_rows = []
    for beta in sorted({0.0, p["beta"]}):
        ph = rfim(beta, p["h"])
        oracle = joint_table(ph, law, cube(R0, 1), 1, -1)
        xi = random_xi_outside(rng, box, R0, law)
        for R in p["radius"]:
            if R <= R0:
                cond_rows.append([beta, p["h"], R, R0, conditional_residual(ph, law, box, xi, R, oracle)])
    out.append(Table("conditional", ["beta", "h", "radius", "oracle_radius", "residual"], cond_rows))
    dec_rows = []
    for beta, h in sorted({(0.0, 0.0), (p["beta"], p["h"])}):
        ph = rfim(beta, h)
        for n in p["decomposition_n"]:
            if n <= 4:
                K = joint_table(ph, law, cube(n, 1), -1, -1)
                backend = "dense"
            else:
                K = ChainJoint(ph, law, n, -1, -1)
                backend = "chain"
            dd = entropy_decomposition(K, ph, law, n, 1)
            dec_rows.append([beta, h, n, backend, dd.lhs, *dd.terms.values(), dd.residual])
            e = joint_specific_energy(ChainJoint(ph, law, n, 1, -1), 1, ph, law, n)
            dec_rows[-1] += [e.lhs, e.total, e.residual]
    out.append(Table("decomposition", ["beta", "h", "n", "backend", "lhs", "h_Kd_P", "minus_h_K", "plus_h_Kd",
                                       "energy", "pressure", "residual", "e_lambda", "e_lambda_rhs",
                                       "e_lambda_residual"], dec_rows))
    box2 = cube(1, p["rpm_d"])
    etas = sample_disorder(law, box2, s_rpm, p["rpm_samples"])
    res = pmap(_rpm_task, [(p["rpm_beta"], p["rpm_h"], p["rpm_d"], e) for e in etas], jobs)
    res0 = pmap(_rpm_task, [(p["rpm_beta"], 0.0, p["rpm_d"], e) for e in etas], jobs)
    rpm_rows = [[i, p["rpm_beta"], p["rpm_h"], a, b, int(a < b), a0, b0]
                for i, ((a, b), (a0, b0)) in enumerate(zip(res, res0))]
    out.append(Table("rpm", ["sample", "beta", "h", "r_plus", "r_minus", "strict", "r_plus_h0", "r_minus_h0"],
                     rpm_rows, f"r+ < r- for all samples: {all(r[5] for r in rpm_rows)}"))
    return out


def _joint_label(values) -> str:
    return " ".join(f"{s:+d}/{e:+d}" for s, e in values)


def ad_rows(beta: float, h: float, n: int, g: int, R: int):
    """Exhaustive 2-site cylinder AD ratios on a d=1 joint table."""
    law = DisorderLaw()
    phi = rfim(beta, h)
    K = joint_table(phi, law, cube(R, 1), 1, -1)
    C = 8 * c1_hat(phi, [cube(n, 1)])
    nb = boundary_size(cube(n, 1), 1)
    a_sites = Box(((0,), (1,)), 1) if n >= 1 else Box(((0,),), 1)
    b_sites = Box(((n + g + 1,), (n + g + 2,)), 1)
    if not b_sites.issubset(K.box):
        raise ValueError("table_radius too small for the B events")
    rows = []
    states = K.states
    for va in itertools.product(states, repeat=len(a_sites)):
        for vb in itertools.product(states, repeat=len(b_sites)):
            A, B = Config(a_sites, va), Config(b_sites, vb)
            r = ad_ratio(K, n, g, A, B)
            rp = ad_ratio(law, n, g, Config(a_sites, tuple(v[1] for v in va)), Config(b_sites, tuple(v[1] for v in vb)))
            rows.append([_joint_label(va), _joint_label(vb), r, math.log(r), C * nb, int(abs(math.log(r)) <= C * nb), rp])
    return rows


def run_ad(cfg: ExperimentConfig, jobs: int) -> list[Table]:
    p = cfg.params
    rows = ad_rows(p["beta"], p["h"], p["n"], p["g"], p["table_radius"])
    return [Table("", ["event_a", "event_b", "ratio", "log_ratio", "bound", "ok", "product_law_ratio"], rows,
                  f"all within bound: {all(r[5] for r in rows)}; product ratio == 1: {all(r[6] == 1.0 for r in rows)}")]


def run_vacuum(cfg: ExperimentConfig, jobs: int) -> list[Table]:
    p = cfg.params
    ss = np.random.SeedSequence(cfg.seed).spawn(p["instances"])
    args = [(s, p["d"], p["max_range"], p["max_sites"], p["coef"]) for s in ss]
    res = pmap(vacuum_instance, args, jobs)
    rows = [[i, *r] for i, r in enumerate(res)]
    return [Table("", ["instance", "d", "sites", "range", "vacuum_range", "vacuum_max_abs", "kernel_dev",
                       "h_all_plus"], rows,
                  f"max kernel deviation = {max(r[6] for r in rows):.3e}")]


RUNNERS = {
    "telescope-check": run_telescope,
    "consistency-check": run_consistency,
    "vp-1d": run_vp1d,
    "grising": run_grising,
    "decimate-dominate": run_decimate,
    "rfim-joint": run_rfim,
    "ad-check": run_ad,
    "vacuum-check": run_vacuum,
}
