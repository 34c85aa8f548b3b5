"""Gibbs specifications built from finite-range potentials.

Kernels gamma_box(. | omega) are exact tables.  Sources of kernels (a
potential specification, or conditioning of a finite-volume table for
specifications that have no potential) share a small interface used by the
quasilocality diagnostics.
"""
from __future__ import annotations

import itertools

import numpy as np

from .lattice import Box, Config, LocalFunction, boundary_shell, cube, origin
from .potential import FiniteRangePotential, energy_tensor
from .tables import KernelTable, ProbTable, check_size


class GibbsSpecification:
    """gamma^Phi for a spin potential, optionally with quenched disorder eta."""

    def __init__(self, potential: FiniteRangePotential, eta: Config | None = None, plus=1):
        if potential.is_joint and eta is None:
            raise ValueError("a joint potential needs a quenched disorder configuration")
        self.potential = potential
        self.eta = eta
        self.alphabet = potential.alphabet
        self.plus = plus
        if plus not in self.alphabet:
            raise ValueError("the alphabet lacks the distinguished plus state")

    @property
    def range(self) -> int:
        return self.potential.range

    def energy(self, box: Box, omega: Config | None) -> np.ndarray:
        check_size(len(self.alphabet), len(box))
        return energy_tensor(self.potential, box, omega, self.eta)

    def kernel(self, box: Box, omega: Config | None) -> KernelTable:
        return KernelTable.from_energies(box, self.alphabet, self.energy(box, omega), omega=omega)

    def region(self, box: Box, support: Box) -> Box:
        """Sites on which gamma_box f can depend."""
        return box | boundary_shell(box, self.range) | support

    def expect(self, box: Box, f: LocalFunction, omega: Config) -> float:
        """gamma_box f (omega)."""
        return _kernel_expect(self.kernel(box, omega), f, omega)


class TableSource:
    """Kernels obtained by conditioning one finite-volume table.

    Used for specifications without a potential; the surrogate box is the
    table box, and `radius` records its size.
    """

    def __init__(self, table: ProbTable, radius: int | None = None):
        self.table = table
        self.alphabet = table.states
        self.radius = table.box.radius if radius is None else radius

    def region(self, box: Box, support: Box) -> Box:
        return self.table.box

    def kernel(self, box: Box, omega: Config) -> ProbTable:
        return self.table.conditional(box, omega)

    def expect(self, box: Box, f: LocalFunction, omega: Config) -> float:
        return _kernel_expect(self.kernel(box, omega), f, omega)


def _kernel_expect(k: ProbTable, f: LocalFunction, omega: Config) -> float:
    box = k.box
    inside = [i for i, s in enumerate(f.support.sites) if s in box]
    fixed = np.array([0.0 if s in box else omega[s] for s in f.support.sites])
    if not inside:
        return float(f.fn(fixed[None, :])[0])
    vals = np.array(k.states, dtype=float)
    grid = np.indices(k.p.shape)
    args = np.broadcast_to(fixed, k.p.shape + (len(fixed),)).copy()
    for i in inside:
        args[..., i] = vals[grid[box.index[f.support.sites[i]]]]
    return float(np.sum(k.p * f.fn(args)))


def kernel(spec: GibbsSpecification, box: Box, omega: Config | None) -> KernelTable:
    return spec.kernel(box, omega)


def _fillings(sites, alphabet):
    for vals in itertools.product(alphabet, repeat=len(sites)):
        yield dict(zip(sites, vals))


def check_consistency(spec: GibbsSpecification, inner: Box, outer: Box, omega: Config) -> float:
    """Total variation between gamma_outer gamma_inner and gamma_outer.

    Total variation equals the maximum over events of the absolute
    difference, so this is the exact worst-event deviation.
    """
    if not inner.issubset(outer):
        raise ValueError("inner box must be contained in the outer box")
    big = spec.kernel(outer, omega)
    rest = outer - inner
    if len(rest) == 0:
        composed = big.p
    else:
        # (gamma' gamma)(tau) = gamma'(tau_rest) * gamma(tau_inner | tau_rest omega)
        rest_marg = big.marginal(rest)
        composed = np.zeros_like(big.p)
        S = len(spec.alphabet)
        pos_rest = [outer.index[s] for s in rest.sites]
        for idx in itertools.product(range(S), repeat=len(rest)):
            fill = Config(rest, tuple(spec.alphabet[i] for i in idx))
            w = omega.merge(fill) if omega is not None else fill
            small = spec.kernel(inner, w)
            sl = [slice(None)] * len(outer)
            for q, i in zip(pos_rest, idx):
                sl[q] = i
            # remaining axes are the inner sites in lexicographic order
            composed[tuple(sl)] = rest_marg.p[idx] * small.p
    return 0.5 * float(np.abs(composed - big.p).sum())


def oscillation(spec, box: Box, f: LocalFunction, n: int) -> float:
    """sup over sigma of (g_n^+ - g_n^-)(sigma) with g = gamma_box f."""
    inner = cube(n, box.d)
    if not box.issubset(inner):
        raise ValueError("cube(n) must contain the box")
    region = spec.region(box, f.support)
    fixed = [s for s in region.sites if s in inner and s not in box]
    free = [s for s in region.sites if s not in inner]
    if not free:
        return 0.0
    alphabet = spec.alphabet
    worst = 0.0
    for head in _fillings(fixed, alphabet):
        vals = []
        for tail in _fillings(free, alphabet):
            cfg = Config.from_mapping({**head, **tail}, box.d) if (head or tail) else None
            vals.append(spec.expect(box, f, cfg))
        worst = max(worst, max(vals) - min(vals))
    return worst


def continuity_profile(source, box: Box, omega: Config, f: LocalFunction, n_max: int,
                       tol: float = 1e-12) -> tuple[list[float], bool]:
    """osc_n(omega) for n = 0..n_max and the continuity flag.

    osc_n = sup over configurations agreeing with omega on cube(n) of
    |gamma_box f(.) - gamma_box f(omega)|.
    """
    region = source.region(box, f.support)
    base = source.expect(box, f, omega.restrict(region - box) if len(region - box) else omega)
    prof = []
    for n in range(n_max + 1):
        inner = cube(n, box.d)
        fixed = {s: omega[s] for s in region.sites if s in inner and s not in box}
        free = [s for s in region.sites if s not in inner and s not in box]
        worst = 0.0
        for tail in _fillings(free, source.alphabet):
            cfg = Config.from_mapping({**fixed, **tail}, box.d)
            worst = max(worst, abs(source.expect(box, f, cfg) - base))
        prof.append(worst)
    return prof, prof[-1] <= tol


def relative_energy_D(spec: GibbsSpecification, sigma: Config) -> float:
    """log gamma_0(sigma_0 | sigma) / gamma_0(+ | sigma)."""
    d = sigma.box.d
    r = spec.range
    need = cube(r, d)
    if not need.issubset(sigma.box):
        raise ValueError(f"window must contain cube({r}) around the origin")
    o = Box((origin(d),), d)
    k = spec.kernel(o, sigma.restrict(need - o) if r > 0 else None)
    s0 = sigma[origin(d)]
    return float(k.logp[k._index[s0]] - k.logp[k._index[spec.plus]])


def single_site_E(spec: GibbsSpecification, x, sigma_x, omega: Config) -> float:
    """E_x^+(sigma | omega) = log gamma_x(sigma_x | omega) / gamma_x(+ | omega)."""
    d = omega.box.d
    xb = Box((tuple(x),), d)
    k = spec.kernel(xb, omega)
    return float(k.logp[k._index[sigma_x]] - k.logp[k._index[spec.plus]])


def telescope_E(spec: GibbsSpecification, box: Box, sigma: Config,
                omega: Config | None) -> tuple[float, float]:
    """(log gamma(sigma|omega)/gamma(+|omega), sum of single-site terms).

    The single-site terms use the telescoping configuration: sigma below x
    in the box, + above x, omega outside.
    """
    k = spec.kernel(box, omega)
    plus_idx = (k._index[spec.plus],) * len(box)
    direct = float(k.logp[k.index_of(sigma)] - k.logp[plus_idx])
    r = spec.range
    shell = boundary_shell(box, r)
    tele = 0.0
    for x in box.sites:
        vals = {s: (sigma[s] if s < x else spec.plus) for s in box.sites if s != x}
        if omega is not None:
            vals.update({s: omega[s] for s in shell.sites if omega.get(s) is not None})
        if not vals:
            k1 = spec.kernel(Box((x,), box.d), None)
            tele += float(k1.logp[k1._index[sigma[x]]] - k1.logp[k1._index[spec.plus]])
            continue
        tele += single_site_E(spec, x, sigma[x], Config.from_mapping(vals, box.d))
    return direct, tele
