"""Quenched and joint (spin, disorder) measures.

Joint tables are K(sigma, eta) = P(eta) mu^sbar[eta](sigma) on a box, with
the quenched measure mu built by exact enumeration.  For d=1 nearest
neighbour models a batched forward-backward backend (ChainJoint) gives the
same quantities on boxes too large for dense joint tables.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .lattice import Box, Config, boundary_shell, cube, origin
from .measure import exact_gibbs, make_rng
from .potential import (FiniteRangePotential, Term, Window, boundary_oscillation, energy_tensor,
                        rfim, value_index, windows_energy_tensor)
from .tables import INFINITE, JointTable, ProbTable, ZeroProbabilityError, check_size


@dataclass(frozen=True)
class DisorderLaw:
    """i.i.d. single-site law P0 on a finite support."""

    support: tuple = (-1, 1)
    probs: tuple = (0.5, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "probs", tuple(float(q) for q in self.probs))
        if len(self.support) != len(self.probs):
            raise ValueError("support and probabilities differ in length")
        if any(q < 0 for q in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("disorder probabilities must be nonnegative and sum to 1")

    @property
    def symmetric(self) -> bool:
        d = dict(zip(self.support, self.probs))
        return all(d.get(-s) == q for s, q in d.items())

    @property
    def entropy(self) -> float:
        return float(-sum(q * math.log(q) for q in self.probs if q > 0))

    def log_p0(self, value) -> float:
        return math.log(self.probs[self.support.index(value)])

    def table(self, box: Box) -> ProbTable:
        p = np.ones(())
        for _ in box.sites:
            p = np.multiply.outer(p, np.array(self.probs))
        return ProbTable(box, self.support, p)

    def cylinder_log_prob(self, cfg: Config) -> float:
        return float(sum(self.log_p0(v) for v in cfg.values))

    def sample(self, box: Box, rng: np.random.Generator) -> Config:
        idx = rng.choice(len(self.support), size=len(box), p=self.probs)
        return Config(box, tuple(self.support[i] for i in idx))


def _as_bc(value, box: Box, r: int) -> Config | None:
    """A boundary configuration; scalars become constant shells."""
    if value is None or isinstance(value, Config):
        return value
    return Config.constant(boundary_shell(box, r), value)


def quenched_kernel(phi: FiniteRangePotential, box: Box, eta: Config, sigma_bar) -> ProbTable:
    """mu_box^sbar[eta] over spins on the box."""
    return exact_gibbs(phi, box, _as_bc(sigma_bar, box, phi.range), eta)


def joint_table(phi: FiniteRangePotential, law: DisorderLaw, box: Box, sigma_bar, eta_bar=None) -> JointTable:
    """K_box(sigma, eta) = P(eta) mu_box^sbar[eta eta_bar](sigma), exactly."""
    S, E = len(phi.alphabet), len(law.support)
    if tuple(phi.disorder_alphabet) != law.support:
        raise ValueError("disorder law support differs from the potential's disorder alphabet")
    k = len(box)
    check_size(S * E, k)
    sb = _as_bc(sigma_bar, box, phi.range)
    eb = _as_bc(eta_bar if eta_bar is not None else law.support[0], box, phi.range)
    en = energy_tensor(phi, box, sb, eb, joint=True).reshape((S, E) * k)
    spin_axes = tuple(2 * i for i in range(k))
    log_z = logsumexp(-en, axis=spin_axes)  # one axis per site over eta
    logP = np.zeros((E,) * k)
    lp0 = np.log(np.array(law.probs))
    for i in range(k):
        shape = [1] * k
        shape[i] = E
        logP = logP + lp0.reshape(shape)
    # broadcast per-eta quantities back onto alternating axes
    shape = []
    for _ in range(k):
        shape += [1, E]
    logp = -en - log_z.reshape(shape) + logP.reshape(shape)
    logp = logp.reshape((S * E,) * k)
    return JointTable(box, phi.alphabet, law.support, np.exp(logp), logp,
                      sigma_bar=sb, eta_bar=eb, radius=box.radius, log_z=log_z)


def annealed_potential(phi: FiniteRangePotential, law: DisorderLaw) -> FiniteRangePotential:
    """U^triv: the joint potential plus the single-site -log P0(eta_x)."""
    lp = np.log(np.array(law.probs))
    support = law.support

    def prior(s, e):
        return -lp[value_index(support, e[..., 0])]

    terms = list(phi.terms) + [Term((origin(phi.d),), prior, "prior")]
    return FiniteRangePotential(terms, phi.d, phi.alphabet, support, name=f"annealed({phi.name})")


def annealed_table(phi: FiniteRangePotential, law: DisorderLaw, box: Box, xi_boundary: Config) -> JointTable:
    """Gibbs table of U^triv over joint states given (spin, disorder) pairs outside."""
    U = annealed_potential(phi, law)
    S, E = len(phi.alphabet), len(law.support)
    check_size(S * E, len(box))
    en = energy_tensor(U, box, xi_boundary, None, joint=True)
    t = ProbTable.from_energies(box, [None] * (S * E), en)
    return JointTable(box, phi.alphabet, law.support, t.p, t.logp, radius=box.radius)


def annealed_kernel(beta: float, h: float, law: DisorderLaw, box: Box, xi_boundary: Config) -> JointTable:
    return annealed_table(rfim(beta, h, box.d, law.support), law, box, xi_boundary)


def _changed_windows(phi, box, eta1: Config, eta2: Config, eta_outside: Config | None = None):
    """Windows whose term changes with eta1 -> eta2 for some spin filling."""
    diff = {s for s in box.sites if eta1[s] != eta2[s]}
    spins = np.array(phi.alphabet, dtype=float)
    out = []
    for w in phi.layout(box).windows:
        if not any(s in diff for s in w.sites):
            continue
        k = len(w.sites)
        if eta_outside is not None and all(x in box or x in eta_outside.box for x in w.sites):
            get = lambda eta, x: eta[x] if x in box else eta_outside[x]
            s = spins[np.indices((len(spins),) * k).reshape(k, -1).T]
            e1 = np.broadcast_to([float(get(eta1, x)) for x in w.sites], s.shape)
            e2 = np.broadcast_to([float(get(eta2, x)) for x in w.sites], s.shape)
            term = phi.terms[w.term]
            if np.all(term.fn(s, e1) == term.fn(s, e2)):
                continue
        out.append(w)
    return out


def delta_H(phi: FiniteRangePotential, box: Box, eta1: Config, eta2: Config, eta_outside: Config,
            sigma: Config) -> float:
    """sum over windows hitting the box of Phi(sigma, eta1 eta_out) - Phi(sigma, eta2 eta_out)."""
    total = 0.0
    for w in phi.layout(box).windows:
        term = phi.terms[w.term]
        s = np.array([[sigma[x] for x in w.sites]], dtype=float)
        e1 = np.array([[eta1[x] if x in box else eta_outside[x] for x in w.sites]], dtype=float)
        e2 = np.array([[eta2[x] if x in box else eta_outside[x] for x in w.sites]], dtype=float)
        total += float(term.fn(s, e1)[0] - term.fn(s, e2)[0])
    return total


def _delta_H_tensor(phi, box, eta1, eta2, eta_outside, table_box: Box):
    """Delta H for every spin configuration of `table_box`."""
    ws = _changed_windows(phi, box, eta1, eta2, eta_outside)
    for w in ws:
        if any(x not in table_box for x in w.sites):
            raise ValueError("quenched table does not cover the windows of Delta H")
    e1 = eta_outside.merge(eta1)
    e2 = eta_outside.merge(eta2)
    return (windows_energy_tensor(phi, ws, table_box, None, e1)
            - windows_energy_tensor(phi, ws, table_box, None, e2))


def q_factor(mu_table: ProbTable, phi: FiniteRangePotential, box: Box, eta1: Config, eta2: Config,
             eta_outside: Config) -> float:
    """Q = mu[eta2 eta_out](exp(-Delta H(eta1, eta2, eta_out)))."""
    dh = _delta_H_tensor(phi, box, eta1, eta2, eta_outside, mu_table.box)
    return float(np.sum(mu_table.p * np.exp(-dh)))


def _spin_part(xi: Config) -> Config:
    return Config(xi.box, tuple(v[0] for v in xi.values))


def _disorder_part(xi: Config) -> Config:
    return Config(xi.box, tuple(v[1] for v in xi.values))


def joint_conditional(phi: FiniteRangePotential, law: DisorderLaw, box: Box, xi_outside: Config,
                      radius: int, sigma_bar=1, eta_bar=None) -> JointTable:
    """The joint conditional built from the annealed kernel and Q factors.

    The quenched measures inside Q live on cube(radius) with spin boundary
    condition sigma_bar outside it; disorder there comes from xi_outside
    (and eta_bar beyond it).
    """
    r = phi.range
    d = box.d
    sur = cube(radius, d)
    if not box.issubset(sur):
        raise ValueError("surrogate cube must contain the box")
    shell = boundary_shell(box, r)
    ann = annealed_table(phi, law, box, xi_outside.restrict(shell))
    eta_out = _disorder_part(xi_outside)
    eb = _as_bc(eta_bar if eta_bar is not None else law.support[0], sur, r)
    sb = _as_bc(sigma_bar, sur, r)
    # disorder outside the box: xi inside the surrogate region, eta_bar elsewhere
    ext = {s: v for s, v in eb.as_dict().items()}
    ext.update({s: v for s, v in eta_out.as_dict().items()})
    ext = Config.from_mapping(ext, d)
    E = len(law.support)
    etas = [Config(box, tuple(law.support[i] for i in idx)) for idx in itertools.product(range(E), repeat=len(box))]
    mus = [exact_gibbs(phi, sur, sb, ext.merge(et)) for et in etas]
    ann_d = ann.disorder_marginal()
    S = len(phi.alphabet)
    k = len(box)
    out = np.zeros((S, E) * k)
    ann_split = ann.split()
    for a, eta in enumerate(etas):
        den = 0.0
        for b, eta_t in enumerate(etas):
            wt = ann_d.p[tuple(law.support.index(v) for v in eta_t.values)]
            if wt == 0:
                continue
            den += wt * q_factor(mus[b], phi, box, eta, eta_t, ext)
        if not den > 0:
            raise ZeroProbabilityError("annealed disorder weight vanishes")
        sl = []
        for v in eta.values:
            sl += [slice(None), law.support.index(v)]
        out[tuple(sl)] = ann_split[tuple(sl)] / den
    return JointTable(box, phi.alphabet, law.support, out.reshape((S * E,) * k), radius=radius)


def _constant_value(cfg):
    if cfg is None:
        return None
    vals = set(cfg.values)
    if len(vals) != 1:
        raise ValueError("surrogate boundary conditions must be constant")
    return vals.pop()


def conditional_residual(phi, law, box: Box, xi_outside: Config, radius: int, oracle: JointTable) -> float:
    """max |joint_conditional - direct conditioning of the oracle table|.

    The surrogate reuses the oracle's (constant) spin and disorder
    boundary values.
    """
    direct = oracle.conditional(box, xi_outside)
    ours = joint_conditional(phi, law, box, xi_outside, radius, _constant_value(oracle.sigma_bar),
                             _constant_value(oracle.eta_bar))
    return float(np.max(np.abs(direct.p - ours.p)))


# -- r plus / minus --------------------------------------------------------

def r_plus_minus(beta: float, h: float, box: Box, eta: Config) -> tuple[float, float]:
    """(r+, r-) with r = 1 / (1 + E[exp(2 h sigma_0)]) under the quenched
    measure on `box` with eta_0 = - and all-plus / all-minus spins outside."""
    d = box.d
    o = origin(d)
    if o not in box:
        raise ValueError("box must contain the origin")
    phi = rfim(beta, h, d)
    # disorder off the box never enters the RFIM energy; pad the shell
    et = eta.restrict(box).replace({o: -1}).merge(Config.constant(boundary_shell(box, 1), -1))
    ob = Box((o,), d)
    out = []
    for s in (1, -1):
        mu = exact_gibbs(phi, box, _as_bc(s, box, 1), et)
        m0 = mu.marginal(ob).p
        ex = m0[0] * math.exp(-2 * h) + m0[1] * math.exp(2 * h)
        out.append(float(1.0 / (1.0 + ex)))
    return out[0], out[1]


# -- boundary constants ----------------------------------------------------

def boundary_size(box: Box, r: int) -> int:
    return len(boundary_shell(box, r))


def c1_hat(phi: FiniteRangePotential, boxes) -> float:
    """Largest boundary oscillation per boundary site over the given boxes."""
    best = 0.0
    for b in boxes:
        nb = boundary_size(b, phi.range)
        if nb:
            best = max(best, boundary_oscillation(phi, b) / nb)
    return best


@dataclass
class EntropyBoundRow:
    n: int
    h: float
    bound: float
    volume: int
    boundary: int
    radius: int

    @property
    def ok(self) -> bool:
        return self.h <= self.bound

    @property
    def per_site(self) -> float:
        return self.h / self.volume


def joint_entropy_bound(phi: FiniteRangePotential, law: DisorderLaw, ns, sigma_plus=1, sigma_minus=-1,
                        radius: int | None = None, eta_bar=None) -> tuple[float, list[EntropyBoundRow]]:
    """h_{cube(n)}(K+ | K-) against 4 C1 |boundary| for each n.

    With `radius` set, K+ and K- are built once on cube(radius) and
    marginalised to each window; otherwise each window is its own
    surrogate box.
    """
    d = phi.d
    boxes = [cube(n, d) for n in ns]
    C1 = c1_hat(phi, boxes)
    rows = []
    if radius is not None:
        sur = cube(radius, d)
        Kp = joint_table(phi, law, sur, sigma_plus, eta_bar)
        Km = joint_table(phi, law, sur, sigma_minus, eta_bar)
    for n, b in zip(ns, boxes):
        if radius is None:
            kp = joint_table(phi, law, b, sigma_plus, eta_bar)
            km = joint_table(phi, law, b, sigma_minus, eta_bar)
        else:
            kp, km = Kp.marginal(b), Km.marginal(b)
        nb = boundary_size(b, phi.range)
        rows.append(EntropyBoundRow(n, kp.kl(km), 4 * C1 * nb, len(b), nb,
                                    b.radius if radius is None else radius))
    return C1, rows


def sup_log_ratio(K1: ProbTable, K2: ProbTable, window: Box) -> float:
    """max over window configurations of |log K1(xi_W) / K2(xi_W)|."""
    a, b = K1.marginal(window), K2.marginal(window)
    if np.any(a.p <= 0) or np.any(b.p <= 0):
        raise ZeroProbabilityError("window marginal has a zero entry")
    return float(np.max(np.abs(np.log(a.p) - np.log(b.p))))


def _cyl_prob(K: ProbTable, cfg: Config) -> float:
    m = K.marginal(cfg.box)
    return float(m.p[m.index_of(cfg)])


def ad_ratio(K, n: int, g: int, event_a: Config, event_b: Config) -> float:
    """K(A and B) / (K(A) K(B)) for cylinder events A in cube(n) and B
    outside cube(n + g)."""
    d = event_a.box.d
    inner, outer = cube(n, d), cube(n + g, d)
    if not event_a.box.issubset(inner):
        raise ValueError("event A must live inside cube(n)")
    if any(s in outer for s in event_b.box.sites):
        raise ValueError("event B must live outside cube(n + g)")
    if isinstance(K, DisorderLaw):
        # product law: cylinder probabilities factorise over sites
        la, lb = K.cylinder_log_prob(event_a), K.cylinder_log_prob(event_b)
        lab = la + lb  # disjoint supports
        return math.exp(lab - (la + lb))
    pa, pb = _cyl_prob(K, event_a), _cyl_prob(K, event_b)
    pab = _cyl_prob(K, event_a.merge(event_b))
    if not (pa > 0 and pb > 0):
        raise ZeroProbabilityError("AD ratio needs events of positive probability")
    return pab / (pa * pb)


# -- d=1 nearest-neighbour backend -----------------------------------------

class ChainJoint:
    """Joint measure on cube(n) in d=1 for potentials with single-site and
    nearest-neighbour terms, computed for every disorder configuration at
    once by forward-backward recursions in log space."""

    def __init__(self, phi: FiniteRangePotential, law: DisorderLaw, n: int, sigma_bar=1, eta_bar=None):
        if phi.d != 1 or phi.range > 1:
            raise ValueError("chain backend needs a d=1 potential of range <= 1")
        self.phi, self.law, self.n = phi, law, n
        self.box = cube(n, 1)
        m = self.m = len(self.box)
        S, E = len(phi.alphabet), len(law.support)
        if E ** m > 1 << 22:
            raise ValueError("too many disorder configurations")
        self.S, self.E = S, E
        sb = _as_bc(sigma_bar, self.box, 1)
        eb = _as_bc(eta_bar if eta_bar is not None else law.support[0], self.box, 1)
        self.sigma_bar, self.eta_bar = sb, eb
        spins = np.array(phi.alphabet, dtype=float)
        dis = np.array(law.support, dtype=float)
        idx = np.indices((E,) * m).reshape(m, -1).T  # (B, m)
        self.eta_idx = idx
        eta = dis[idx]
        B = len(idx)
        self.log_P = np.log(np.array(law.probs))[idx].sum(axis=1)
        left, right = (-n - 1,), (n + 1,)
        sl, sr = sb[left], sb[right]
        el, er = eb[left], eb[right]
        u = np.zeros((B, m, S))
        v = np.zeros((B, m - 1, S, S))
        self._single, self._pair = [], []
        for term in phi.terms:
            if len(term.shape) == 1:
                self._single.append(term)
                for a in range(S):
                    u[:, :, a] += term.fn(np.full((B, m, 1), spins[a]), eta[:, :, None])
            else:
                self._pair.append(term)
                for a in range(S):
                    for b in range(S):
                        s2 = np.empty((B, m - 1, 2))
                        s2[..., 0], s2[..., 1] = spins[a], spins[b]
                        e2 = np.stack([eta[:, :-1], eta[:, 1:]], axis=-1)
                        v[:, :, a, b] += term.fn(s2, e2)
                    # boundary bonds fold into the end sites
                    u[:, 0, a] += term.fn(np.broadcast_to([sl, spins[a]], (B, 2)),
                                          np.stack([np.full(B, el), eta[:, 0]], axis=-1))
                    u[:, -1, a] += term.fn(np.broadcast_to([spins[a], sr], (B, 2)),
                                           np.stack([eta[:, -1], np.full(B, er)], axis=-1))
        self.u, self.v = u, v
        alpha = np.empty((B, m, S))
        alpha[:, 0] = -u[:, 0]
        for x in range(1, m):
            alpha[:, x] = logsumexp(alpha[:, x - 1, :, None] - v[:, x - 1], axis=1) - u[:, x]
        beta = np.zeros((B, m, S))
        for x in range(m - 2, -1, -1):
            beta[:, x] = logsumexp(-v[:, x] - u[:, x + 1, None, :] + beta[:, x + 1, None, :], axis=2)
        self.log_z = logsumexp(alpha[:, -1], axis=1)
        lz = self.log_z[:, None, None]
        self.site = np.exp(alpha + beta - lz)
        self.pair = np.exp(alpha[:, :-1, :, None] - v - u[:, 1:, None, :] + beta[:, 1:, None, :]
                           - lz[..., None])
        self.P = np.exp(self.log_P)
        self.eta = eta

    def mean_energy(self, u=None) -> np.ndarray:
        """E_mu[eta] H for each eta, optionally with other single-site parts."""
        u = self.u if u is None else u
        return (self.site * u).sum(axis=(1, 2)) + (self.pair * self.v).sum(axis=(1, 2, 3))

    def entropy(self) -> float:
        """Shannon entropy of the joint law on the box."""
        h_eta = self.log_z + self.mean_energy()
        return float(-(self.P * self.log_P).sum() + (self.P * h_eta).sum())

    def disorder_entropy(self) -> float:
        return float(-(self.P * self.log_P).sum())

    def kl(self, other: "ChainJoint") -> float:
        """KL between two joint laws sharing P and the potential."""
        cross = self.mean_energy(other.u) - self.mean_energy()
        return float((self.P * (cross + other.log_z - self.log_z)).sum())

    def window_expect(self, w: Window) -> float:
        term = self.phi.terms[w.term]
        i = self.box.index
        spins = np.array(self.phi.alphabet, dtype=float)
        if len(w.sites) == 1:
            x = i[w.sites[0]]
            vals = np.stack([term.fn(np.full((len(self.P), 1), s), self.eta[:, [x]]) for s in spins], axis=1)
            return float((self.P * (self.site[:, x] * vals).sum(axis=1)).sum())
        x = i[w.sites[0]]
        tot = np.zeros(len(self.P))
        for a, sa in enumerate(spins):
            for b, sb in enumerate(spins):
                val = term.fn(np.broadcast_to([sa, sb], (len(self.P), 2)), self.eta[:, [x, x + 1]])
                tot += self.pair[:, x, a, b] * val
        return float((self.P * tot).sum())

    def log_prob_config(self, sigma: np.ndarray) -> np.ndarray:
        """log K(sigma, eta) for a fixed spin configuration, per eta."""
        ids = value_index(self.phi.alphabet, np.asarray(sigma, dtype=float))
        m = self.m
        en = self.u[:, np.arange(m), ids].sum(axis=1)
        en += self.v[:, np.arange(m - 1), ids[:-1], ids[1:]].sum(axis=1)
        return self.log_P - en - self.log_z


class DenseJoint:
    """JointTable wrapped with the same interface as ChainJoint."""

    def __init__(self, table: JointTable, phi: FiniteRangePotential, law: DisorderLaw):
        self.table, self.phi, self.law = table, phi, law
        self.box = table.box
        self.m = len(table.box)
        self.P = table.disorder_marginal().p.reshape(-1)
        self.log_z = None if table.log_z_eta is None else table.log_z_eta.reshape(-1)

    def entropy(self) -> float:
        return self.table.entropy()

    def disorder_entropy(self) -> float:
        return self.table.disorder_marginal().entropy()

    def kl(self, other: "DenseJoint") -> float:
        return self.table.kl(other.table)

    def window_expect(self, w: Window) -> float:
        term = self.phi.terms[w.term]
        sub = Box(w.sites, self.box.d)
        if not sub.issubset(self.box):
            raise ValueError("window leaves the table box")
        mg = self.table.marginal(sub)
        s = np.moveaxis(mg.value_grid(0), 0, -1)
        e = np.moveaxis(mg.value_grid(1), 0, -1)
        # value_grid follows box order; terms expect window order
        order = [sub.index[x] for x in w.sites]
        return float(np.sum(mg.p * term.fn(s[..., order], e[..., order])))

    def log_prob_config(self, sigma: np.ndarray) -> np.ndarray:
        t = self.table.split()
        ids = value_index(self.phi.alphabet, np.asarray(sigma, dtype=float))
        sl = []
        for i in ids:
            sl += [int(i), slice(None)]
        with np.errstate(divide="ignore"):
            return np.log(t[tuple(sl)]).reshape(-1)


def as_joint(K, phi=None, law=None):
    if isinstance(K, (ChainJoint, DenseJoint)):
        return K
    if isinstance(K, JointTable):
        return DenseJoint(K, phi, law)
    raise TypeError(f"not a joint measure: {type(K).__name__}")


def _origin_energy(phi: FiniteRangePotential, K) -> float:
    """sum over windows A containing 0 of K(Phi_A) / |A|."""
    return sum(K.window_expect(w) / len(w.sites) for w in phi.windows_containing(origin(phi.d)))


@dataclass
class Decomposition:
    n: int
    lhs: float
    terms: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.terms.values())

    @property
    def residual(self) -> float:
        return self.lhs - self.total


def entropy_decomposition(K, phi: FiniteRangePotential, law: DisorderLaw, n: int, sigma_bar=1,
                          ref=None) -> Decomposition:
    """Finite-n terms of h(K|K^sbar) = h(K_d|P) - h(K) + h(K_d) + energy + pressure.

    K and the reference K^sbar live on cube(n); the reference is built
    with the same backend as K when not given.
    """
    K = as_joint(K, phi, law)
    if ref is None:
        if isinstance(K, ChainJoint):
            ref = ChainJoint(phi, law, n, sigma_bar, K.eta_bar)
        else:
            ref = DenseJoint(joint_table(phi, law, K.box, sigma_bar, K.table.eta_bar), phi, law)
    ref = as_joint(ref, phi, law)
    m = K.m
    if ref.m != m:
        raise ValueError("K and the reference must share the box")
    Pbox = np.exp(np.log(np.array(law.probs))[np.indices((len(law.support),) * m).reshape(m, -1)].sum(axis=0))
    Kd = K.P
    mask = Kd > 0
    kd_p = float(np.sum(Kd[mask] * np.log(Kd[mask] / Pbox[mask]))) if np.all(Pbox[mask] > 0) else INFINITE
    terms = {
        "h_Kd_P": kd_p / m,
        "minus_h_K": -K.entropy() / m,
        "plus_h_Kd": K.disorder_entropy() / m,
        "energy": _origin_energy(phi, K),
        "pressure": float(np.sum(Kd * ref.log_z)) / m,
    }
    return Decomposition(n, K.kl(ref) / m, terms)


def joint_specific_energy(K, sigma0, phi: FiniteRangePotential, law: DisorderLaw, n: int) -> Decomposition:
    """e^lam for lam = P x delta_{sigma0} at finite n against
    h(P) + mean energy at (sigma0, eta) + mean quenched pressure."""
    K = as_joint(K, phi, law)
    m = K.m
    sig = np.full(m, float(sigma0)) if np.isscalar(sigma0) else np.asarray(sigma0, dtype=float)
    E = len(law.support)
    lp0 = np.log(np.array(law.probs))
    idx = np.indices((E,) * m).reshape(m, -1)
    logP = lp0[idx].sum(axis=0)
    P = np.exp(logP)
    lk = K.log_prob_config(sig)
    lhs = INFINITE if np.any(np.isneginf(lk[P > 0])) else float(-np.sum(P * lk) / m)
    # mean energy at (sigma0, eta) of windows containing the origin
    energy = 0.0
    dis = np.array(law.support, dtype=float)
    for w in phi.windows_containing(origin(phi.d)):
        term = phi.terms[w.term]
        k = len(w.sites)
        grid = np.indices((E,) * k).reshape(k, -1).T
        w_p = np.exp(lp0[grid].sum(axis=1))
        s = np.full((len(grid), k), float(sig[0]) if np.isscalar(sigma0) else 0.0)
        if not np.isscalar(sigma0):
            s[:] = [sig[K.box.index[x]] for x in w.sites]
        energy += float(np.sum(w_p * term.fn(s, dis[grid]))) / k
    terms = {
        "h_P": law.entropy,
        "energy": energy,
        "pressure": float(np.sum(P * K.log_z)) / m,
    }
    return Decomposition(n, lhs, terms)


def sample_disorder(law: DisorderLaw, box: Box, seed, count: int) -> list[Config]:
    """`count` i.i.d. disorder configurations from independent streams."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [law.sample(box, make_rng(child)) for child in ss.spawn(count)]
