"""Finite-volume measures, entropies, specific energies and domination.

Measures are exact tables, or for d=1 the stationary Markov chain given by
the transfer matrix, which plays the role of the infinite-volume measure.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Box, Config, cube, origin, past
from .potential import FiniteRangePotential, energy_tensor
from .specification import GibbsSpecification
from .tables import INFINITE, KernelTable, ProbTable, ZeroProbabilityError, check_size, point_mass


def exact_gibbs(phi: FiniteRangePotential, box: Box, omega: Config | None, eta: Config | None = None) -> KernelTable:
    """exp(-H_box(. | omega)) / Z over the spin alphabet."""
    check_size(len(phi.alphabet), len(box))
    e = energy_tensor(phi, box, omega, eta)
    return KernelTable.from_energies(box, phi.alphabet, e, omega=omega)


def marginal(mu, sub: Box) -> ProbTable:
    return window_table(mu, sub)


def conditional(mu: ProbTable, sub: Box, fixed: Config) -> ProbTable:
    return mu.conditional(sub, fixed)


# -- d=1 transfer chain ----------------------------------------------------

class TransferChain:
    """Stationary chain on blocks of L = max(range, 1) consecutive spins.

    Window laws of the chain are the infinite-volume Gibbs marginals of a
    d=1 finite-range potential.
    """

    def __init__(self, phi: FiniteRangePotential):
        if phi.d != 1 or phi.is_joint:
            raise ValueError("transfer chains need a d=1 spin potential")
        self.phi = phi
        self.alphabet = phi.alphabet
        S = len(self.alphabet)
        L = max(phi.range, 1)
        if S ** L > 4096:
            raise ValueError("transfer alphabet too large")
        self.L = L
        self.blocks = list(itertools.product(range(S), repeat=L))
        vals = np.array(self.alphabet, dtype=float)
        # energy of the windows starting at site 0, for sites 0..L
        grid = np.indices((S,) * (L + 1)).reshape(L + 1, -1).T
        s = vals[grid]
        e = np.zeros(len(grid))
        for term in phi.terms:
            cols = [c[0] for c in term.shape]
            e += np.asarray(term.fn(s[:, cols], None), dtype=float)
        w = np.exp(-(e - e.min())).reshape((S ** L, S))
        M = np.zeros((S ** L, S ** L))
        nxt = (np.arange(S ** L) * S) % (S ** L)
        for b in range(S ** L):
            for a in range(S):
                M[b, nxt[b] + a] = w[b, a]
        ev, right = np.linalg.eig(M)
        k = int(np.argmax(ev.real))
        lam = ev[k].real
        v = np.abs(right[:, k].real)
        evl, left = np.linalg.eig(M.T)
        u = np.abs(left[:, int(np.argmax(evl.real))].real)
        self.log_lambda = math.log(lam) - e.min()
        self.P = M * v[None, :] / (lam * v[:, None])
        pi = u * v
        self.pi = pi / pi.sum()
        self.M = M
        # P as a tensor: P5[block..., next spin]
        self._P5 = np.zeros((S,) * (L + 1))
        for b in range(S ** L):
            for a in range(S):
                self._P5[np.unravel_index(b * S + a, (S,) * (L + 1))] = self.P[b, nxt[b] + a]

    def _plus_block(self) -> int:
        ip = self.alphabet.index(1)
        return sum(ip * len(self.alphabet) ** i for i in range(self.L))

    def entropy_rate(self) -> float:
        P = self.P
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(P > 0, P * np.log(P), 0.0)
        return float(-(self.pi @ t.sum(axis=1)))

    def window_entropy(self, m: int) -> float:
        if m < self.L:
            return window_table(self, Box(tuple((i,) for i in range(m)), 1)).entropy()
        pi = self.pi[self.pi > 0]
        return float(-(pi * np.log(pi)).sum()) + (m - self.L) * self.entropy_rate()

    def log_prob_plus(self, m: int) -> float:
        """log nu(+ on m consecutive sites)."""
        if m < self.L:
            t = window_table(self, Box(tuple((i,) for i in range(m)), 1))
            return float(np.log(t.p[(self.alphabet.index(1),) * m]))
        b = self._plus_block()
        return float(np.log(self.pi[b]) + (m - self.L) * np.log(self.P[b, b]))

    def e_plus(self) -> float:
        b = self._plus_block()
        return float(-np.log(self.P[b, b]))

    def kl_rate(self, other: "TransferChain") -> float:
        if other.L != self.L or other.alphabet != self.alphabet:
            raise ValueError("chains must share block structure")
        mask = self.P > 0
        if np.any(other.P[mask] <= 0):
            return INFINITE
        r = np.zeros_like(self.P)
        r[mask] = self.P[mask] * (np.log(self.P[mask]) - np.log(other.P[mask]))
        return float(self.pi @ r.sum(axis=1))

    def window_kl(self, other: "TransferChain", m: int) -> float:
        if m < self.L:
            box = Box(tuple((i,) for i in range(m)), 1)
            return window_table(self, box).kl(window_table(other, box))
        a, b = self.pi, other.pi
        mask = a > 0
        if np.any(b[mask] <= 0):
            return INFINITE
        return float(np.sum(a[mask] * np.log(a[mask] / b[mask]))) + (m - self.L) * self.kl_rate(other)

    def table(self, m: int) -> np.ndarray:
        """Law of m >= L consecutive spins as a dense tensor."""
        S = len(self.alphabet)
        check_size(S, m)
        A = self.pi.reshape((S,) * self.L)
        for _ in range(m - self.L):
            A = A[..., None] * self._P5
        return A


def transfer_chain(phi: FiniteRangePotential, bc=None) -> TransferChain:
    """The d=1 infinite-volume chain; `bc` is accepted for symmetry with the
    finite-volume constructors but has no effect (the limit is unique)."""
    return TransferChain(phi)


def window_table(source, box: Box) -> ProbTable:
    """Marginal law of `box` under a table or a transfer chain."""
    if isinstance(source, ProbTable):
        if box == source.box:
            return source
        return source.marginal(box)
    if isinstance(source, TransferChain):
        xs = [s[0] for s in box.sites]
        lo, hi = min(xs), max(xs)
        m = max(hi - lo + 1, source.L)
        A = source.table(m)
        keep = [x - lo for x in xs]
        drop = tuple(i for i in range(m) if i not in keep)
        return ProbTable(box, source.alphabet, A.sum(axis=drop) if drop else A)
    if hasattr(source, "window_table"):
        return source.window_table(box)
    raise TypeError(f"no window law for {type(source).__name__}")


# -- entropies -------------------------------------------------------------

def _volume(n: int, d: int) -> int:
    return (2 * n + 1) ** d


def ks_entropy_rate(source, n: int, d: int = 1) -> float:
    """h_n = -(1/|cube(n)|) sum mu log mu."""
    if isinstance(source, ProbTable):
        d = source.box.d
    m = _volume(n, d)
    if isinstance(source, TransferChain):
        return source.window_entropy(m) / m
    if hasattr(source, "window_entropy"):
        return source.window_entropy(n) / m
    return window_table(source, cube(n, d)).entropy() / m


def relative_entropy_rate(mu, nu, n: int, d: int = 1) -> float:
    """(1/|cube(n)|) sum mu log(mu/nu), INFINITE if mu charges a nu-null set."""
    if isinstance(mu, ProbTable):
        d = mu.box.d
    m = _volume(n, d)
    if isinstance(mu, TransferChain) and isinstance(nu, TransferChain):
        return mu.window_kl(nu, m) / m
    if hasattr(mu, "window_kl"):
        return mu.window_kl(nu, n) / m
    box = cube(n, d)
    return window_table(mu, box).kl(window_table(nu, box)) / m


def specific_energy(nu, lam=None, n: int = 1, d: int = 1) -> float:
    """-(1/|cube(n)|) int log nu(xi_cube) lam(dxi); lam=None is the point
    mass at the all-plus configuration."""
    if isinstance(nu, ProbTable):
        d = nu.box.d
    m = _volume(n, d)
    box = cube(n, d)
    if lam is None:
        if isinstance(nu, TransferChain):
            return -nu.log_prob_plus(m) / m
        t = window_table(nu, box)
        p = t.p[(t.states.index(1),) * len(box)]
        return INFINITE if p <= 0 else float(-math.log(p) / m)
    t = window_table(nu, box)
    lt = window_table(lam, box)
    mask = lt.p > 0
    if np.any(t.p[mask] <= 0):
        return INFINITE
    return float(-np.sum(lt.p[mask] * np.log(t.p[mask])) / m)


def D_integral(spec: GibbsSpecification, mu, lam=None, d: int = 1) -> float:
    """int int log gamma_0(sigma^xi | sigma^xi) / gamma_0(xi | sigma^xi) dmu dlam.

    sigma^xi is sigma on the lexicographic past (x <= 0) and xi on the
    future; the integrand only sees cube(range).
    """
    r = spec.range
    w = cube(max(r, 0), d)
    o = origin(d)
    pst = past(w)
    fut = Box(tuple(s for s in w.sites if s > o), d)
    fut0 = fut | Box((o,), d)
    mu_p = window_table(mu, pst)
    lam_f = point_mass(fut0, spec.alphabet, spec.plus) if lam is None else window_table(lam, fut0)
    ob = Box((o,), d)
    total = 0.0
    for cp, p in mu_p.configs():
        if p == 0:
            continue
        for cf, q in lam_f.configs():
            if q == 0:
                continue
            vals = {**cp.as_dict(), **{s: v for s, v in cf.as_dict().items() if s != o}}
            del vals[o]
            omega = Config.from_mapping(vals, d) if vals else None
            k = spec.kernel(ob, omega)
            total += p * q * float(k.logp[k._index[cp[o]]] - k.logp[k._index[cf[o]]])
    return total


def entropy_formula_terms(spec: GibbsSpecification, mu, nu, lam=None, n: int = 1, d: int = 1) -> dict:
    """Finite-n terms of -h(mu) + e^lam(nu) - int int D."""
    if isinstance(mu, ProbTable):
        d = mu.box.d
    h = ks_entropy_rate(mu, n, d)
    e = specific_energy(nu, lam, n, d)
    D = D_integral(spec, mu, lam, d)
    return {"h_mu": h, "e_nu": e, "D": D, "rhs": -h + e - D}


def entropy_formula_rhs(spec: GibbsSpecification, mu, nu, lam=None, n: int = 1, d: int = 1) -> float:
    return entropy_formula_terms(spec, mu, nu, lam, n, d)["rhs"]


def plus_decomposition(mu: ProbTable, nu: ProbTable, n: int) -> tuple[float, float]:
    """(h_n(mu|nu), -h_n(mu) - avg log nu/nu(+) - log nu(+)/|cube|)."""
    d = mu.box.d
    box = cube(n, d)
    m = len(box)
    a, b = window_table(mu, box), window_table(nu, box)
    lhs = a.kl(b) / m
    plus = (a.states.index(1),) * m
    mask = a.p > 0
    if np.any(b.p[mask] <= 0) or b.p[plus] <= 0:
        return lhs, INFINITE
    mid = np.sum(a.p[mask] * (b.logp[mask] - b.logp[plus]))
    return lhs, float(-a.entropy() / m - mid / m - b.logp[plus] / m)


def plus_referenced_decomposition(mu: ProbTable, nu: ProbTable, n: int) -> tuple[float, float]:
    """(h_n(mu|nu), sum of the three plus-referenced terms)."""
    d = mu.box.d
    box = cube(n, d)
    m = len(box)
    a, b = window_table(mu, box), window_table(nu, box)
    lhs = a.kl(b) / m
    plus = (a.states.index(1),) * m
    mask = a.p > 0
    if np.any(b.p[mask] <= 0) or a.p[plus] <= 0 or b.p[plus] <= 0:
        return lhs, INFINITE
    t1 = np.sum(a.p[mask] * (a.logp[mask] - a.logp[plus]))
    t2 = np.sum(a.p[mask] * (b.logp[mask] - b.logp[plus]))
    t3 = a.logp[plus] - b.logp[plus]
    return lhs, float((t1 - t2 + t3) / m)


# -- stochastic domination -------------------------------------------------

def up_sets(k: int) -> list[np.ndarray]:
    """All up-sets of {0,1}^k (componentwise order) as boolean masks."""
    n = 1 << k
    order = sorted(range(n), key=lambda c: -bin(c).count("1"))
    above = [[c | (1 << i) for i in range(k) if not c >> i & 1] for c in range(n)]
    out = []
    member = np.zeros(n, dtype=bool)

    def rec(j):
        if j == n:
            out.append(member.copy())
            return
        c = order[j]
        member[c] = False
        rec(j + 1)
        if all(member[u] for u in above[c]):
            member[c] = True
            rec(j + 1)
            member[c] = False

    rec(0)
    return out


def check_domination(mu: ProbTable, nu: ProbTable, tol: float = 1e-12) -> bool:
    """mu <= nu stochastically: mu(U) <= nu(U) for every up-set U."""
    if mu.box != nu.box or mu.states != nu.states:
        raise ValueError("tables must share box and states")
    if len(mu.states) != 2:
        raise ValueError("domination check needs a binary alphabet")
    k = len(mu.box)
    if k > 4:
        raise ValueError("box too large for exhaustive up-set enumeration (max 4 sites)")
    hi = int(np.argmax(mu.states))
    # bit i of a code is set when site i carries the larger state
    pm = np.empty(1 << k)
    pn = np.empty(1 << k)
    for idx in np.ndindex(mu.p.shape):
        c = sum(1 << i for i, v in enumerate(idx) if v == hi)
        pm[c] = mu.p[idx]
        pn[c] = nu.p[idx]
    return all(pm[U].sum() <= pn[U].sum() + tol for U in up_sets(k))


# -- sampling --------------------------------------------------------------

def make_rng(seed) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class EmpiricalSample:
    box: Box
    values: np.ndarray  # (n_samples, |box|)
    seed: int
    sweeps: int
    sampler: str
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def configs(self):
        for row in self.values:
            yield Config(self.box, tuple(row.tolist()))

    def mean(self, site) -> float:
        return float(self.values[:, self.box.index[tuple(site)]].mean())

    def frequencies(self, states) -> ProbTable:
        """Empirical law over all configurations of the box."""
        S = len(states)
        counts = np.zeros((S,) * len(self.box))
        idx = np.searchsorted(np.array(states), self.values).astype(int)
        np.add.at(counts, tuple(idx.T), 1)
        return ProbTable(self.box, states, counts / counts.sum())


def heatbath_sample(spec: GibbsSpecification, box: Box, omega: Config | None, sweeps: int,
                    seed: int, n_chains: int = 1) -> EmpiricalSample:
    """Single-site heat-bath sweeps in lexicographic order.

    Runs `n_chains` independent chains from i.i.d. uniform starts and
    keeps the final configuration of each.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    rng = make_rng(seed)
    phi = spec.potential
    alpha = np.array(spec.alphabet, dtype=float)
    S = len(alpha)
    state = alpha[rng.integers(0, S, size=(n_chains, len(box)))]
    plans = []
    for x in box.sites:
        ws = []
        for w in phi.windows_containing(x):
            cols = []
            for s in w.sites:
                if s in box:
                    cols.append(("in", box.index[s]))
                else:
                    if omega is None or omega.get(s) is None:
                        raise ValueError(f"boundary configuration misses site {s}")
                    cols.append(("out", omega[s]))
            e = None
            if phi.is_joint:
                e = np.array([[spec.eta[s] for s in w.sites]], dtype=float)
            ws.append((phi.terms[w.term], cols, e))
        plans.append((box.index[x], ws))
    for _ in range(sweeps):
        for i, ws in plans:
            energy = np.zeros((n_chains, S))
            for a in range(S):
                state[:, i] = alpha[a]
                for term, cols, e in ws:
                    s = np.column_stack([state[:, c] if kind == "in" else np.full(n_chains, c, dtype=float)
                                         for kind, c in cols])
                    energy[:, a] += term.fn(s, None if e is None else np.broadcast_to(e, s.shape))
            logits = -(energy - energy.min(axis=1, keepdims=True))
            prob = np.exp(logits)
            prob /= prob.sum(axis=1, keepdims=True)
            u = rng.random(n_chains)
            pick = (u[:, None] > np.cumsum(prob, axis=1)).sum(axis=1)
            state[:, i] = alpha[np.minimum(pick, S - 1)]
    return EmpiricalSample(box, state, seed, sweeps, "heatbath", {"n_chains": n_chains})


def require_positive(p: float, what: str = "event"):
    if not p > 0:
        raise ZeroProbabilityError(f"{what} has probability zero")
