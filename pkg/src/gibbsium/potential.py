"""Translation-invariant finite-range potentials and their Hamiltonians.

A potential is a list of terms.  Each term has a canonical shape (a sorted
site tuple whose lexicographic minimum is the origin) and a vectorised
function of the values on that shape; the potential is the family of all
translates of its terms.  Joint (spin, disorder) potentials pass the
disorder values as a second array.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .lattice import Box, Config, Site, add, cube, origin, sub, sup_dist

# term(s, e) -> energies; s and e have shape (..., len(shape)), e may be None
TermFn = Callable[[np.ndarray, "np.ndarray | None"], np.ndarray]

PLUS = 1


def canonical_shape(sites: Sequence[Site]) -> tuple[Site, ...]:
    sites = sorted({tuple(s) for s in sites})
    lo = sites[0]
    return tuple(sub(s, lo) for s in sites)


def diameter(shape: Sequence[Site]) -> int:
    return max((sup_dist(a, b) for a in shape for b in shape), default=0)


@dataclass(frozen=True)
class Term:
    shape: tuple[Site, ...]
    fn: TermFn = field(compare=False)
    label: str = ""

    def __post_init__(self):
        shape = tuple(tuple(s) for s in self.shape)
        if canonical_shape(shape) != shape:
            raise ValueError(f"shape {shape} is not canonical")
        object.__setattr__(self, "shape", shape)

    @property
    def diameter(self) -> int:
        return diameter(self.shape)


def value_index(alphabet: Sequence, values: np.ndarray) -> np.ndarray:
    """Positions of `values` inside `alphabet` (all values must occur)."""
    alpha = np.asarray(alphabet, dtype=float)
    order = np.argsort(alpha)
    pos = np.searchsorted(alpha[order], values)
    pos = np.clip(pos, 0, len(alpha) - 1)
    if not np.all(alpha[order][pos] == values):
        raise ValueError("value outside the alphabet")
    return order[pos]


class TableTerm:
    """Term function backed by an explicit table over alphabet^k."""

    def __init__(self, alphabet: Sequence, table: np.ndarray):
        self.alphabet = tuple(alphabet)
        self.table = np.asarray(table, dtype=float)

    def __call__(self, s, e=None):
        idx = value_index(self.alphabet, np.asarray(s, dtype=float))
        return self.table[tuple(np.moveaxis(idx, -1, 0))]


@dataclass(frozen=True)
class Window:
    term: int
    sites: tuple[Site, ...]


@dataclass(frozen=True)
class Layout:
    box: Box
    windows: tuple[Window, ...]
    outside: tuple[Site, ...]  # sites off the box touched by some window


class FiniteRangePotential:
    """Finite-range translation-invariant potential on E^{Z^d}.

    `alphabet` is the single-site spin space; `disorder_alphabet` is set for
    joint (spin, disorder) potentials such as the random field Ising model.
    """

    def __init__(self, terms: Sequence[Term], d: int, alphabet=(-1, 1),
                 disorder_alphabet=None, name: str = "custom"):
        self.terms = tuple(terms)
        self.d = d
        self.alphabet = tuple(alphabet)
        self.disorder_alphabet = None if disorder_alphabet is None else tuple(disorder_alphabet)
        self.name = name
        for t in self.terms:
            if len(t.shape[0]) != d:
                raise ValueError("term shape dimension differs from d")
        self._layouts: dict[Box, Layout] = {}

    def __repr__(self):
        return f"FiniteRangePotential({self.name!r}, d={self.d}, terms={len(self.terms)})"

    @property
    def range(self) -> int:
        return max((t.diameter for t in self.terms), default=0)

    @property
    def is_joint(self) -> bool:
        return self.disorder_alphabet is not None

    def windows_hitting(self, box: Box) -> tuple[Window, ...]:
        out = []
        for ti, term in enumerate(self.terms):
            offsets = {sub(x, s) for x in box.sites for s in term.shape}
            for off in sorted(offsets):
                out.append(Window(ti, tuple(add(s, off) for s in term.shape)))
        return tuple(out)

    def layout(self, box: Box) -> Layout:
        lay = self._layouts.get(box)
        if lay is None:
            windows = self.windows_hitting(box)
            outside = sorted({s for w in windows for s in w.sites if s not in box})
            lay = Layout(box, windows, tuple(outside))
            self._layouts[box] = lay
        return lay

    def windows_containing(self, x: Site) -> tuple[Window, ...]:
        return tuple(Window(ti, tuple(add(s, sub(x, p)) for s in t.shape))
                     for ti, t in enumerate(self.terms) for p in t.shape)


# -- state spaces ----------------------------------------------------------

def _states(phi: FiniteRangePotential, joint: bool):
    """Per-site state space as (spin values, disorder values) arrays."""
    if joint:
        if not phi.is_joint:
            raise ValueError("joint enumeration needs a disorder alphabet")
        pairs = [(s, e) for s in phi.alphabet for e in phi.disorder_alphabet]
        return (np.array([p[0] for p in pairs], dtype=float),
                np.array([p[1] for p in pairs], dtype=float))
    return np.array(phi.alphabet, dtype=float), None


def joint_states(phi: FiniteRangePotential) -> tuple[tuple, ...]:
    return tuple((s, e) for s in phi.alphabet for e in phi.disorder_alphabet)


def _lookup(cfg, site, what, r):
    if cfg is None:
        raise ValueError(f"no {what} given for site {site} (shell too thin for range {r})")
    v = cfg.get(site) if hasattr(cfg, "get") else None
    if v is None:
        raise ValueError(f"{what} does not cover site {site} (shell too thin for range {r})")
    return v


def _window_values(phi, window, varying: Box, st_s, st_e, omega, eta, joint):
    """Energies of one window for every state of its varying sites.

    Returns (positions of varying sites in `varying`, table of shape (S,)*p).
    """
    term = phi.terms[window.term]
    pos = [varying.index[s] for s in window.sites if s in varying]
    p = len(pos)
    S = len(st_s)
    grid = np.indices((S,) * p).reshape(p, -1)
    n = grid.shape[1]
    w = len(window.sites)
    s = np.empty((n, w))
    e = np.empty((n, w)) if phi.is_joint else None
    k = 0
    for j, site in enumerate(window.sites):
        if site in varying:
            s[:, j] = st_s[grid[k]]
            if e is not None:
                e[:, j] = st_e[grid[k]] if joint else _lookup(eta, site, "disorder", phi.range)
            k += 1
        else:
            v = _lookup(omega, site, "boundary configuration", phi.range)
            if joint and isinstance(v, tuple):
                s[:, j], e[:, j] = v
                continue
            s[:, j] = v
            if e is not None:
                e[:, j] = _lookup(eta, site, "disorder", phi.range)
    vals = np.broadcast_to(np.asarray(term.fn(s, e), dtype=float), (n,))
    return pos, vals.reshape((S,) * p)


def windows_energy_tensor(phi, windows, varying: Box, omega=None, eta=None, joint=False):
    """Sum of the given windows for every configuration of `varying`."""
    st_s, st_e = _states(phi, joint)
    S = len(st_s)
    k = len(varying)
    out = np.zeros((S,) * k)
    for w in windows:
        pos, vals = _window_values(phi, w, varying, st_s, st_e, omega, eta, joint)
        shape = [1] * k
        for q in pos:
            shape[q] = S
        out += vals.reshape(shape)
    return out


def energy_tensor(phi: FiniteRangePotential, box: Box, omega=None, eta=None,
                  joint: bool = False) -> np.ndarray:
    """H_box(sigma | omega) for every sigma on the box, as a tensor.

    One axis per box site (lexicographic order) over the spin alphabet, or
    over the joint (spin, disorder) states when `joint` is set.  `omega`
    gives outside spins (or (spin, disorder) pairs); `eta` gives disorder
    values on the box and shell for quenched evaluation, or on the shell
    only in joint mode.
    """
    return windows_energy_tensor(phi, phi.layout(box).windows, box, omega, eta, joint)


def hamiltonian(phi: FiniteRangePotential, box: Box, sigma: Config, omega=None, eta=None) -> float:
    """Finite-volume Hamiltonian of one configuration, summed term by term."""
    total = 0.0
    for w in phi.layout(box).windows:
        term = phi.terms[w.term]
        s = np.empty((1, len(w.sites)))
        e = np.empty((1, len(w.sites))) if phi.is_joint else None
        for j, site in enumerate(w.sites):
            s[0, j] = sigma[site] if site in box else _lookup(omega, site, "boundary configuration", phi.range)
            if e is not None:
                e[0, j] = _lookup(eta, site, "disorder", phi.range)
        total += float(np.asarray(term.fn(s, e)).reshape(-1)[0])
    return total


# -- builtin potentials ----------------------------------------------------

def _unit_vectors(d):
    return [tuple(1 if i == j else 0 for i in range(d)) for j in range(d)]


def ising(beta: float, h: float = 0.0, d: int = 1) -> FiniteRangePotential:
    """Nearest-neighbour Ising: -beta s_x s_y per bond, -h s_x per site."""
    terms = [Term((origin(d), e), lambda s, _e: -beta * s[..., 0] * s[..., 1], "pair")
             for e in _unit_vectors(d)]
    terms.append(Term((origin(d),), lambda s, _e: -h * s[..., 0], "field"))
    return FiniteRangePotential(terms, d, name=f"ising(beta={beta}, h={h})")


def rfim(beta: float, h: float, d: int = 1, disorder=(-1, 1)) -> FiniteRangePotential:
    """Random field Ising: -beta s_x s_y per bond, -h eta_x s_x per site."""
    terms = [Term((origin(d), e), lambda s, _e: -beta * s[..., 0] * s[..., 1], "pair")
             for e in _unit_vectors(d)]
    terms.append(Term((origin(d),), lambda s, e: -h * e[..., 0] * s[..., 0], "field"))
    return FiniteRangePotential(terms, d, disorder_alphabet=disorder,
                                name=f"rfim(beta={beta}, h={h})")


def triv_annealed(beta: float, h: float, law, d: int = 1) -> FiniteRangePotential:
    """RFIM terms plus the single-site -log P0(eta_x) term."""
    base = rfim(beta, h, d, law.support)
    logp = np.log(np.asarray(law.probs, dtype=float))
    support = law.support

    def prior(s, e):
        return -logp[value_index(support, e[..., 0])]

    terms = list(base.terms) + [Term((origin(d),), prior, "prior")]
    return FiniteRangePotential(terms, d, disorder_alphabet=support,
                                name=f"triv_annealed(beta={beta}, h={h})")


def zero_potential(d: int = 1, alphabet=(-1, 1)) -> FiniteRangePotential:
    return FiniteRangePotential((), d, alphabet, name="zero")


def random_potential(rng: np.random.Generator, d: int, max_range: int = 2, n_terms: int = 3,
                     alphabet=(-1, 1), coef: float = 2.0) -> FiniteRangePotential:
    """Random table-valued potential with shapes inside [0, max_range]^d."""
    window = list(itertools.product(range(max_range + 1), repeat=d))
    terms = []
    for _ in range(n_terms):
        k = int(rng.integers(1, min(len(window), 4) + 1))
        pick = rng.choice(len(window), size=k, replace=False)
        shape = canonical_shape([window[i] for i in pick])
        table = rng.uniform(-coef, coef, size=(len(alphabet),) * len(shape))
        terms.append(Term(shape, TableTerm(alphabet, table), "table"))
    return FiniteRangePotential(terms, d, alphabet, name="random")


# -- transforms ------------------------------------------------------------

def truncate(phi: FiniteRangePotential, R: int) -> FiniteRangePotential:
    """Drop every term of diameter > R."""
    if R < 0:
        raise ValueError("R must be nonnegative")
    kept = [t for t in phi.terms if t.diameter <= R]
    return FiniteRangePotential(kept, phi.d, phi.alphabet, phi.disorder_alphabet,
                                name=f"{phi.name}^({R})")


def vacuum_transform(phi: FiniteRangePotential, vacuum=PLUS) -> FiniteRangePotential:
    """Equivalent potential vanishing whenever a site of its support is +.

    Each term is re-expressed relative to the all-plus configuration and
    split over the subsets of its shape by Moebius inversion.  The
    inversion is done as successive differences along each axis so the
    vacuum entries come out as exact zeros.
    """
    if phi.is_joint:
        raise ValueError("vacuum transform is defined for spin potentials")
    if vacuum not in phi.alphabet:
        raise ValueError(f"alphabet {phi.alphabet} lacks the vacuum state {vacuum}")
    S = len(phi.alphabet)
    ip = phi.alphabet.index(vacuum)
    values = np.array(phi.alphabet, dtype=float)
    acc: dict[tuple, np.ndarray] = {}
    for term in phi.terms:
        k = len(term.shape)
        grid = np.indices((S,) * k).reshape(k, -1).T
        vals = np.asarray(term.fn(values[grid], None), dtype=float).reshape((S,) * k)
        g = vals - vals[(ip,) * k]
        for size in range(1, k + 1):
            for A in itertools.combinations(range(k), size):
                t = g[tuple(slice(None) if j in A else ip for j in range(k))]
                for axis in range(size):
                    t = t - np.take(t, [ip], axis=axis)
                shape = canonical_shape([term.shape[j] for j in A])
                acc[shape] = acc[shape] + t if shape in acc else t
    terms = [Term(shape, TableTerm(phi.alphabet, table), "vacuum")
             for shape, table in sorted(acc.items()) if np.any(table != 0.0)]
    return FiniteRangePotential(terms, phi.d, phi.alphabet, name=f"vacuum({phi.name})")


# -- sup-norm quantities ---------------------------------------------------

MAX_ENUM = 1 << 22


def _enumerate_windows(phi, windows, joint=None):
    """All configurations of the sites touched by `windows`, summed."""
    joint = phi.is_joint if joint is None else joint
    sites = Box(tuple({s for w in windows for s in w.sites}), phi.d)
    S = len(_states(phi, joint)[0])
    if S ** len(sites) > MAX_ENUM:
        raise ValueError(f"{S}^{len(sites)} configurations exceed the enumeration cap")
    return sites, windows_energy_tensor(phi, windows, sites, joint=joint)


def tail_seminorm(phi: FiniteRangePotential, n: int) -> float:
    """sup_sigma |sum over A containing 0, A not inside cube(n) of Phi_A|."""
    box = cube(n, phi.d)
    ws = [w for w in phi.windows_containing(origin(phi.d))
          if any(s not in box for s in w.sites)]
    if not ws:
        return 0.0
    _, t = _enumerate_windows(phi, ws)
    return float(np.max(np.abs(t)))


def diameter_tail(phi: FiniteRangePotential, R: int) -> float:
    """sup_sigma |sum over A containing 0 with diam(A) > R of Phi_A|."""
    ws = [w for w in phi.windows_containing(origin(phi.d)) if diameter(w.sites) > R]
    if not ws:
        return 0.0
    _, t = _enumerate_windows(phi, ws)
    return float(np.max(np.abs(t)))


def site_tail(phi: FiniteRangePotential, box: Box, x: Site) -> float:
    """sup_sigma |sum over A containing x, A not inside box of Phi_A|."""
    ws = [w for w in phi.windows_containing(x) if any(s not in box for s in w.sites)]
    if not ws:
        return 0.0
    _, t = _enumerate_windows(phi, ws)
    return float(np.max(np.abs(t)))


def boundary_bound(phi: FiniteRangePotential, box: Box) -> float:
    """2 * sum_x site_tail(x): bounds sup |H^eta_box - H^omega_box|."""
    return 2.0 * sum(site_tail(phi, box, x) for x in box.sites)


def crossing_windows(phi: FiniteRangePotential, box: Box) -> list[Window]:
    return [w for w in phi.layout(box).windows if any(s not in box for s in w.sites)]


def boundary_oscillation(phi: FiniteRangePotential, box: Box) -> float:
    """sup over inside configs of the spread, over outside configs, of the
    boundary-crossing energy; equals sup_{sigma,omega,eta} |H^eta - H^omega|.
    Joint potentials vary spin and disorder together.
    """
    ws = crossing_windows(phi, box)
    if not ws:
        return 0.0
    sites, t = _enumerate_windows(phi, ws)
    out_axes = tuple(i for i, s in enumerate(sites.sites) if s not in box)
    spread = t.max(axis=out_axes) - t.min(axis=out_axes)
    return float(np.max(spread))


def free_log_partition(phi: FiniteRangePotential, box: Box) -> float:
    """log sum_sigma exp(-sum_{A inside box} Phi_A(sigma))."""
    from scipy.special import logsumexp

    ws = [w for w in phi.layout(box).windows if all(s in box for s in w.sites)]
    t = windows_energy_tensor(phi, ws, box)
    return float(logsumexp(-t))
