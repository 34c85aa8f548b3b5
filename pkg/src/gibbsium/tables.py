"""Exact probability tables over all configurations of a small box.

A table holds a dense array with one axis per box site (lexicographic
order), indexed by position in the per-site state tuple.  Joint tables use
(spin, disorder) pairs as states, ordered spin-major.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .lattice import Box, Config

MAX_CONFIGS = 1 << 24
INFINITE = math.inf


class ZeroProbabilityError(ArithmeticError):
    """Conditioning on, or taking the log of, a zero-probability event."""


def check_size(n_states: int, n_sites: int):
    if n_states ** n_sites > MAX_CONFIGS:
        raise ValueError(f"{n_states}^{n_sites} configurations exceed the cap of 2^24")


def _xlogx_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(np.sum(p * np.log(p)))


class ProbTable:
    """Probability of every configuration on `box` over `states`."""

    def __init__(self, box: Box, states: Sequence, p: np.ndarray, logp: np.ndarray | None = None):
        self.box = box
        self.states = tuple(states)
        S = len(self.states)
        p = np.asarray(p, dtype=float)
        if p.shape != (S,) * len(box):
            raise ValueError(f"table shape {p.shape} does not match {len(box)} sites x {S} states")
        self.p = p
        self._logp = logp
        self._index = {s: i for i, s in enumerate(self.states)}

    @classmethod
    def from_energies(cls, box: Box, states, energy: np.ndarray, **kw):
        """Gibbs table exp(-energy)/Z, normalised in log space."""
        logz = logsumexp(-energy)
        logp = -energy - logz
        out = cls(box, states, np.exp(logp), logp, **kw)
        out.log_z = float(logz)
        return out

    @classmethod
    def from_function(cls, box: Box, states, fn: Callable[[Config], float]):
        S = len(states)
        p = np.empty((S,) * len(box))
        for idx in np.ndindex(p.shape):
            p[idx] = fn(Config(box, tuple(states[i] for i in idx)))
        return cls(box, states, p / p.sum())

    def __repr__(self):
        return f"{type(self).__name__}({self.box!r}, states={self.states})"

    @property
    def logp(self) -> np.ndarray:
        if self._logp is None:
            with np.errstate(divide="ignore"):
                self._logp = np.log(self.p)
        return self._logp

    @property
    def n_states(self) -> int:
        return len(self.states)

    def total(self) -> float:
        return float(self.p.sum())

    def index_of(self, config: Config) -> tuple[int, ...]:
        return tuple(self._index[config[s]] for s in self.box.sites)

    def prob(self, config: Config) -> float:
        return float(self.p[self.index_of(config.restrict(self.box))])

    def configs(self):
        """Iterate (Config, probability) pairs."""
        for idx in np.ndindex(self.p.shape):
            yield Config(self.box, tuple(self.states[i] for i in idx)), float(self.p[idx])

    def value_grid(self, component=None) -> np.ndarray:
        """Per-axis state values broadcastable against the table, stacked
        on a leading axis of length |box|."""
        vals = np.array([s if component is None else s[component] for s in self.states], dtype=float)
        return vals[np.indices(self.p.shape)]

    def expect(self, fn: Callable[[np.ndarray], np.ndarray], component=None) -> float:
        """E[fn(values)], fn receiving values with the site axis last."""
        if len(self.box) == 0:
            return float(np.asarray(fn(np.zeros((1, 0))))[0])
        vals = np.moveaxis(self.value_grid(component), 0, -1)
        return float(np.sum(self.p * fn(vals)))

    def marginal(self, sub: Box) -> "ProbTable":
        if not sub.issubset(self.box):
            raise ValueError("marginal box must lie inside the table box")
        drop = tuple(i for i, s in enumerate(self.box.sites) if s not in sub)
        return ProbTable(sub, self.states, self.p.sum(axis=drop) if drop else self.p)

    def conditional(self, sub: Box, fixed: Config) -> "ProbTable":
        """Law of the `sub` sites given the values of `fixed` elsewhere."""
        if not sub.issubset(self.box):
            raise ValueError("conditional box must lie inside the table box")
        idx = []
        for s in self.box.sites:
            if s in sub:
                idx.append(slice(None))
            else:
                v = fixed.get(s)
                if v is None:
                    raise ValueError(f"conditioning configuration misses site {s}")
                idx.append(self._index[v])
        slab = self.p[tuple(idx)]
        z = slab.sum()
        if not z > 0:
            raise ZeroProbabilityError("conditioning event has probability zero")
        return ProbTable(sub, self.states, slab / z)

    def entropy(self) -> float:
        """Shannon entropy with 0 log 0 = 0."""
        return -_xlogx_sum(self.p)

    def kl(self, other: "ProbTable") -> float:
        """sum p log(p/q); INFINITE when p charges a q-null configuration."""
        if other.box != self.box or other.states != self.states:
            raise ValueError("relative entropy needs tables on the same box and states")
        mask = self.p > 0
        if np.any(other.p[mask] <= 0):
            return INFINITE
        return float(np.sum(self.p[mask] * (self.logp[mask] - other.logp[mask])))

    def tv(self, other: "ProbTable") -> float:
        """Total variation, i.e. the maximum over events of |P(A) - Q(A)|."""
        return 0.5 * float(np.abs(self.p - other.p).sum())


class KernelTable(ProbTable):
    """gamma_box(. | omega) with its boundary condition attached."""

    def __init__(self, box, states, p, logp=None, omega: Config | None = None):
        super().__init__(box, states, p, logp)
        self.omega = omega

    @classmethod
    def from_energies(cls, box, states, energy, omega=None):
        out = super().from_energies(box, states, energy)
        out.omega = omega
        return out


class JointTable(ProbTable):
    """Table over (spin, disorder) pairs with the construction recorded."""

    def __init__(self, box, spins, disorder, p, logp=None, sigma_bar=None, eta_bar=None,
                 radius=None, log_z: np.ndarray | None = None):
        self.spins = tuple(spins)
        self.disorder = tuple(disorder)
        states = tuple((s, e) for s in self.spins for e in self.disorder)
        super().__init__(box, states, p, logp)
        self.sigma_bar = sigma_bar
        self.eta_bar = eta_bar
        self.radius = radius
        # quenched log Z per eta on the box, shape (|E'|,)*|box|
        self.log_z_eta = log_z

    def split(self) -> np.ndarray:
        """The table reshaped to alternating (spin, disorder) axes."""
        k = len(self.box)
        return self.p.reshape((len(self.spins), len(self.disorder)) * k)

    def disorder_marginal(self) -> ProbTable:
        k = len(self.box)
        q = self.split().sum(axis=tuple(2 * i for i in range(k)))
        return ProbTable(self.box, self.disorder, q)

    def spin_marginal(self) -> ProbTable:
        k = len(self.box)
        q = self.split().sum(axis=tuple(2 * i + 1 for i in range(k)))
        return ProbTable(self.box, self.spins, q)

    def spin_given_disorder(self, eta: Config) -> ProbTable:
        k = len(self.box)
        t = self.split()
        idx = []
        for s in self.box.sites:
            idx += [slice(None), self.disorder.index(eta[s])]
        slab = t[tuple(idx)]
        z = slab.sum()
        if not z > 0:
            raise ZeroProbabilityError("disorder configuration has probability zero")
        return ProbTable(self.box, self.spins, slab / z)

    def marginal(self, sub: Box) -> "JointTable":
        m = super().marginal(sub)
        return JointTable(sub, self.spins, self.disorder, m.p, sigma_bar=self.sigma_bar,
                          eta_bar=self.eta_bar, radius=self.radius)

    def conditional(self, sub: Box, fixed: Config) -> "JointTable":
        c = super().conditional(sub, fixed)
        return JointTable(sub, self.spins, self.disorder, c.p, radius=self.radius)


def point_mass(box: Box, states, value) -> ProbTable:
    S = len(states)
    p = np.zeros((S,) * len(box))
    p[(tuple(states).index(value),) * len(box)] = 1.0
    return ProbTable(box, states, p)


def product_table(box: Box, states, probs) -> ProbTable:
    probs = np.asarray(probs, dtype=float)
    p = np.ones(())
    for _ in box.sites:
        p = np.multiply.outer(p, probs)
    return ProbTable(box, states, p)


def uniform(box: Box, states) -> ProbTable:
    S = len(states)
    return product_table(box, states, np.full(S, 1.0 / S))
