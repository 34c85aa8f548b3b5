"""Decimation and the GriSing random field.

GriSing: sites are occupied with probability p, each occupied cluster
carries an independent free-boundary Ising configuration, and the field is
xi = sigma * eta, so 0 marks an empty site.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage
from scipy.special import logsumexp

from .lattice import Box, Config, add, cube
from .measure import EmpiricalSample, make_rng
from .tables import ProbTable, check_size

GRISING_STATES = (-1, 0, 1)
EXACT_CUTOFF = 20  # exact per-cluster sampling up to 2^20 configurations


@dataclass(frozen=True)
class OccupancyField:
    box: Box
    occupied: tuple  # 0/1 per box site
    p: float

    def __post_init__(self):
        if any(v not in (0, 1) for v in self.occupied):
            raise ValueError("occupancy values must be 0 or 1")


@dataclass(frozen=True)
class ClusterLabeling:
    labels: dict  # site -> cluster id (1-based)
    clusters: dict  # id -> tuple of sites
    open: dict  # id -> touches the box boundary

    def __len__(self):
        return len(self.clusters)


def _embed(box: Box, values):
    lo = np.min(np.array(box.sites), axis=0)
    hi = np.max(np.array(box.sites), axis=0)
    arr = np.zeros(tuple(hi - lo + 1), dtype=int)
    for s, v in zip(box.sites, values):
        arr[tuple(np.array(s) - lo)] = v
    return arr, lo


def cluster_find(occ: OccupancyField) -> ClusterLabeling:
    """Nearest-neighbour connected components of the occupied sites."""
    box = occ.box
    if len(box) == 0 or not any(occ.occupied):
        return ClusterLabeling({}, {}, {})
    arr, lo = _embed(box, occ.occupied)
    lab, k = ndimage.label(arr, structure=ndimage.generate_binary_structure(box.d, 1))
    labels, clusters = {}, {}
    for s, v in zip(box.sites, occ.occupied):
        if v:
            c = int(lab[tuple(np.array(s) - lo)])
            labels[s] = c
            clusters.setdefault(c, []).append(s)
    units = [tuple(1 if i == j else 0 for i in range(box.d)) for j in range(box.d)]
    units += [tuple(-c for c in u) for u in units]
    is_open = {c: any(add(s, u) not in box for s in sites for u in units)
               for c, sites in clusters.items()}
    return ClusterLabeling(labels, {c: tuple(v) for c, v in clusters.items()}, is_open)


@lru_cache(maxsize=4096)
def _free_ising_logp(shape: tuple, beta: float) -> np.ndarray:
    """log-probabilities of the free Ising measure on a cluster shape,
    indexed by bit patterns (bit i set = site i is +)."""
    k = len(shape)
    if k > EXACT_CUTOFF:
        raise ValueError("cluster too large for exact enumeration")
    pos = {s: i for i, s in enumerate(shape)}
    bonds = [(pos[s], pos[t]) for s in shape for t in shape
             if s < t and sum(abs(a - b) for a, b in zip(s, t)) == 1]
    codes = np.arange(1 << k)
    spins = np.where((codes[:, None] >> np.arange(k)) & 1, 1.0, -1.0)
    e = np.zeros(1 << k)
    for i, j in bonds:
        e -= beta * spins[:, i] * spins[:, j]
    return -e - logsumexp(-e)


def _canon(sites):
    lo = min(sites)
    return tuple(tuple(a - b for a, b in zip(s, lo)) for s in sites)


def _heatbath_cluster(sites, beta, rng, sweeps):
    k = len(sites)
    pos = {s: i for i, s in enumerate(sites)}
    nbrs = [[pos[t] for t in sites if sum(abs(a - b) for a, b in zip(s, t)) == 1] for s in sites]
    spins = rng.choice([-1.0, 1.0], size=k)
    for _ in range(sweeps):
        for i in range(k):
            field = beta * spins[nbrs[i]].sum()
            spins[i] = 1.0 if rng.random() < 1.0 / (1.0 + math.exp(-2.0 * field)) else -1.0
    return spins


def grising_sample(p: float, beta: float, box: Box, seed: int, n_samples: int = 1,
                   sweeps: int = 200) -> EmpiricalSample:
    """Samples of the GriSing field on the box.

    Clusters up to EXACT_CUTOFF sites are sampled exactly, larger ones by
    heat-bath with `sweeps` sweeps; the method and open clusters are
    recorded in the sample metadata.
    """
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    rng = make_rng(seed)
    k = len(box)
    out = np.zeros((n_samples, k))
    methods = set()
    n_open = 0
    for r in range(n_samples):
        occ = (rng.random(k) < p).astype(int)
        lab = cluster_find(OccupancyField(box, tuple(occ.tolist()), p))
        for c, sites in sorted(lab.clusters.items()):
            n_open += lab.open[c]
            cols = [box.index[s] for s in sites]
            if len(sites) <= EXACT_CUTOFF:
                lp = _free_ising_logp(_canon(sites), float(beta))
                code = rng.choice(len(lp), p=np.exp(lp))
                spins = np.where((code >> np.arange(len(sites))) & 1, 1.0, -1.0)
                methods.add("exact")
            else:
                spins = _heatbath_cluster(sites, beta, rng, sweeps)
                methods.add("heatbath")
            out[r, cols] = spins
    return EmpiricalSample(box, out, seed, sweeps, "grising",
                           {"p": p, "beta": beta, "methods": sorted(methods), "open_clusters": n_open})


def grising_table(p: float, beta: float, box: Box) -> ProbTable:
    """Exact law of the GriSing field on the box (clusters cut at the box)."""
    k = len(box)
    check_size(3, k)
    t = np.zeros((3,) * k)
    for occ in np.ndindex((2,) * k):
        n_occ = sum(occ)
        w = p ** n_occ * (1 - p) ** (k - n_occ)
        if w == 0:
            continue
        occupied = [i for i in range(k) if occ[i]]
        ax = {i: j for j, i in enumerate(occupied)}
        block = np.full((2,) * n_occ, w)
        lab = cluster_find(OccupancyField(box, occ, p))
        for sites in lab.clusters.values():
            m = len(sites)
            # bit i of the code is site i; put site i on axis i
            cl = np.exp(_free_ising_logp(_canon(sites), float(beta)))
            cl = cl.reshape((2,) * m).transpose(tuple(range(m - 1, -1, -1)))
            shape = [1] * n_occ
            cols = [ax[box.index[s]] for s in sites]
            cl = np.transpose(cl, np.argsort(cols))
            for c in cols:
                shape[c] = 2
            block = block * cl.reshape(shape)
        # empty sites take state 0 (index 1); spins -1/+1 are indices 0/2
        idx = tuple(slice(None, None, 2) if occ[i] else 1 for i in range(k))
        t[idx] += block
    return ProbTable(box, GRISING_STATES, t)


@dataclass(frozen=True)
class ZeroRate:
    exact: float
    empirical: float
    lo: float
    hi: float
    n_samples: int

    @property
    def covered(self) -> bool:
        return self.lo <= self.exact <= self.hi


def wilson_interval(k: int, n: int, z: float = 3.0) -> tuple[float, float]:
    phat = k / n
    den = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / den
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / den
    return max(centre - half, 0.0), min(centre + half, 1.0)


def grising_zero_rate(p: float, n: int, d: int = 1, beta: float = 1.0, n_samples: int = 10_000,
                      seed: int = 0, z: float = 3.0) -> ZeroRate:
    """(1/|cube(n)|) log K(0 on cube(n)), exactly and from samples.

    The exact value comes from the exact field table when it fits and from
    the occupancy law (1-p)^|cube| otherwise.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    box = cube(n, d)
    m = len(box)
    if 3 ** m <= 3 ** 10:
        t = grising_table(p, beta, box)
        exact = math.log(t.p[(1,) * m]) / m
    else:
        exact = math.log1p(-p)
    s = grising_sample(p, beta, box, seed, n_samples)
    k = int(np.sum(np.all(s.values == 0, axis=1)))
    lo, hi = wilson_interval(k, n_samples, z)
    emp = math.log(k / n_samples) / m if k else -math.inf
    f = lambda q: math.log(q) / m if q > 0 else -math.inf
    return ZeroRate(exact, emp, f(lo), f(hi), n_samples)


# -- decimation ------------------------------------------------------------

def _decimated_sites(box: Box, b: int):
    keep = [s for s in box.sites if all(c % b == 0 for c in s)]
    return keep, Box(tuple(tuple(c // b for c in s) for s in keep), box.d)


def decimate(obj, b: int, window: Box | None = None):
    """Restriction to the sublattice b Z^d, reindexed by x -> x / b.

    `window` (in decimated coordinates) selects part of the image and must
    fit inside the input box.
    """
    if b < 1:
        raise ValueError("b must be a positive integer")
    box = obj.box
    keep, new = _decimated_sites(box, b)
    if window is not None:
        scaled = [tuple(c * b for c in s) for s in window.sites]
        if any(s not in box for s in scaled):
            raise ValueError("decimation window does not fit inside the box")
        keep, new = scaled, window
    if not keep:
        raise ValueError("box contains no site of the sublattice")
    if isinstance(obj, Config):
        return Config(new, tuple(obj[s] for s in keep))
    if isinstance(obj, ProbTable):
        m = obj.marginal(Box(tuple(keep), box.d))
        return ProbTable(new, obj.states, m.p)
    if isinstance(obj, EmpiricalSample):
        cols = [box.index[s] for s in keep]
        return EmpiricalSample(new, obj.values[:, cols], obj.seed, obj.sweeps, obj.sampler,
                               {**obj.meta, "decimation": b})
    raise TypeError(f"cannot decimate {type(obj).__name__}")
