"""Sites, boxes and finite configurations on Z^d.

Sites are plain integer tuples.  Boxes are immutable, lexicographically
sorted site sets.  Configurations always carry their box explicitly; there
are no infinite configurations, boundary values live on explicit shells.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

Site = tuple[int, ...]


def origin(d: int) -> Site:
    return (0,) * d


def lex_leq(x: Sequence[int], y: Sequence[int]) -> bool:
    """Lexicographic order, coordinates compared in index order."""
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return tuple(x) <= tuple(y)


def sup_dist(x: Site, y: Site) -> int:
    return max(abs(a - b) for a, b in zip(x, y))


def add(x: Site, y: Site) -> Site:
    return tuple(a + b for a, b in zip(x, y))


def sub(x: Site, y: Site) -> Site:
    return tuple(a - b for a, b in zip(x, y))


@dataclass(frozen=True)
class Box:
    """A finite set of sites of Z^d, kept in lexicographic order."""

    sites: tuple[Site, ...]
    d: int

    def __post_init__(self):
        sites = tuple(sorted({tuple(int(c) for c in s) for s in self.sites}))
        if any(len(s) != self.d for s in sites):
            raise ValueError("all sites must have dimension d")
        object.__setattr__(self, "sites", sites)

    @classmethod
    def of(cls, sites: Iterable[Sequence[int]], d: int | None = None) -> "Box":
        sites = [tuple(s) for s in sites]
        if d is None:
            if not sites:
                raise ValueError("cannot infer the dimension of an empty box")
            d = len(sites[0])
        return cls(tuple(sites), d)

    @cached_property
    def index(self) -> dict[Site, int]:
        return {s: i for i, s in enumerate(self.sites)}

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self.index

    def __or__(self, other: "Box") -> "Box":
        return Box(self.sites + other.sites, self.d)

    def __sub__(self, other: "Box") -> "Box":
        return Box(tuple(s for s in self.sites if s not in other), self.d)

    def __and__(self, other: "Box") -> "Box":
        return Box(tuple(s for s in self.sites if s in other), self.d)

    def issubset(self, other: "Box") -> bool:
        return all(s in other for s in self.sites)

    def shift(self, x: Site) -> "Box":
        return Box(tuple(add(s, x) for s in self.sites), self.d)

    @property
    def radius(self) -> int:
        """Smallest n with the box inside cube(n, d)."""
        return max((max(abs(c) for c in s) for s in self.sites), default=0)

    @cached_property
    def is_cube(self) -> bool:
        return len(self) > 0 and self == cube(self.radius, self.d)

    def __repr__(self) -> str:
        if self.is_cube:
            return f"cube({self.radius}, {self.d})"
        return f"Box({list(self.sites)})"


def cube(n: int, d: int) -> Box:
    """The centred cube [-n, n]^d."""
    if n < 0 or d < 1:
        raise ValueError("cube needs n >= 0 and d >= 1")
    sites = itertools.product(range(-n, n + 1), repeat=d)
    return Box(tuple(sites), d)


def boundary_shell(box: Box, r: int) -> Box:
    """Sites outside `box` within sup-distance r of it."""
    if r < 0:
        raise ValueError("shell width must be nonnegative")
    if r == 0:
        return Box((), box.d)
    offsets = list(itertools.product(range(-r, r + 1), repeat=box.d))
    out = {add(s, o) for s in box.sites for o in offsets}
    return Box(tuple(y for y in out if y not in box), box.d)


def past(box: Box) -> Box:
    """Sites x of the box with x <= 0 lexicographically."""
    o = origin(box.d)
    return Box(tuple(s for s in box.sites if s <= o), box.d)


@dataclass(frozen=True)
class Config:
    """Assignment of one value per site of a box.

    Values are plain numbers for spin or disorder configurations and
    (spin, disorder) pairs for joint configurations.
    """

    box: Box
    values: tuple

    def __post_init__(self):
        values = tuple(self.values)
        if len(values) != len(self.box):
            raise ValueError(f"{len(values)} values for a box of {len(self.box)} sites")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, mapping: Mapping[Site, Any], d: int | None = None) -> "Config":
        box = Box.of(mapping.keys(), d)
        return cls(box, tuple(mapping[s] for s in box.sites))

    @classmethod
    def constant(cls, box: Box, value) -> "Config":
        return cls(box, (value,) * len(box))

    @classmethod
    def from_function(cls, box: Box, fn: Callable[[Site], Any]) -> "Config":
        return cls(box, tuple(fn(s) for s in box.sites))

    def __getitem__(self, site) -> Any:
        return self.values[self.box.index[tuple(site)]]

    def get(self, site, default=None):
        i = self.box.index.get(tuple(site))
        return default if i is None else self.values[i]

    def as_dict(self) -> dict[Site, Any]:
        return dict(zip(self.box.sites, self.values))

    def restrict(self, sub: Box) -> "Config":
        return Config(sub, tuple(self[s] for s in sub.sites))

    def merge(self, other: "Config") -> "Config":
        """Union of two configurations; `other` wins on overlapping sites."""
        m = self.as_dict()
        m.update(other.as_dict())
        return Config.from_mapping(m, self.box.d)

    def replace(self, updates: Mapping[Site, Any]) -> "Config":
        m = self.as_dict()
        for s, v in updates.items():
            if tuple(s) not in m:
                raise KeyError(f"site {s} not in box")
            m[tuple(s)] = v
        return Config(self.box, tuple(m[s] for s in self.box.sites))

    def array(self, dtype=float) -> np.ndarray:
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class LocalFunction:
    """A function of a configuration that depends only on `support`.

    `fn` receives an array of shape (..., len(support)) holding the values
    on the support sites (in support order) and returns an array of
    shape (...).
    """

    support: Box
    fn: Callable[[np.ndarray], np.ndarray] = field(compare=False)

    def __call__(self, config: Config | Mapping[Site, Any]) -> float:
        get = config.__getitem__
        vals = np.array([get(s) for s in self.support.sites], dtype=float)
        return float(self.fn(vals[None, :])[0])


def concat(sigma: Config, xi: Config) -> Config:
    """sigma on the lexicographic past (x <= 0), xi on the future."""
    if sigma.box != xi.box:
        raise ValueError("concat needs configurations on the same box")
    o = origin(sigma.box.d)
    vals = tuple(a if s <= o else b for s, a, b in zip(sigma.box.sites, sigma.values, xi.values))
    return Config(sigma.box, vals)


def plus_concat(sigma: Config, plus=1) -> Config:
    """The sigma^+ configuration: sigma on x <= 0, +1 elsewhere."""
    return concat(sigma, Config.constant(sigma.box, plus))


def translate(obj, x: Sequence[int]):
    """Shift action (tau_x w)(y) = w(x + y) on configs and local functions.

    A configuration on box B becomes one on B - x; a local function with
    support S becomes f o tau_x, supported on S + x.
    """
    x = tuple(x)
    if isinstance(obj, Config):
        neg = tuple(-c for c in x)
        return Config(obj.box.shift(neg), tuple(obj[add(s, x)] for s in obj.box.shift(neg).sites))
    if isinstance(obj, LocalFunction):
        shifted = obj.support.shift(x)
        order = [obj.support.index[sub(s, x)] for s in shifted.sites]
        inverse = np.argsort(order)
        fn = obj.fn
        return LocalFunction(shifted, lambda v: fn(v[..., inverse]))
    raise TypeError(f"cannot translate {type(obj).__name__}")
