import numpy as np
import pytest
from hypothesis import given, strategies as st

from gibbsium.lattice import (Box, Config, LocalFunction, boundary_shell, concat, cube, lex_leq, origin, past,
                              plus_concat, translate)

sites2 = st.tuples(st.integers(-4, 4), st.integers(-4, 4))


@given(st.integers(0, 5), st.integers(1, 3))
def test_cube_size(n, d):
    assert len(cube(n, d)) == (2 * n + 1) ** d


def test_cube_is_centred():
    assert cube(1, 1).sites == ((-1,), (0,), (1,))
    assert cube(1, 2).is_cube


@given(sites2, sites2)
def test_lex_total(x, y):
    if x == y:
        assert lex_leq(x, y) and lex_leq(y, x)
    else:
        assert lex_leq(x, y) != lex_leq(y, x)


@given(sites2, sites2, sites2)
def test_lex_transitive(x, y, z):
    if lex_leq(x, y) and lex_leq(y, z):
        assert lex_leq(x, z)


def test_boundary_shell():
    assert boundary_shell(cube(1, 1), 1).sites == ((-2,), (2,))
    assert boundary_shell(cube(1, 1), 2).sites == ((-3,), (-2,), (2,), (3,))
    assert len(boundary_shell(cube(1, 2), 1)) == 16
    assert len(boundary_shell(cube(1, 1), 0)) == 0


def test_past_keeps_origin():
    assert past(cube(1, 1)).sites == ((-1,), (0,))
    assert past(cube(1, 2)).sites == ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 0))


def test_concat_examples():
    b = cube(1, 1)
    minus = Config.constant(b, -1)
    plus = Config.constant(b, 1)
    assert concat(minus, minus) == minus
    assert concat(minus, plus).values == (-1, -1, 1)
    assert plus_concat(minus).values == (-1, -1, 1)


@given(st.lists(st.sampled_from([-1, 1]), min_size=9, max_size=9),
       st.lists(st.sampled_from([-1, 1]), min_size=9, max_size=9))
def test_concat_split(a, b):
    box = cube(1, 2)
    s, x = Config(box, a), Config(box, b)
    c = concat(s, x)
    for site in box:
        assert c[site] == (s[site] if lex_leq(site, origin(2)) else x[site])


def test_translate_examples():
    w = Config(cube(1, 1), ("a", "b", "c"))
    assert translate(w, (0,)) == w
    assert translate(w, (1,))[(0,)] == "c"


@given(st.integers(-3, 3), st.integers(-3, 3))
def test_translate_group_law(x, y):
    w = Config(cube(2, 1), tuple(range(5)))
    assert translate(translate(w, (x,)), (y,)) == translate(w, (x + y,))


def test_translate_local_function():
    f = LocalFunction(Box(((0,), (1,)), 1), lambda v: v[..., 0] - 2 * v[..., 1])
    g = translate(f, (3,))
    cfg = Config.from_mapping({(3,): 5, (4,): 1})
    assert g(cfg) == f(Config.from_mapping({(0,): 5, (1,): 1}))


def test_config_merge_and_restrict():
    a = Config(cube(1, 1), (1, 2, 3))
    b = Config(Box(((1,), (2,)), 1), (9, 9))
    m = a.merge(b)
    assert m.values == (1, 2, 9, 9)
    assert m.restrict(Box(((0,),), 1)).values == (2,)
    with pytest.raises(ValueError):
        Config(cube(1, 1), (1, 2))


def test_box_set_ops():
    a, b = cube(1, 1), Box(((1,), (2,)), 1)
    assert (a | b).sites == ((-1,), (0,), (1,), (2,))
    assert (a - b).sites == ((-1,), (0,))
    assert (a & b).sites == ((1,),)
    assert np.array_equal(Config(a, (1, -1, 1)).array(), [1.0, -1.0, 1.0])
