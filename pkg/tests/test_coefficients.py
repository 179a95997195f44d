import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kacwild.coefficients import (alpha_p, alpha_p_closed_form, coefficients, lemma1_bound,
                                  sample_angles)
from kacwild.errors import ArgumentError, DomainError
from kacwild.trees import McKeanTree, enumerate_trees, leaf_depths, sample_tree

FIG1A = "IIILLLIIILLLILL"


def test_single_leaf():
    pis = coefficients(McKeanTree.from_code("L"), [])
    assert pis.coefficients.tolist() == [1.0]
    assert pis.max_abs == 1.0


def test_cherry():
    th = 0.7
    pis = coefficients(McKeanTree.from_code("ILL"), [th])
    assert pis.coefficients.tolist() == [math.cos(th), math.sin(th)]


def test_length_mismatch():
    with pytest.raises(ArgumentError):
        coefficients(McKeanTree.from_code("ILL"), [0.1, 0.2])


def test_fig1a_products():
    tree = McKeanTree.from_code(FIG1A)
    rng = np.random.default_rng(0)
    th = rng.uniform(0, 2 * math.pi, 7)  # th[k - 1] labels internal node k, level order
    pis = coefficients(tree, th, order="level").coefficients
    c, s = np.cos(th), np.sin(th)
    assert pis[0] == pytest.approx(c[3] * c[1] * c[0], abs=1e-15)
    assert pis[5] == pytest.approx(s[4] * c[2] * s[0], abs=1e-15)


def test_zero_angles():
    for tree in enumerate_trees(6):
        pis = coefficients(tree, np.zeros(tree.n_internal)).coefficients
        assert pis[0] == 1.0
        assert np.all(pis[1:] == 0.0)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10_000), st.integers(0, 2**32 - 1))
def test_energy_identity(n, seed):
    rng = np.random.default_rng(seed)
    tree = sample_tree(n, rng)
    pis = coefficients(tree, sample_angles(tree.n_internal, rng))
    assert abs(pis.energy - 1.0) < 1e-10
    assert np.all(np.abs(pis.coefficients) <= 1.0)
    assert 0 < pis.max_abs <= 1


def test_order_is_a_relabelling():
    tree = McKeanTree.from_code(FIG1A)
    th = np.linspace(0.1, 2.0, 7)
    perm = tree.internal_order("level")
    a = coefficients(tree, th, order="level").coefficients
    b = coefficients(tree, th[perm - 1]).coefficients
    assert np.array_equal(a, b)


@pytest.mark.parametrize("p,expected", [(2, 0.5), (4, 0.375), (3, 4 / (3 * math.pi)), (1, 2 / math.pi)])
def test_alpha_values(p, expected):
    assert alpha_p(p) == pytest.approx(expected, abs=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 40.0))
def test_alpha_quadrature_vs_closed_form(p):
    assert abs(alpha_p(p) - alpha_p_closed_form(p)) < 1e-10


def test_alpha_domain():
    with pytest.raises(DomainError):
        alpha_p(0.0)


def test_lemma1_examples():
    assert lemma1_bound(1 - 1e-12, 3, 0) == pytest.approx(1.0, abs=1e-10)
    expected = 0.9 ** -3 * math.exp(-10 * (1 - 8 / (3 * math.pi)))
    assert lemma1_bound(0.9, 3, 10) == pytest.approx(expected, rel=1e-12)
    # quoted as "about 0.302"; the value is 0.30251
    assert lemma1_bound(0.9, 3, 10) == pytest.approx(0.30251, abs=1e-5)
    assert lemma1_bound(0.5, 3, 200) < 1e-10


def test_lemma1_monotone():
    ts = np.linspace(0, 10, 21)
    vals = [lemma1_bound(0.5, 3, t) for t in ts]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    xs = np.linspace(0.1, 0.95, 18)
    vals = [lemma1_bound(x, 3, 2) for x in xs]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("args", [(0.5, 2.0, 1.0), (0.0, 3, 1), (1.0, 3, 1), (0.5, 3, -1)])
def test_lemma1_domain(args):
    with pytest.raises(DomainError):
        lemma1_bound(*args)


def test_alpha_depth_chain(rng):
    # E sum_j alpha_p^depth_j at fixed n, over trees and angles, via E|pi_j|^p
    from kacwild.trees import depth_moment_exact

    p, n, size = 3.0, 12, 20_000
    vals = np.empty(size)
    for i in range(size):
        tree = sample_tree(n, rng)
        vals[i] = np.sum(np.abs(coefficients(tree, sample_angles(n - 1, rng)).coefficients) ** p)
    exact = depth_moment_exact(alpha_p(p), n)
    assert abs(vals.mean() - exact) < 3 * vals.std(ddof=1) / math.sqrt(size)


def test_path_factor_independence(rng):
    # E[|pi_j|^p | tree] = alpha_p^depth_j
    p = 3.0
    tree = McKeanTree.from_code(FIG1A)
    depths = leaf_depths(tree).depths
    size = 100_000
    th = rng.uniform(0, 2 * math.pi, (size, tree.n_internal))
    from kacwild._kernels import coefficients_rows

    pis = np.abs(coefficients_rows(tree.flags, th)) ** p
    se = pis.std(axis=0, ddof=1) / math.sqrt(size)
    assert np.all(np.abs(pis.mean(axis=0) - alpha_p(p) ** depths) < 3 * se)
