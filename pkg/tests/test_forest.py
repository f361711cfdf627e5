"""Tree canonicalization, root maps, contraction, weights, enumeration."""

from __future__ import annotations

import random

import pytest

from ktforest.forest import (AlgebraElement, TreeShape, absorb_O_decorations,
                             canonicalize, canonicalize_node, contract_vertex,
                             enumerate_tree_basis, inner_vertex_count, inner_vertex_paths,
                             koszul_sign, leaf, leaf_count, leaf_paths, make_monomial,
                             mono_degree, root_join, root_split, subtree_at, tree_degree,
                             tree_key, tree_str, vertex_weight)
from ktforest.poly import Poly
from ktforest.resolution import GeneratorId


def gens_of(res, depth):
    return res.generators(depth)


def test_koszul_sign_odd_odd_swap():
    assert koszul_sign([-1, -1], [1, 0]) == -1


def test_koszul_sign_odd_even_swap():
    assert koszul_sign([-1, -2], [1, 0]) == 1


def test_koszul_sign_subtree_blocks():
    # swapping blocks of degrees |a1|+|a2|+1 and |a3|+|a4|+1
    for d1 in (-3, -4, -5):
        for d2 in (-3, -4, -5):
            assert koszul_sign([d1, d2], [1, 0]) == (-1) ** (d1 * d2)


def test_canonicalize_swaps_odd_pair(quadratic_resolution):
    pi1, pi2, _ = gens_of(quadratic_resolution, 1)
    node, sign = canonicalize_node(("N", (leaf(pi2), leaf(pi1))))
    assert node == ("N", (leaf(pi1), leaf(pi2)))
    assert sign == -1


def test_canonicalize_kills_odd_square(quadratic_resolution):
    pi1 = gens_of(quadratic_resolution, 1)[0]
    node, sign = canonicalize_node(("N", (leaf(pi1), leaf(pi1))))
    assert node is None and sign == 0


def test_canonicalize_idempotent(quadratic_resolution):
    pi1, pi2, pi3 = gens_of(quadratic_resolution, 1)
    node, sign = canonicalize_node(("N", (("N", (leaf(pi1), leaf(pi2))), leaf(pi3))))
    again, sign2 = canonicalize_node(node)
    assert again == node and sign2 == 1


def test_even_square_survives(quadratic_resolution):
    pi = gens_of(quadratic_resolution, 2)[0]
    node, sign = canonicalize_node(("N", (leaf(pi), leaf(pi))))
    assert node is not None and sign == 1


def test_tree_shape_api(quadratic_resolution):
    pi1, pi2, pi3 = gens_of(quadratic_resolution, 1)
    shape = TreeShape(((None, None), None))
    node, sign = canonicalize(shape, [pi1, pi2, pi3])
    assert sign in (1, -1) and leaf_count(node) == 3
    with pytest.raises(Exception):
        TreeShape(((None,), None))  # single-child inner vertex


def test_degree_bookkeeping(quadratic_resolution):
    pi1, pi2, _ = gens_of(quadratic_resolution, 1)
    pi = gens_of(quadratic_resolution, 2)[0]
    corolla = ("N", (leaf(pi1), leaf(pi2)))
    assert tree_degree(corolla) == -3
    nested = ("N", (corolla, leaf(pi)))
    assert tree_degree(nested) == -6
    assert inner_vertex_count(nested) == 1
    assert tree_degree(leaf(pi)) == -2


def test_root_join_two_trivial(quadratic_resolution):
    ring = quadratic_resolution.ring
    pi1, pi2, _ = gens_of(quadratic_resolution, 1)
    prod, _ = make_monomial([("t", leaf(pi1)), ("t", leaf(pi2))])
    joined = root_join(AlgebraElement(ring, {prod: Poly.const(ring, 1)}))
    [(mono, coeff)] = list(joined.terms.items())
    assert mono[0][0] == ("N", (leaf(pi1), leaf(pi2)))
    assert coeff == Poly.const(ring, 1)


def test_root_split_inverts_join(quadratic_resolution):
    ring = quadratic_resolution.ring
    rng = random.Random(7)
    trees = []
    for d in range(1, 6):
        trees.extend(enumerate_tree_basis(quadratic_resolution, d))
    for _ in range(200):
        picks = [rng.choice(trees) for _ in range(rng.randint(2, 3))]
        mono, sign = make_monomial([("t", t) for t in picks])
        if mono is None:
            continue
        x = AlgebraElement(ring, {mono: Poly.const(ring, sign)})
        assert root_split(root_join(x)) == x


def test_join_split_on_trees(quadratic_resolution):
    ring = quadratic_resolution.ring
    for d in range(3, 7):
        for node in enumerate_tree_basis(quadratic_resolution, d):
            if node[0] == "L":
                continue
            x = AlgebraElement.from_tree(ring, node)
            assert root_join(root_split(x)) == x


def test_contract_decreases_inner_count(quadratic_resolution):
    pi1, pi2, pi3 = gens_of(quadratic_resolution, 1)
    nested = ("N", (("N", (leaf(pi1), leaf(pi2))), leaf(pi3)))
    node, _sign = canonicalize_node(nested)
    paths = inner_vertex_paths(node)
    assert len(paths) == 1
    contracted, sign = contract_vertex(node, paths[0])
    assert inner_vertex_count(contracted) == 0
    assert leaf_count(contracted) == 3
    assert sign in (1, -1)


def test_weights_on_displayed_tree(monomial3_resolution):
    # corolla with children a1, a2 and an inner vertex carrying a3, a4, a5
    e1, e2, e3, e4 = gens_of(monomial3_resolution, 1)
    e13 = gens_of(monomial3_resolution, 2)[0]
    inner = ("N", (leaf(e3), leaf(e4), leaf(e13)))
    tree = ("N", (leaf(e1), leaf(e2), inner))
    assert vertex_weight(tree, ()) == 0
    assert vertex_weight(tree, (0,)) == -1  # first leaf
    assert vertex_weight(tree, (2,)) == -1 + (-1) + (-1)  # the inner vertex
    # a leaf inside the inner vertex, with one left sibling there
    assert vertex_weight(tree, (2, 1)) == -2 + (-1) + (-1) + (-1)


def test_enumerate_basis_low_degrees(quadratic_resolution):
    basis1 = enumerate_tree_basis(quadratic_resolution, 1)
    assert [tree_str(t) for t in basis1] == ["pi1", "pi2", "pi3"]
    basis2 = enumerate_tree_basis(quadratic_resolution, 2)
    assert [tree_str(t) for t in basis2] == ["pi", "pib"]
    basis3 = enumerate_tree_basis(quadratic_resolution, 3)
    assert sorted(tree_str(t) for t in basis3) == [
        "V(pi1,pi2)", "V(pi1,pi3)", "V(pi2,pi3)"]


def test_enumerate_basis_distinct_and_stable(quadratic_resolution):
    for d in range(1, 7):
        basis = enumerate_tree_basis(quadratic_resolution, d)
        assert len(set(basis)) == len(basis)
        for t in basis:
            assert tree_degree(t) == -d
            node, sign = canonicalize_node(t)
            assert node == t and sign == 1
    # second run returns the identical tuple
    assert enumerate_tree_basis(quadratic_resolution, 5) is enumerate_tree_basis(
        quadratic_resolution, 5)


def test_rank_one_module_has_no_corollas(ring_xy):
    from conftest import make_resolution

    res = make_resolution(ring_xy, [["e"]], {}, {"e": "x^2 + y^2"})
    assert enumerate_tree_basis(res, 3) == ()
    assert enumerate_tree_basis(res, 4) == ()


def test_join_degree_identity(quadratic_resolution):
    ring = quadratic_resolution.ring
    rng = random.Random(11)
    trees = []
    for d in range(1, 5):
        trees.extend(enumerate_tree_basis(quadratic_resolution, d))
    for _ in range(100):
        picks = [rng.choice(trees) for _ in range(rng.randint(2, 4))]
        mono, sign = make_monomial([("t", t) for t in picks])
        if mono is None:
            continue
        x = AlgebraElement(ring, {mono: Poly.const(ring, sign)})
        joined = root_join(x)
        if joined.is_zero():
            continue
        [(jmono, _)] = list(joined.terms.items())
        assert mono_degree(jmono) == sum(tree_degree(t) for t in picks) - 1


def test_absorb_scalar_decoration_two_leaves(quadratic_resolution):
    # on a 2-leaf tree the scalar branch deletes into an inadmissible shape
    ring = quadratic_resolution.ring
    pi1, pi2, _ = gens_of(quadratic_resolution, 1)
    node, _ = canonicalize_node(("N", (leaf(pi1), leaf(pi2))))
    f = Poly.parse("x", ring)
    out = absorb_O_decorations(ring, node, (0,), f)
    assert out == AlgebraElement.from_tree(ring, node)


def test_absorb_zero_scalar_is_identity(quadratic_resolution):
    ring = quadratic_resolution.ring
    pi1, pi2, pi3 = gens_of(quadratic_resolution, 1)
    node, _ = canonicalize_node(("N", (leaf(pi1), leaf(pi2), leaf(pi3))))
    out = absorb_O_decorations(ring, node, (1,), Poly.zero(ring))
    assert out == AlgebraElement.from_tree(ring, node)


def test_absorb_on_trivial_tree_gives_scalar(quadratic_resolution):
    ring = quadratic_resolution.ring
    pi1 = gens_of(quadratic_resolution, 1)[0]
    f = Poly.parse("x*y", ring)
    out = absorb_O_decorations(ring, leaf(pi1), (), f)
    assert out == AlgebraElement.from_tree(ring, leaf(pi1)) + AlgebraElement.scalar(f)


def test_absorb_three_leaves_keeps_admissible_deletion(quadratic_resolution):
    ring = quadratic_resolution.ring
    pi1, pi2, pi3 = gens_of(quadratic_resolution, 1)
    node, _ = canonicalize_node(("N", (leaf(pi1), leaf(pi2), leaf(pi3))))
    f = Poly.parse("y", ring)
    out = absorb_O_decorations(ring, node, (0,), f)
    reduced, _ = canonicalize_node(("N", (leaf(pi2), leaf(pi3))))
    expected = AlgebraElement.from_tree(ring, node) \
        + AlgebraElement.from_tree(ring, reduced, f)
    assert out == expected


def test_sign_coherence_under_child_permutations(quadratic_resolution):
    rng = random.Random(23)
    trees = []
    for d in range(3, 7):
        trees.extend(t for t in enumerate_tree_basis(quadratic_resolution, d)
                     if t[0] == "N")
    for _ in range(400):
        node = rng.choice(trees)
        kids = list(node[1])
        perm = list(range(len(kids)))
        rng.shuffle(perm)
        shuffled = ("N", tuple(kids[i] for i in perm))
        expected_sign = koszul_sign([tree_degree(k) for k in kids], perm)
        out, sign = canonicalize_node(shuffled)
        assert out == node
        assert sign == expected_sign


def test_root_join_five_leaf_display(monomial3_resolution):
    # joining a 2-leaf and a 3-leaf tree grafts both under a fresh root
    res = monomial3_resolution
    ring = res.ring
    e1, e2, e3, e4 = gens_of(res, 1)
    t2, _ = canonicalize_node(("N", (leaf(e1), leaf(e2))))
    t3, _ = canonicalize_node(("N", (leaf(e2), leaf(e3), leaf(e4))))
    mono, sign = make_monomial([("t", t2), ("t", t3)])
    joined = root_join(AlgebraElement(ring, {mono: Poly.const(ring, sign)}))
    [(jmono, coeff)] = list(joined.terms.items())
    [jtree] = jmono[0]
    assert leaf_count(jtree) == 5
    assert inner_vertex_count(jtree) == 2
    assert set(jtree[1]) == {t2, t3}
