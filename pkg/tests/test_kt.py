"""The tree differential, hook solving, square-zero and retract checks."""

from __future__ import annotations

import random

import pytest

from ktforest.forest import (AlgebraElement, canonicalize_node, enumerate_tree_basis,
                             leaf, make_monomial, parity_sign, root_split, tree_degree,
                             tree_str, vertex_weight)
from ktforest.kt import (HookMap, TreeDifferential, hook_product, solve_hook,
                         tree_basis_elements, verify_hook, verify_hook_product_leibniz,
                         verify_retract, verify_square_zero)
from ktforest.poly import Poly
from ktforest.resolution import ModuleElement


def elem(res, node, coeff=None):
    return AlgebraElement.from_tree(res.ring, node, coeff)


def module(res, text_terms):
    ring = res.ring
    return ModuleElement(ring, {
        res.gen_by_label(label): Poly.parse(text, ring) for label, text in text_terms.items()})


@pytest.fixture(scope="module")
def regular_hook(regular_resolution):
    return solve_hook(regular_resolution, 6)


@pytest.fixture(scope="module")
def quadratic_hook(quadratic_resolution):
    return solve_hook(quadratic_resolution, 6)


def corolla(res, *labels):
    node, sign = canonicalize_node(
        ("N", tuple(leaf(res.gen_by_label(l)) for l in labels)))
    assert sign == 1
    return node


# -- solving ------------------------------------------------------------------

def test_regular_hook_is_unique_value(regular_resolution, regular_hook):
    res = regular_resolution
    t = corolla(res, "pi1", "pi2")
    assert regular_hook.value(t) == module(res, {"pi": "1"})
    # and nothing else anywhere in the truncation
    assert list(regular_hook.table) == [t]


def test_quadratic_solver_hook_verifies(quadratic_resolution, quadratic_hook):
    report = verify_hook(quadratic_resolution, quadratic_hook, 6)
    assert report.passed, report.summary()


def test_quadratic_worked_hook_table_verifies(quadratic_resolution):
    res = quadratic_resolution
    table = {
        corolla(res, "pi1", "pi2"): module(res, {"pi": "x"}),
        corolla(res, "pi2", "pi3"): module(res, {"pib": "y"}),
        corolla(res, "pi1", "pi3"): module(res, {"pi": "y", "pib": "x"}),
    }
    hook = HookMap(res, table, 6)
    report = verify_hook(res, hook, 6)
    assert report.passed, report.summary()


def test_quadratic_corrupted_hook_fails(quadratic_resolution):
    res = quadratic_resolution
    table = {
        corolla(res, "pi2", "pi3"): module(res, {"pib": "y"}),
        corolla(res, "pi1", "pi3"): module(res, {"pi": "y", "pib": "x"}),
    }
    hook = HookMap(res, table, 6)  # the x*pi entry is dropped
    report = verify_hook(res, hook, 6)
    assert not report.passed
    assert any("V(pi1,pi2)" in item for item, _ in report.failures)


def test_rank_one_module_empty_hook(ring_xy):
    from conftest import make_resolution

    res = make_resolution(ring_xy, [["e"]], {}, {"e": "x^2 + y^2"})
    hook = solve_hook(res, 6)
    assert not hook.table
    differential = TreeDifferential(res, hook)
    basis = tree_basis_elements(res, 6)
    assert verify_square_zero(differential.apply, basis).passed


# -- the differential on fixtures ------------------------------------------------

def test_initial_condition_is_resolution_differential(quadratic_resolution, quadratic_hook):
    res = quadratic_resolution
    differential = TreeDifferential(res, quadratic_hook)
    pi = res.gen_by_label("pi")
    out = differential.apply(elem(res, leaf(pi)))
    assert out == AlgebraElement.from_module_element(module(res, {"pi2": "x", "pi1": "-y"}))


def test_two_leaf_expansion(quadratic_resolution, quadratic_hook):
    # corolla on two degree -1 decorations: the product minus the hook value
    res = quadratic_resolution
    differential = TreeDifferential(res, quadratic_hook)
    t = corolla(res, "pi1", "pi2")
    prod, _ = make_monomial([("t", leaf(res.gen_by_label("pi1"))),
                             ("t", leaf(res.gen_by_label("pi2")))])
    expected = AlgebraElement(res.ring, {prod: Poly.const(res.ring, 1)}) \
        - AlgebraElement.from_module_element(quadratic_hook.value(t))
    assert differential.on_tree(t) == expected


def test_three_leaf_expansion_regular(regular_resolution, regular_hook):
    # the nested three-leaf tree over the regular-sequence resolution:
    # split + contraction + the module-valued leaf term + the hooked sibling
    res = regular_resolution
    ring = res.ring
    differential = TreeDifferential(res, regular_hook)
    pi1, pi2, pi = (res.gen_by_label(l) for l in ("pi1", "pi2", "pi"))
    inner = corolla(res, "pi1", "pi2")
    t, sign = canonicalize_node(("N", (inner, leaf(pi))))
    out = differential.on_tree(t).scale(sign)

    split, _ = make_monomial([("t", inner), ("t", leaf(pi))])
    expected = AlgebraElement(ring, {split: Poly.const(ring, 1)})
    expected = expected - elem(res, corolla(res, "pi1", "pi2", "pi"))
    # d(pi) = x^2*pi2 - y^2*pi1 substituted at the third leaf, weight sign +1
    n1, s1 = canonicalize_node(("N", (inner, leaf(pi2))))
    n2, s2 = canonicalize_node(("N", (inner, leaf(pi1))))
    expected = expected + elem(res, n1, Poly.parse("x^2", ring).scale(s1))
    expected = expected - elem(res, n2, Poly.parse("y^2", ring).scale(s2))
    # hook substitution at the inner vertex: V(pi, pi) survives (even degree)
    expected = expected + elem(res, corolla(res, "pi", "pi"))
    assert out == expected


def test_normative_sign_template(quadratic_resolution, quadratic_hook):
    """Template expansion of the nested 3-leaf tree, built from primitives.

    delta(V(V(a,b),c)) = V(a,b) . c - V(a,b,c) + V(V(da,b),c)
      + (-1)^|a| V(V(a,db),c) + (-1)^(|a|+|b|) V(V(a,b),dc)
      + V(hook(V(a,b)), c) - hook(V(V(a,b),c)),
    with scalar-valued d-terms deleted by the decoration convention.
    """
    res = quadratic_resolution
    ring = res.ring
    differential = TreeDifferential(res, quadratic_hook)
    a, b, c = (res.gen_by_label(l) for l in ("pi", "pib", "pi3"))

    inner = ("N", (leaf(a), leaf(b)))
    raw = ("N", (inner, leaf(c)))
    node, sign = canonicalize_node(raw)
    engine = differential.on_tree(node).scale(sign)

    def sub_tree(outer_children, position, value):
        # rebuild with the decoration at `position` replaced by each module term
        out = AlgebraElement.zero(ring)
        for g, p in value.terms.items():
            kids = list(outer_children)
            kids[position] = leaf(g)
            rebuilt = ("N", (("N", tuple(kids[:2])), kids[2]))
            nn, s = canonicalize_node(rebuilt)
            if nn is not None:
                out = out + elem(res, nn, p.scale(s))
        return out

    da = res.diff[a]
    db = res.diff[b]
    dc_scalar = res.augment[c]

    split, s_split = make_monomial([("t", inner), ("t", leaf(c))])
    template = AlgebraElement(ring, {split: Poly.const(ring, s_split)})
    flat, s_flat = canonicalize_node(("N", (leaf(a), leaf(b), leaf(c))))
    template = template - elem(res, flat, Poly.const(ring, s_flat))
    template = template + sub_tree([leaf(a), leaf(b), leaf(c)], 0, da)
    template = template + sub_tree([leaf(a), leaf(b), leaf(c)], 1, db).scale(
        parity_sign(a.module_degree))
    # dc lands in the base ring: the term dies with the two-child root rule
    hook_ab = quadratic_hook.value(canonicalize_node(inner)[0])
    out_hook = AlgebraElement.zero(ring)
    for g, p in hook_ab.terms.items():
        nn, s = canonicalize_node(("N", (leaf(g), leaf(c))))
        if nn is not None:
            out_hook = out_hook + elem(res, nn, p.scale(s))
    template = template + out_hook
    template = template - AlgebraElement.from_module_element(
        quadratic_hook.value(node)).scale(sign)

    assert engine == template


# -- global identities -------------------------------------------------------------

def test_square_zero_quadratic_through_degree6(quadratic_resolution, quadratic_hook):
    differential = TreeDifferential(quadratic_resolution, quadratic_hook)
    basis = tree_basis_elements(quadratic_resolution, 6)
    report = verify_square_zero(differential.apply, basis,
                                checked="trees through negative degree 6")
    assert report.passed, report.summary()


def test_square_zero_regular_through_degree6(regular_resolution, regular_hook):
    differential = TreeDifferential(regular_resolution, regular_hook)
    basis = tree_basis_elements(regular_resolution, 6)
    report = verify_square_zero(differential.apply, basis)
    assert report.passed, report.summary()


def test_square_zero_monomial3(monomial3_resolution):
    hook = solve_hook(monomial3_resolution, 5)
    differential = TreeDifferential(monomial3_resolution, hook)
    basis = tree_basis_elements(monomial3_resolution, 5)
    report = verify_square_zero(differential.apply, basis)
    assert report.passed, report.summary()


def test_retract_identity_quadratic(quadratic_resolution, quadratic_hook):
    report = verify_retract(quadratic_resolution, quadratic_hook, 6)
    assert report.passed, report.summary()


def test_retract_identity_regular(regular_resolution, regular_hook):
    report = verify_retract(regular_resolution, regular_hook, 6)
    assert report.passed, report.summary()


def test_leibniz_rule_randomized(quadratic_resolution, quadratic_hook):
    res = quadratic_resolution
    ring = res.ring
    differential = TreeDifferential(res, quadratic_hook)
    rng = random.Random(31)
    trees = []
    for d in range(1, 5):
        trees.extend(enumerate_tree_basis(res, d))

    def random_element():
        out = AlgebraElement.zero(ring)
        for _ in range(rng.randint(1, 3)):
            picks = [rng.choice(trees) for _ in range(rng.randint(1, 2))]
            mono, sign = make_monomial([("t", t) for t in picks])
            if mono is None:
                continue
            coeff = Poly.monomial(ring, (rng.randint(0, 2), rng.randint(0, 2)),
                                  rng.randint(-3, 3))
            out = out + AlgebraElement(ring, {mono: coeff.scale(sign)})
        return out

    from ktforest.forest import mono_degree

    for _ in range(150):
        a, b = random_element(), random_element()
        if not a.terms or not b.terms:
            continue
        # restrict a to one monomial so its homogeneous degree fixes the sign
        mono_a = next(iter(sorted(a.terms, key=str)))
        a = AlgebraElement(ring, {mono_a: a.terms[mono_a]})
        sign = parity_sign(mono_degree(mono_a))
        lhs = differential.apply(a * b)
        rhs = differential.apply(a) * b + a.scale(sign) * differential.apply(b)
        assert lhs == rhs


def test_hook_product_values(quadratic_resolution, quadratic_hook):
    res = quadratic_resolution
    a = module(res, {"pi1": "1"})
    b = module(res, {"pi2": "1"})
    assert hook_product(quadratic_hook, a, b) == module(res, {"pi": "x"})


def test_hook_product_leibniz(quadratic_resolution, quadratic_hook):
    report = verify_hook_product_leibniz(quadratic_resolution, quadratic_hook)
    assert report.passed, report.summary()


def test_hook_product_leibniz_monomial3(monomial3_resolution):
    hook = solve_hook(monomial3_resolution, 5)
    report = verify_hook_product_leibniz(monomial3_resolution, hook)
    assert report.passed, report.summary()


def test_thread_count_determinism(quadratic_resolution):
    h1 = solve_hook(quadratic_resolution, 6, threads=1)
    h4 = solve_hook(quadratic_resolution, 6, threads=4)
    assert h1.lines() == h4.lines()


def test_corrupted_hook_breaks_square_zero(quadratic_resolution):
    # dropping the x*pi value leaves a nonzero square residue
    res = quadratic_resolution
    table = {
        corolla(res, "pi2", "pi3"): module(res, {"pib": "y"}),
        corolla(res, "pi1", "pi3"): module(res, {"pi": "y", "pib": "x"}),
    }
    hook = HookMap(res, table, 6)
    differential = TreeDifferential(res, hook)
    basis = tree_basis_elements(res, 4)
    report = verify_square_zero(differential.apply, basis)
    assert not report.passed
    assert any("V(pi1,pi2)" in item for item, _ in report.failures)


def test_differential_raises_degree_by_one(quadratic_resolution, quadratic_hook):
    from ktforest.forest import mono_degree

    differential = TreeDifferential(quadratic_resolution, quadratic_hook)
    for x in tree_basis_elements(quadratic_resolution, 5):
        [(mono, _)] = list(x.terms.items())
        image = differential.apply(x)
        degrees = {mono_degree(m) for m in image.terms}
        assert degrees <= {mono_degree(mono) + 1}
