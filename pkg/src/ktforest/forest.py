"""Decorated rooted trees and the graded symmetric algebra they generate.

Trees are nested tuples: a leaf is ('L', gen) and an inner node is
('N', (child, ...)).  The trivial tree is a bare leaf.  Admissible shapes
have at least two children at the root and at every inner vertex.  Leaf
decorations are resolution generators; polynomial coefficients and positive
generators live outside the tree, on the enclosing monomial.

Every stored tree is canonical: children at each vertex are sorted by
(leaf count, shape string, decoration tuple), with the Koszul sign of the
sorting permutation absorbed into the coefficient.  A tree with two equal
adjacent siblings of odd degree is the zero element and is never stored.

`AlgebraElement` models the graded symmetric algebra on trees tensored with
a symmetric algebra on positive generators.  A monomial is a pair
(tree factors, positive factors), each tuple in canonical order; products
and reorderings carry Koszul signs computed from homogeneous degrees.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .poly import Poly, RingSpec
from .resolution import FreeResolution, GeneratorId, ModuleElement

Node = tuple  # ('L', GeneratorId) | ('N', (Node, ...))
Monomial = tuple  # (trees: tuple[Node, ...], pos: tuple[GeneratorId, ...])


def parity_sign(n: int) -> int:
    """(-1)**n computed by parity, safe for negative integers."""
    return -1 if n % 2 else 1


def leaf(gen: GeneratorId) -> Node:
    return ("L", gen)


def is_leaf(node: Node) -> bool:
    return node[0] == "L"


@lru_cache(maxsize=None)
def tree_degree(node: Node) -> int:
    """Homological degree: each vertex contributes -1, leaves their degree."""
    if node[0] == "L":
        return node[1].module_degree
    return -1 + sum(tree_degree(c) for c in node[1])


@lru_cache(maxsize=None)
def leaf_count(node: Node) -> int:
    if node[0] == "L":
        return 1
    return sum(leaf_count(c) for c in node[1])


@lru_cache(maxsize=None)
def inner_vertex_count(node: Node) -> int:
    if node[0] == "L":
        return 0
    return sum(inner_vertex_count(c) + (0 if is_leaf(c) else 1) for c in node[1])


@lru_cache(maxsize=None)
def shape_str(node: Node) -> str:
    if node[0] == "L":
        return "*"
    return "(" + "".join(shape_str(c) for c in node[1]) + ")"


@lru_cache(maxsize=None)
def decorations(node: Node) -> tuple:
    if node[0] == "L":
        return (node[1],)
    out = ()
    for c in node[1]:
        out += decorations(c)
    return out


@lru_cache(maxsize=None)
def tree_key(node: Node):
    """Canonical comparison key for subtrees and tree factors."""
    return (leaf_count(node), shape_str(node), tuple(g.key for g in decorations(node)))


def tree_str(node: Node) -> str:
    if node[0] == "L":
        return node[1].label
    return "V(" + ",".join(tree_str(c) for c in node[1]) + ")"


def is_admissible(node: Node) -> bool:
    if node[0] == "L":
        return True
    if len(node[1]) < 2:
        return False
    return all(is_admissible(c) for c in node[1])


class TreeError(ValueError):
    pass


def koszul_sign(degrees: Sequence[int], permutation: Sequence[int]) -> int:
    """Sign with x_{perm(0)} ... x_{perm(k-1)} = sign * x_0 ... x_{k-1}."""
    perm = list(permutation)
    if sorted(perm) != list(range(len(degrees))):
        raise ValueError("not a permutation of the index set")
    sign = 1
    for i in range(len(perm)):
        for j in range(len(perm) - 1 - i):
            if perm[j] > perm[j + 1]:
                sign *= parity_sign(degrees[perm[j]] * degrees[perm[j + 1]])
                perm[j], perm[j + 1] = perm[j + 1], perm[j]
    return sign


def _sort_factors_with_sign(items: list) -> Tuple[Optional[list], int]:
    """Bubble-sort (key, degree, payload) triples, tracking Koszul signs.

    Returns (sorted items, sign), or (None, 0) when two equal factors of odd
    degree collide.
    """
    items = list(items)
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j][0] > items[j + 1][0]:
                sign *= parity_sign(items[j][1] * items[j + 1][1])
                items[j], items[j + 1] = items[j + 1], items[j]
    for a, b in zip(items, items[1:]):
        if a[0] == b[0] and a[1] % 2 != 0:
            return None, 0
    return items, sign


@lru_cache(maxsize=None)
def canonicalize_node(node: Node) -> Tuple[Optional[Node], int]:
    """Canonical representative and Koszul sign, or (None, 0) for zero."""
    if node[0] == "L":
        return node, 1
    if len(node[1]) < 2:
        raise TreeError(f"vertex with {len(node[1])} child(ren) is inadmissible")
    sign = 1
    kids = []
    for c in node[1]:
        cc, s = canonicalize_node(c)
        if cc is None:
            return None, 0
        sign *= s
        kids.append((tree_key(cc), tree_degree(cc), cc))
    kids, s = _sort_factors_with_sign(kids)
    if kids is None:
        return None, 0
    return ("N", tuple(k[2] for k in kids)), sign * s


class TreeShape:
    """A planar shape: nested sequences with None for leaves."""

    def __init__(self, spec):
        self.spec = spec
        self._check(spec, root=True)

    def _check(self, spec, root: bool):
        if spec is None:
            return
        if not isinstance(spec, (list, tuple)) or len(spec) < 2:
            raise TreeError("inner vertices need at least two children")
        for child in spec:
            self._check(child, root=False)

    @property
    def num_leaves(self) -> int:
        def count(s):
            return 1 if s is None else sum(count(c) for c in s)

        return count(self.spec)

    def build(self, gens: Sequence[GeneratorId]) -> Node:
        gens = list(gens)
        if len(gens) != self.num_leaves:
            raise TreeError("decoration count must match leaf count")
        it = iter(gens)

        def make(s):
            if s is None:
                return leaf(next(it))
            return ("N", tuple(make(c) for c in s))

        return make(self.spec)


def canonicalize(shape: TreeShape, gens: Sequence[GeneratorId], incoming_sign: int = 1):
    """Spec-level entry point: canonical decorated tree or None for zero."""
    node, sign = canonicalize_node(shape.build(gens))
    if node is None:
        return None, 0
    return node, sign * incoming_sign


# ---------------------------------------------------------------------------
# vertex addressing
# ---------------------------------------------------------------------------

def subtree_at(node: Node, path: tuple) -> Node:
    for i in path:
        node = node[1][i]
    return node


def inner_vertex_paths(node: Node) -> List[tuple]:
    """Paths of non-root, non-leaf vertices, in planar DFS order."""
    out: List[tuple] = []

    def walk(n, path):
        if n[0] == "L":
            return
        if path:
            out.append(path)
        for i, c in enumerate(n[1]):
            walk(c, path + (i,))

    walk(node, ())
    return out


def leaf_paths(node: Node) -> List[Tuple[tuple, GeneratorId]]:
    out: List[Tuple[tuple, GeneratorId]] = []

    def walk(n, path):
        if n[0] == "L":
            out.append((path, n[1]))
            return
        for i, c in enumerate(n[1]):
            walk(c, path + (i,))

    walk(node, ())
    return out


def vertex_weight(node: Node, path: tuple) -> int:
    """Path length down from the root, corrected by left-subtree degrees.

    Zero for the root and for the leaf of a trivial tree.  For any other
    vertex: minus the path length, plus the degrees of all subtrees hanging
    to the left of the path at each ancestor.
    """
    if not path:
        return 0
    total = -len(path)
    current = node
    for step in path:
        for child in current[1][:step]:
            total += tree_degree(child)
        current = current[1][step]
    return total


def left_leaf_degree(node: Node, path: tuple) -> int:
    """Sum of degrees of leaf decorations strictly left of the given subtree."""
    total = 0
    current = node
    for step in path:
        for child in current[1][:step]:
            total += sum(g.module_degree for g in decorations(child))
        current = current[1][step]
    return total


def replace_at_path(node: Node, path: tuple, replacement: Node) -> Node:
    if not path:
        return replacement
    i = path[0]
    kids = list(node[1])
    kids[i] = replace_at_path(kids[i], path[1:], replacement)
    return ("N", tuple(kids))


def delete_at_path(node: Node, path: tuple) -> Optional[Node]:
    """Remove the subtree at path; None when the shape becomes inadmissible.

    A parent left with fewer than two children is inadmissible and kills the
    term, including a root left with a single child.
    """
    if not path:
        raise TreeError("cannot delete the whole tree here")
    parent_path, i = path[:-1], path[-1]
    parent = subtree_at(node, parent_path)
    kids = parent[1][:i] + parent[1][i + 1:]
    if len(kids) < 2:
        return None
    return replace_at_path(node, parent_path, ("N", kids))


# ---------------------------------------------------------------------------
# the graded symmetric algebra
# ---------------------------------------------------------------------------

def mono_degree(mono: Monomial) -> int:
    trees, pos = mono
    return sum(tree_degree(t) for t in trees) + sum(g.module_degree for g in pos)


def mono_neg_degree(mono: Monomial) -> int:
    trees, _ = mono
    return -sum(tree_degree(t) for t in trees)


def mono_pos_degree(mono: Monomial) -> int:
    _, pos = mono
    return sum(g.module_degree for g in pos)


def _mono_sort_key(mono: Monomial):
    trees, pos = mono
    return (
        (len(trees), len(pos)),
        tuple(g.key for g in pos),
        tuple(tree_key(t) for t in trees),
    )


def make_monomial(factors: Iterable[tuple]) -> Tuple[Optional[Monomial], int]:
    """Normalize a factor sequence into a canonical monomial with sign.

    Factors are ('p', GeneratorId) or ('t', Node); positive generators come
    first in a monomial, each group sorted by its canonical key.  Returns
    (None, 0) when an odd factor repeats.
    """
    items = []
    for kind, obj in factors:
        if kind == "p":
            items.append(((0, obj.key), obj.module_degree, (kind, obj)))
        else:
            items.append(((1, tree_key(obj)), tree_degree(obj), (kind, obj)))
    items, sign = _sort_factors_with_sign(items)
    if items is None:
        return None, 0
    pos = tuple(obj for _, _, (kind, obj) in items if kind == "p")
    trees = tuple(obj for _, _, (kind, obj) in items if kind == "t")
    return (trees, pos), sign


class AlgebraElement:
    """O-linear combination of canonical monomials in trees and positives."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: RingSpec, terms: Optional[dict] = None):
        self.ring = ring
        self.terms = {m: c for m, c in (terms or {}).items() if not c.is_zero()}

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(ring: RingSpec) -> "AlgebraElement":
        return AlgebraElement(ring, {})

    @staticmethod
    def scalar(p: Poly) -> "AlgebraElement":
        return AlgebraElement(p.ring, {((), ()): p})

    @staticmethod
    def from_tree(ring: RingSpec, node: Node, coeff: Optional[Poly] = None) -> "AlgebraElement":
        c = coeff if coeff is not None else Poly.const(ring, 1)
        cnode, sign = canonicalize_node(node)
        if cnode is None:
            return AlgebraElement.zero(ring)
        return AlgebraElement(ring, {((cnode,), ()): c.scale(sign)})

    @staticmethod
    def from_module_element(me: ModuleElement) -> "AlgebraElement":
        out = {}
        for g, p in me.terms.items():
            out[((leaf(g),), ())] = p
        return AlgebraElement(me.ring, out)

    @staticmethod
    def from_positive(ring: RingSpec, gen: GeneratorId, coeff: Optional[Poly] = None) -> "AlgebraElement":
        c = coeff if coeff is not None else Poly.const(ring, 1)
        return AlgebraElement(ring, {((), (gen,)): c})

    # -- basic algebra ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, Poly.zero(self.ring)) + c
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
        return AlgebraElement(self.ring, out)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def scale(self, value) -> "AlgebraElement":
        if isinstance(value, Poly):
            if value.is_zero():
                return AlgebraElement.zero(self.ring)
            return AlgebraElement(self.ring, {m: value * c for m, c in self.terms.items()})
        return AlgebraElement(self.ring, {m: c.scale(value) for m, c in self.terms.items()})

    def __mul__(self, other: "AlgebraElement") -> "AlgebraElement":
        out = AlgebraElement.zero(self.ring)
        acc: dict = {}
        for (t1, p1), c1 in self.terms.items():
            for (t2, p2), c2 in other.terms.items():
                factors = [("p", g) for g in p1] + [("t", t) for t in t1] \
                    + [("p", g) for g in p2] + [("t", t) for t in t2]
                mono, sign = make_monomial(factors)
                if mono is None:
                    continue
                c = (c1 * c2).scale(sign)
                s = acc.get(mono, Poly.zero(self.ring)) + c
                if s.is_zero():
                    acc.pop(mono, None)
                else:
                    acc[mono] = s
        out.terms = acc
        return out

    def __eq__(self, other):
        return isinstance(other, AlgebraElement) and self.terms == other.terms

    # -- grading ----------------------------------------------------------------

    def is_homogeneous(self) -> bool:
        return len({mono_degree(m) for m in self.terms}) <= 1

    def neg_component(self, neg_degree: int) -> "AlgebraElement":
        return AlgebraElement(self.ring, {
            m: c for m, c in self.terms.items() if mono_neg_degree(m) == neg_degree})

    def split_by_neg_degree(self) -> dict:
        out: dict = {}
        for m, c in self.terms.items():
            out.setdefault(mono_neg_degree(m), {})[m] = c
        return {k: AlgebraElement(self.ring, v) for k, v in out.items()}

    # -- projections --------------------------------------------------------------

    def project_products(self) -> "AlgebraElement":
        """Monomials with at least two tree factors."""
        return AlgebraElement(self.ring, {
            m: c for m, c in self.terms.items() if len(m[0]) >= 2})

    def project_module(self) -> "AlgebraElement":
        """Monomials whose single tree factor is trivial (the module part)."""
        return AlgebraElement(self.ring, {
            m: c for m, c in self.terms.items()
            if len(m[0]) == 1 and is_leaf(m[0][0])})

    def project_single_nontrivial(self) -> "AlgebraElement":
        return AlgebraElement(self.ring, {
            m: c for m, c in self.terms.items()
            if len(m[0]) == 1 and not is_leaf(m[0][0])})

    def project_scalar(self) -> "AlgebraElement":
        """Monomials with no tree factor (the purely positive part)."""
        return AlgebraElement(self.ring, {m: c for m, c in self.terms.items() if not m[0]})

    def module_part(self) -> ModuleElement:
        """Extract the module part; positive factors must be absent."""
        out = ModuleElement.zero(self.ring)
        for (trees, pos), c in self.terms.items():
            if len(trees) == 1 and is_leaf(trees[0]):
                if pos:
                    raise TreeError("module part carries positive factors")
                out = out + ModuleElement.of_gen(self.ring, trees[0][1], c)
        return out

    def has_only_module_and_scalar(self) -> bool:
        for (trees, _pos), _c in self.terms.items():
            if len(trees) > 1 or (trees and not is_leaf(trees[0])):
                return False
        return True

    # -- display --------------------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        chunks = []
        for mono in sorted(self.terms, key=_mono_sort_key):
            coeff = self.terms[mono]
            trees, pos = mono
            factors = [g.label for g in pos] + [tree_str(t) for t in trees]
            if len(coeff.terms) > 1:
                sign = "+"
                body = "(" + str(coeff) + ")"
            else:
                text = str(coeff)
                sign = "-" if text.startswith("-") else "+"
                body = text.lstrip("-")
            if factors and body == "1":
                body = "*".join(factors)
            elif factors:
                body = body + "*" + "*".join(factors)
            chunks.append((sign, body))
        out = ("-" if chunks[0][0] == "-" else "") + chunks[0][1]
        for sign, body in chunks[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"AlgebraElement({self})"


# ---------------------------------------------------------------------------
# the root maps
# ---------------------------------------------------------------------------

def root_join(elem: AlgebraElement) -> AlgebraElement:
    """Join each product of at least two trees into one tree at a new root.

    A map of degree -1; positive factors pass with the Koszul sign of an odd
    operator.  Monomials with fewer than two tree factors are rejected.
    """
    out = AlgebraElement.zero(elem.ring)
    for (trees, pos), c in elem.terms.items():
        if len(trees) < 2:
            raise TreeError("root_join needs at least two tree factors")
        node, sign = canonicalize_node(("N", trees))
        if node is None:
            continue
        sign *= parity_sign(mono_pos_degree((trees, pos)))
        mono, s2 = make_monomial([("p", g) for g in pos] + [("t", node)])
        if mono is None:
            continue
        out = out + AlgebraElement(elem.ring, {mono: c.scale(sign * s2)})
    return out


def root_split(elem: AlgebraElement) -> AlgebraElement:
    """Inverse of root_join: cut each non-trivial tree at its root."""
    out = AlgebraElement.zero(elem.ring)
    for (trees, pos), c in elem.terms.items():
        if len(trees) != 1 or is_leaf(trees[0]):
            raise TreeError("root_split expects single non-trivial tree factors")
        sign = parity_sign(mono_pos_degree((trees, pos)))
        mono, s2 = make_monomial(
            [("p", g) for g in pos] + [("t", child) for child in trees[0][1]])
        if mono is None:
            continue
        out = out + AlgebraElement(elem.ring, {mono: c.scale(sign * s2)})
    return out


def contract_vertex(node: Node, path: tuple) -> Tuple[Optional[Node], int]:
    """Remove an inner vertex, splicing its children into its parent."""
    if not path:
        raise TreeError("cannot contract the root")
    target = subtree_at(node, path)
    if is_leaf(target):
        raise TreeError("cannot contract a leaf")
    parent_path, i = path[:-1], path[-1]
    parent = subtree_at(node, parent_path)
    kids = parent[1][:i] + target[1] + parent[1][i + 1:]
    raw = replace_at_path(node, parent_path, ("N", kids))
    return canonicalize_node(raw)


def substitute_at_path(elem_ring: RingSpec, node: Node, path: tuple,
                       value: AlgebraElement, pull_weight: Optional[int] = None
                       ) -> List[Tuple[Poly, tuple, Optional[Node]]]:
    """Replace the subtree at `path` by a decoration value.

    The value must live in (module + scalar) tensor positives.  Module terms
    decorate a fresh leaf; scalar terms delete the leaf slot, killing the
    term when the shape degenerates.  Positive factors exit the tree with
    the sign of the decoration-slot identification: past the leaf
    decorations strictly to the left, or, when `pull_weight` is given (the
    vertex weight, inside the differential's substitution terms), with the
    parity of weight times factor degree accumulated from the odd join maps
    along the path.  Returns raw (coefficient, positive factors,
    node-or-None) triples; nodes are canonical.
    """
    out: List[Tuple[Poly, tuple, Optional[Node]]] = []
    left = left_leaf_degree(node, path) if pull_weight is None else pull_weight
    for (trees, pos), c in value.terms.items():
        pull = parity_sign(sum(g.module_degree for g in pos) * left)
        coeff = c.scale(pull)
        if len(trees) == 1 and is_leaf(trees[0]):
            raw = replace_at_path(node, path, trees[0])
            cnode, sign = canonicalize_node(raw)
            if cnode is None:
                continue
            out.append((coeff.scale(sign), pos, cnode))
        elif not trees:
            if not path:
                out.append((coeff, pos, None))
                continue
            raw = delete_at_path(node, path)
            if raw is None:
                continue
            cnode, sign = canonicalize_node(raw)
            if cnode is None:
                continue
            out.append((coeff.scale(sign), pos, cnode))
        else:
            raise TreeError("substitution value must be module + scalar valued")
    return out


def absorb_O_decorations(ring: RingSpec, node: Node, path: tuple, f: Poly) -> AlgebraElement:
    """Split a leaf decorated by (generator + scalar) into its two terms.

    Returns tree[..., a, ...] + f * (tree with the leaf removed), the removal
    projected to zero when the shape becomes inadmissible; on a trivial tree
    the scalar term is the scalar itself.
    """
    target = subtree_at(node, path)
    if not is_leaf(target):
        raise TreeError("absorb_O_decorations expects a leaf position")
    value = AlgebraElement.from_tree(ring, target) + AlgebraElement.scalar(f)
    out = AlgebraElement.zero(ring)
    for coeff, pos, cnode in substitute_at_path(ring, node, path, value):
        if cnode is None:
            out = out + AlgebraElement.scalar(coeff)
        else:
            mono, sign = make_monomial([("p", g) for g in pos] + [("t", cnode)])
            if mono is not None:
                out = out + AlgebraElement(ring, {mono: coeff.scale(sign)})
    return out


# ---------------------------------------------------------------------------
# derivations
# ---------------------------------------------------------------------------

def apply_derivation(elem: AlgebraElement,
                     on_tree: Callable[[Node], AlgebraElement],
                     on_positive: Optional[Callable[[GeneratorId], AlgebraElement]] = None,
                     on_coeff: Optional[Callable[[Poly], AlgebraElement]] = None) -> AlgebraElement:
    """Extend generator images to the whole algebra by the graded Leibniz rule.

    The operator is odd (degree +1): passing a factor of degree d costs
    (-1)^d.  Monomial factors are ordered positives-then-trees, with the
    polynomial coefficient in front (even, so it contributes no sign).
    """
    ring = elem.ring
    one = Poly.const(ring, 1)
    out = AlgebraElement.zero(ring)
    for (trees, pos), c in elem.terms.items():
        rest = AlgebraElement(ring, {(trees, pos): one})
        if on_coeff is not None:
            dc = on_coeff(c)
            if dc is not None and not dc.is_zero():
                out = out + dc * rest
        passed = 0
        for i, g in enumerate(pos):
            if on_positive is not None:
                img = on_positive(g)
                if img is not None and not img.is_zero():
                    left = AlgebraElement(ring, {((), pos[:i]): c.scale(parity_sign(passed))})
                    right = AlgebraElement(ring, {(trees, pos[i + 1:]): one})
                    out = out + left * img * right
            passed += g.module_degree
        for i, t in enumerate(trees):
            img = on_tree(t)
            if img is not None and not img.is_zero():
                left = AlgebraElement(ring, {(trees[:i], pos): c.scale(parity_sign(passed))})
                right = AlgebraElement(ring, {(trees[i + 1:], ()): one})
                out = out + left * img * right
            passed += tree_degree(t)
    return out


# ---------------------------------------------------------------------------
# basis enumeration
# ---------------------------------------------------------------------------

def enumerate_tree_basis(res: FreeResolution, neg_degree: int) -> Tuple[Node, ...]:
    """All canonical decorated trees of homological degree -neg_degree.

    Trivial trees over the matching module, plus every join of a multiset of
    lower-degree basis trees whose degrees sum to -(neg_degree - 1); odd
    factors never repeat.  Output order: leaf count, shape, decorations.
    """
    if neg_degree < 1:
        raise TreeError("neg_degree must be at least 1")
    cache = res._tree_basis_cache
    if neg_degree in cache:
        return cache[neg_degree]
    out = [leaf(g) for g in res.generators(neg_degree)]
    if neg_degree >= 3:
        candidates = []
        for d in range(1, neg_degree - 1):
            candidates.extend(enumerate_tree_basis(res, d))
        candidates.sort(key=tree_key)
        for combo in _multisets_with_degree(candidates, neg_degree - 1, 2):
            out.append(("N", combo))
    # listing order: leaf count, then inner-vertex count, then shape and
    # decorations; the canonical child order inside each tree is tree_key
    out.sort(key=lambda t: (leaf_count(t), inner_vertex_count(t)) + tree_key(t)[1:])
    cache[neg_degree] = tuple(out)
    return cache[neg_degree]


def _multisets_with_degree(candidates: List[Node], total: int, min_count: int):
    """Multisets of candidate trees with degree sum -total, in key order."""
    results: List[tuple] = []

    def recurse(start: int, remaining: int, chosen: list):
        if remaining == 0:
            if len(chosen) >= min_count:
                results.append(tuple(chosen))
            return
        for i in range(start, len(candidates)):
            node = candidates[i]
            d = -tree_degree(node)
            if d > remaining:
                continue
            limit = 1 if tree_degree(node) % 2 != 0 else remaining // d
            taken = []
            for _ in range(limit):
                taken.append(node)
                if d * len(taken) > remaining:
                    break
                recurse(i + 1, remaining - d * len(taken), chosen + taken)

    recurse(0, total, [])
    return results


def enumerate_monomial_basis(res: FreeResolution, neg_degree: int) -> Tuple[Monomial, ...]:
    """All canonical monomials in basis trees of the given negative degree."""
    cache = res._monomial_basis_cache
    if neg_degree in cache:
        return cache[neg_degree]
    candidates = []
    for d in range(1, neg_degree + 1):
        candidates.extend(enumerate_tree_basis(res, d))
    candidates.sort(key=tree_key)
    combos = _multisets_with_degree(candidates, neg_degree, 1)
    out = tuple(sorted(((tuple(c), ()) for c in combos), key=_mono_sort_key))
    cache[neg_degree] = out
    return out
