"""The tree differential, its hook map, and the homotopy retract.

The differential on the tree algebra acts on a single tree by splitting its
root into a product, contracting each inner vertex, applying the resolution
differential to each leaf, and subtracting hook substitutions at every inner
vertex and at the root, each with the sign of the vertex weight.  On trivial
trees it is the resolution differential; on products it extends by the
graded Leibniz rule.

The hook is solved degree by degree: for every basis tree, the required
value is a preimage under the resolution differential of an expression in
hook values of strictly lower degree, found by exact lifting.  Values on
trees too deep for the resolution are forced to zero.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .forest import (AlgebraElement, Node, apply_derivation, canonicalize_node,
                     enumerate_monomial_basis, enumerate_tree_basis, inner_vertex_paths,
                     is_leaf, leaf, leaf_paths, make_monomial, parity_sign, root_join,
                     root_split, contract_vertex, subtree_at, substitute_at_path,
                     tree_degree, tree_str, vertex_weight, mono_pos_degree)
from .poly import Poly
from .resolution import FreeResolution, GeneratorId, ModuleElement


class SolveError(RuntimeError):
    """A lifting problem had no solution; carries the failing stage and item."""

    def __init__(self, stage: str, item: str, detail: str = ""):
        self.stage = stage
        self.item = item
        self.detail = detail
        super().__init__(f"[{stage}] no solution for {item}" + (f": {detail}" if detail else ""))


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: str
    failures: list = field(default_factory=list)

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        text = f"{self.name}: {status} ({self.checked})"
        for item, detail in self.failures[:5]:
            text += f"\n  {item}: {detail}"
        return text


class HookMap:
    """O-linear table assigning a module element to each basis tree.

    Missing entries are zero; entries on trees whose value module does not
    exist are forced to zero and never stored.
    """

    def __init__(self, res: FreeResolution, table: Optional[dict] = None,
                 neg_degree_max: int = 0):
        self.res = res
        self.table: Dict[Node, ModuleElement] = {}
        self.neg_degree_max = neg_degree_max
        for node, val in (table or {}).items():
            self.set_value(node, val)

    def set_value(self, node: Node, value: ModuleElement):
        cnode, sign = canonicalize_node(node)
        if cnode is None:
            if not value.is_zero():
                raise ValueError("hook value on a vanishing tree must be zero")
            return
        if sign != 1:
            value = value.scale(sign)
        if value.is_zero():
            self.table.pop(cnode, None)
        else:
            expected = tree_degree(cnode) + 1
            if value.degrees() - {expected}:
                raise ValueError(
                    f"hook value for {tree_str(cnode)} must be homogeneous of degree {expected}")
            self.table[cnode] = value

    def value(self, node: Node) -> ModuleElement:
        return self.table.get(node, ModuleElement.zero(self.res.ring))

    def entries(self) -> List[Tuple[Node, ModuleElement]]:
        from .forest import tree_key

        return sorted(self.table.items(), key=lambda kv: (-tree_degree(kv[0]), tree_key(kv[0])))

    def lines(self) -> List[str]:
        return [f"{tree_str(node)} -> {val}" for node, val in self.entries()]


def apply_hook_linear(hook_value: Callable[[Node], AlgebraElement],
                      elem: AlgebraElement) -> AlgebraElement:
    """Apply a degree +1 tree-to-module table to single-tree monomials.

    Positive factors pass with the sign of an odd operator.
    """
    out = AlgebraElement.zero(elem.ring)
    for (trees, pos), c in elem.terms.items():
        if len(trees) != 1:
            raise ValueError("hook application expects single tree factors")
        val = hook_value(trees[0])
        if val.is_zero():
            continue
        sign = parity_sign(mono_pos_degree((trees, pos)))
        dressed = AlgebraElement(elem.ring, {((), pos): c.scale(sign)})
        out = out + dressed * val
    return out


class TreeDifferential:
    """Evaluator for the differential determined by a hook table."""

    def __init__(self, res: FreeResolution, hook: HookMap):
        self.res = res
        self.hook = hook
        self._memo: Dict[Node, AlgebraElement] = {}

    def leaf_value(self, gen: GeneratorId) -> AlgebraElement:
        ring = self.res.ring
        if gen.module_degree == -1:
            return AlgebraElement.scalar(self.res.augment[gen])
        return AlgebraElement.from_module_element(self.res.diff[gen])

    def hook_value_elem(self, node: Node) -> AlgebraElement:
        return AlgebraElement.from_module_element(self.hook.value(node))

    def on_tree(self, node: Node) -> AlgebraElement:
        cached = self._memo.get(node)
        if cached is not None:
            return cached
        ring = self.res.ring
        if is_leaf(node):
            result = self.leaf_value(node[1])
            self._memo[node] = result
            return result
        result = root_split(AlgebraElement.from_tree(ring, node))
        for path in inner_vertex_paths(node):
            w = vertex_weight(node, path)
            cnode, sign = contract_vertex(node, path)
            if cnode is not None:
                result = result + AlgebraElement.from_tree(
                    ring, cnode, Poly.const(ring, sign * parity_sign(w)))
        for path, gen in leaf_paths(node):
            w = vertex_weight(node, path)
            value = self.leaf_value(gen)
            result = result + _substituted(ring, node, path, value, parity_sign(w), w)
        for path in inner_vertex_paths(node) + [()]:
            w = vertex_weight(node, path)
            value = self.hook_value_elem(subtree_at(node, path))
            if value.is_zero():
                continue
            result = result + _substituted(ring, node, path, value, -parity_sign(w), w)
        self._memo[node] = result
        return result

    def apply(self, elem: AlgebraElement) -> AlgebraElement:
        return apply_derivation(elem, self.on_tree)


def _substituted(ring, node: Node, path: tuple, value: AlgebraElement,
                 sign: int, pull_weight: int) -> AlgebraElement:
    out = AlgebraElement.zero(ring)
    for coeff, pos, cnode in substitute_at_path(ring, node, path, value, pull_weight):
        factors = [("p", g) for g in pos]
        if cnode is not None:
            factors.append(("t", cnode))
        mono, s2 = make_monomial(factors)
        if mono is None:
            continue
        out = out + AlgebraElement(ring, {mono: coeff.scale(sign * s2)})
    return out


# ---------------------------------------------------------------------------
# solving and verifying the hook
# ---------------------------------------------------------------------------

def hook_equation_rhs(differential: TreeDifferential, node: Node) -> ModuleElement:
    """The forced value of d(hook(tree)) in terms of lower hook values."""
    ring = differential.res.ring
    split = root_split(AlgebraElement.from_tree(ring, node))
    image = differential.apply(split)
    rhs = image.project_module().module_part()
    joined = root_join(image.project_products())
    for (trees, pos), c in joined.terms.items():
        if pos:
            raise ValueError("unexpected positive factors in hook solving")
        rhs = rhs + differential.hook.value(trees[0]).scale(c)
    return rhs


def solve_hook(res: FreeResolution, neg_degree_max: int, threads: int = 1) -> HookMap:
    """Solve the hook recursion for every basis tree through the truncation.

    Values land in the module one degree up; beyond the resolution length
    they are forced to zero and the recursion is checked to be consistent.
    """
    hook = HookMap(res, {}, neg_degree_max)
    differential = TreeDifferential(res, hook)
    for degree in range(3, neg_degree_max + 1):
        trees = [t for t in enumerate_tree_basis(res, degree) if not is_leaf(t)]
        if not trees:
            continue
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rhs_list = list(pool.map(lambda t: hook_equation_rhs(differential, t), trees))
        else:
            rhs_list = [hook_equation_rhs(differential, t) for t in trees]
        for node, rhs in zip(trees, rhs_list):
            source_depth = degree - 1
            if source_depth > res.length:
                if not rhs.is_zero():
                    raise SolveError("hook", tree_str(node),
                                     "forced-zero value but the recursion is nonzero; "
                                     "input resolution is not exact")
                continue
            lifted = res.lift(rhs, source_depth)
            if lifted is None:
                raise SolveError("hook", tree_str(node),
                                 "no preimage under d; resolution not exact "
                                 "or polynomial cap too small")
            hook.set_value(node, lifted)
    return hook


def verify_hook(res: FreeResolution, hook: HookMap, neg_degree_max: int) -> CheckResult:
    """Check d(hook(t)) against the recursion for every basis tree."""
    differential = TreeDifferential(res, hook)
    failures = []
    count = 0
    for degree in range(3, neg_degree_max + 1):
        for node in enumerate_tree_basis(res, degree):
            if is_leaf(node):
                continue
            count += 1
            rhs = hook_equation_rhs(differential, node)
            value = hook.value(node)
            mod, scalar = res.apply_diff(value)
            lhs = mod
            if not scalar.is_zero():
                failures.append((tree_str(node), f"hook value hits the base ring: {scalar}"))
                continue
            if lhs != rhs:
                failures.append((tree_str(node), f"d(hook) = {lhs} but recursion gives {rhs}"))
    return CheckResult("hook recursion", not failures,
                       f"{count} basis trees through negative degree {neg_degree_max}",
                       failures)


# ---------------------------------------------------------------------------
# homotopy retract
# ---------------------------------------------------------------------------

def homotopy(elem: AlgebraElement) -> AlgebraElement:
    """Join every monomial with at least two tree factors at a new root."""
    return root_join(elem.project_products())


def retract_apply(hook: HookMap, elem: AlgebraElement, which: str) -> AlgebraElement:
    """Apply one leg of the homotopy retract: 'p', 'h', or 'iota'.

    'iota' is the identity embedding of the module part, so it only accepts
    elements already inside (module + scalar) x positives.
    """
    if which == "p":
        return project_to_resolution(hook, elem)
    if which == "h":
        return homotopy(elem)
    if which == "iota":
        if not elem.has_only_module_and_scalar():
            raise ValueError("iota expects a (module + scalar)-valued element")
        return elem
    raise ValueError(f"unknown retract leg {which!r}")


def project_to_resolution(hook: HookMap, elem: AlgebraElement) -> AlgebraElement:
    """The retract projection: module part, scalar part, and hooked joins."""
    out = elem.project_module() + elem.project_scalar()
    joined = root_join(elem.project_products())
    if not joined.is_zero():
        out = out + apply_hook_linear(
            lambda t: AlgebraElement.from_module_element(hook.value(t)), joined)
    return out


def verify_retract(res: FreeResolution, hook: HookMap, neg_degree_max: int,
                   threads: int = 1) -> CheckResult:
    """delta h + h delta = Id - (inclusion of the projection), per monomial."""
    differential = TreeDifferential(res, hook)
    failures = []
    count = 0

    def check(mono) -> Optional[Tuple[str, str]]:
        ring = res.ring
        x = AlgebraElement(ring, {mono: Poly.const(ring, 1)})
        lhs = differential.apply(homotopy(x)) + homotopy(differential.apply(x))
        rhs = x - project_to_resolution(hook, x)
        if lhs != rhs:
            return (_mono_str(mono), f"lhs - rhs = {lhs - rhs}")
        return None

    monos = []
    for degree in range(1, neg_degree_max + 1):
        monos.extend(enumerate_monomial_basis(res, degree))
    count = len(monos)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(check, monos))
    else:
        results = [check(m) for m in monos]
    failures = [r for r in results if r is not None]
    return CheckResult("homotopy retract", not failures,
                       f"{count} algebra monomials through negative degree {neg_degree_max}",
                       failures)


def _mono_str(mono) -> str:
    trees, pos = mono
    parts = [g.label for g in pos] + [tree_str(t) for t in trees]
    return "*".join(parts) if parts else "1"


def verify_square_zero(apply_fn: Callable[[AlgebraElement], AlgebraElement],
                       basis: List[AlgebraElement], label: str = "square zero",
                       checked: str = "", threads: int = 1) -> CheckResult:
    failures = []

    def check(x):
        residue = apply_fn(apply_fn(x))
        if not residue.is_zero():
            return (str(x), f"residue {residue}")
        return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(check, basis))
    else:
        results = [check(x) for x in basis]
    failures = [r for r in results if r is not None]
    return CheckResult(label, not failures, checked or f"{len(basis)} basis elements", failures)


def tree_basis_elements(res: FreeResolution, neg_degree_max: int) -> List[AlgebraElement]:
    """All basis trees through the truncation, as algebra elements."""
    out = []
    for degree in range(1, neg_degree_max + 1):
        for node in enumerate_tree_basis(res, degree):
            out.append(AlgebraElement.from_tree(res.ring, node))
    return out


# ---------------------------------------------------------------------------
# the induced product on the resolution
# ---------------------------------------------------------------------------

def hook_product(hook: HookMap, a, b):
    """The binary product read off the hook on two-leaf trees.

    Operands are module elements; base-ring operands multiply as scalars.
    """
    ring = hook.res.ring
    if isinstance(a, Poly) and isinstance(b, Poly):
        return a * b
    if isinstance(a, Poly):
        return b.scale(a)
    if isinstance(b, Poly):
        return a.scale(b)
    out = ModuleElement.zero(ring)
    for g, p in a.terms.items():
        for h, q in b.terms.items():
            cnode, sign = canonicalize_node(("N", (leaf(g), leaf(h))))
            if cnode is None:
                continue
            out = out + hook.value(cnode).scale((p * q).scale(sign))
    return out


def verify_hook_product_leibniz(res: FreeResolution, hook: HookMap) -> CheckResult:
    """d(a*b) = d(a)*b + (-1)^|a| a*d(b) for all pairs of generators."""
    failures = []
    count = 0
    gens = [g for depth in range(1, res.length + 1) for g in res.generators(depth)]
    for a in gens:
        for b in gens:
            count += 1
            ea = ModuleElement.of_gen(res.ring, a)
            eb = ModuleElement.of_gen(res.ring, b)
            prod = hook_product(hook, ea, eb)
            lhs_mod, lhs_scalar = res.apply_diff(prod)
            da_mod, da_scalar = res.apply_diff(ea)
            db_mod, db_scalar = res.apply_diff(eb)
            da = da_mod if da_scalar.is_zero() else da_scalar
            db = db_mod if db_scalar.is_zero() else db_scalar
            rhs = hook_product(hook, da, eb)
            rhs = rhs + hook_product(hook, ea, db).scale(parity_sign(a.module_degree))
            if not (lhs_scalar.is_zero() and lhs_mod == rhs):
                failures.append((f"{a.label} * {b.label}",
                                 f"d(product) = {lhs_mod} + {lhs_scalar} vs {rhs}"))
    return CheckResult("hook product Leibniz", not failures,
                       f"{count} generator pairs", failures)
