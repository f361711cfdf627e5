"""Extending a positively graded differential to the full graded algebra.

The input is a square-zero degree +1 derivation on a symmetric algebra of
positive generators over the polynomial ring, preserving the ideal resolved
by the negative part.  The output is a total differential on the whole
algebra: the tree differential at negative-degree level -1, the given
derivation on the positive part, and solved correction tables

  * on module generators, one table per nonnegative level, valued in
    (module x positives) of the forced bidegree;
  * on basis trees, hook corrections entering the same tree formula that
    the level -1 differential uses.

Each table entry is a preimage under the resolution differential of an
expression in lower tables, found by exact lifting; square-zero of the
total differential is then verified degree by degree.  A second, general
mode drops the ideal-preservation hypothesis and additionally solves
correction tables on the ring variables and the positive generators.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

from .forest import (AlgebraElement, Node, apply_derivation, canonicalize_node,
                     enumerate_tree_basis, inner_vertex_paths, is_leaf, leaf,
                     leaf_paths, make_monomial, parity_sign, subtree_at,
                     tree_degree, tree_str, vertex_weight)
from .kt import (CheckResult, HookMap, SolveError, TreeDifferential, apply_hook_linear,
                 homotopy, hook_product, project_to_resolution)
from .poly import Poly, RingSpec
from .resolution import (FreeResolution, GeneratorId, KoszulComplex, ModuleElement,
                         ideal_member)


class TruncationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# the positive part
# ---------------------------------------------------------------------------

class PositivePart:
    """Positive generators with a degree +1 derivation on their algebra.

    `q_on_vars` gives the derivation on ring variables (index -> element of
    the positive algebra of degree +1); `q_on_gens` gives it on each
    generator.  Images must live in the positive algebra: no tree factors.
    """

    def __init__(self, ring: RingSpec, gens: Sequence[GeneratorId],
                 q_on_vars: Dict[int, AlgebraElement],
                 q_on_gens: Dict[GeneratorId, AlgebraElement],
                 ideal: Optional[Sequence[Poly]] = None):
        self.ring = ring
        self.gens = tuple(gens)
        self.q_on_vars = dict(q_on_vars)
        self.q_on_gens = dict(q_on_gens)
        self.ideal = list(ideal) if ideal is not None else None
        self._achievable: Optional[set] = None
        self._validate()

    def _validate(self):
        seen = set()
        for g in self.gens:
            if g.module_degree < 1:
                raise ValueError(f"positive generator {g.label} must have positive degree")
            if g.label in seen:
                raise ValueError(f"duplicate positive generator {g.label}")
            seen.add(g.label)
        for j, img in self.q_on_vars.items():
            self._check_image(img, expected_degree=1, what=f"image of variable {j}")
        for g in self.gens:
            img = self.q_on_gens.get(g)
            if img is None:
                raise ValueError(f"missing derivation image for {g.label}")
            self._check_image(img, expected_degree=g.module_degree + 1,
                              what=f"image of {g.label}")

    def _check_image(self, img: AlgebraElement, expected_degree: int, what: str):
        for (trees, pos), _c in img.terms.items():
            if trees:
                raise ValueError(f"{what} must stay in the positive algebra")
            if sum(g.module_degree for g in pos) != expected_degree:
                raise ValueError(f"{what} has a component of the wrong degree")

    def qplus_poly(self, p: Poly) -> AlgebraElement:
        out = AlgebraElement.zero(self.ring)
        for j, img in self.q_on_vars.items():
            dp = p.partial(j)
            if not dp.is_zero():
                out = out + img.scale(dp)
        return out

    def qplus(self, elem: AlgebraElement) -> AlgebraElement:
        def on_tree(_node):
            raise ValueError("positive derivation applied to a tree factor")

        return apply_derivation(elem, on_tree,
                                on_positive=lambda g: self.q_on_gens[g],
                                on_coeff=self.qplus_poly)

    def square_issues(self) -> List[str]:
        """Where the derivation fails to square to zero on the nose."""
        issues = []
        for j in sorted(self.q_on_vars):
            r = self.qplus(self.q_on_vars[j])
            if not r.is_zero():
                issues.append(f"square on variable {self.ring.names[j]}: {r}")
        for g in self.gens:
            r = self.qplus(self.q_on_gens[g])
            if not r.is_zero():
                issues.append(f"square on {g.label}: {r}")
        return issues

    def square_in_ideal(self, ideal: Sequence[Poly]) -> List[str]:
        """Variables whose squared image leaves the ideal (lift-mode gate)."""
        issues = []
        for j in sorted(self.q_on_vars):
            r = self.qplus(self.q_on_vars[j])
            for (_trees, pos), c in r.terms.items():
                if not ideal_member(self.ring, ideal, c):
                    issues.append(
                        f"square on variable {self.ring.names[j]} has coefficient "
                        f"{c} outside the ideal")
        return issues

    def slice_nonempty(self, degree: int, bound: int = 64) -> bool:
        """Whether the positive algebra has monomials of the given degree."""
        if degree == 0:
            return True
        if degree < 0:
            return False
        if self._achievable is None or degree > bound:
            achievable = {0}
            for g in self.gens:
                d = g.module_degree
                if d % 2 != 0:
                    achievable |= {a + d for a in achievable if a + d <= bound}
                else:
                    new = set(achievable)
                    for a in achievable:
                        k = a + d
                        while k <= bound:
                            new.add(k)
                            k += d
                    achievable = new
            self._achievable = achievable
        return degree in self._achievable

    def gen_by_label(self, label: str) -> GeneratorId:
        for g in self.gens:
            if g.label == label:
                return g
        raise ValueError(f"unknown positive generator {label!r}")


def check_ideal_preserved(pos: PositivePart, ideal: Sequence[Poly],
                          poly_cap: Optional[int] = None) -> CheckResult:
    """Membership of the derivative of each ideal generator in the ideal."""
    failures = []
    for phi in ideal:
        image = pos.qplus_poly(phi)
        for (_trees, ptuple), c in image.terms.items():
            if not ideal_member(pos.ring, ideal, c, poly_cap):
                labels = "*".join(g.label for g in ptuple)
                failures.append((str(phi), f"component {c}*{labels} not in the ideal"))
    return CheckResult("ideal preservation", not failures,
                       f"{len(ideal)} ideal generators", failures)


def choose_nabla0(res: FreeResolution, pos: PositivePart,
                  table: Optional[Dict[GeneratorId, AlgebraElement]] = None) -> dict:
    """The level-0 derivation choice on module generators.

    Default: zero on every basis generator (always valid for free modules).
    A user table must be valued in module x strictly-positive monomials.
    """
    if table is None:
        return {}
    for g, val in table.items():
        for (trees, ptuple), _c in val.terms.items():
            ok = len(trees) == 1 and is_leaf(trees[0]) and ptuple
            if not ok:
                raise ValueError(
                    f"level-0 derivation value for {g.label} must lie in "
                    "module x positive generators")
    return dict(table)


# ---------------------------------------------------------------------------
# the extension data and its evaluator
# ---------------------------------------------------------------------------

class ExtensionData:
    """Solved correction tables plus the evaluator for the total differential."""

    def __init__(self, res: FreeResolution, pos: PositivePart, hook: HookMap,
                 mode: str = "explicit", nabla0: Optional[dict] = None,
                 neg_degree_max: int = 6):
        self.res = res
        self.pos = pos
        self.hook = hook
        self.mode = mode
        self.nabla0 = dict(nabla0 or {})
        self.neg_degree_max = neg_degree_max
        self.gen_q: Dict[Tuple[int, GeneratorId], AlgebraElement] = {}
        self.chi: Dict[Tuple[int, Node], AlgebraElement] = {}
        self.tree_q: Dict[Tuple[int, Node], AlgebraElement] = {}
        self.var_q: Dict[Tuple[int, int], AlgebraElement] = {}
        self.vgen_q: Dict[Tuple[int, GeneratorId], AlgebraElement] = {}
        self.level_max = -1
        self._delta = TreeDifferential(res, hook)
        self._tree_memo: Dict[Tuple[int, Node], AlgebraElement] = {}

    # -- per-level generator images ------------------------------------------

    def q_level_on_gen(self, k: int, g: GeneratorId) -> AlgebraElement:
        if k == -1:
            return self._delta.leaf_value(g)
        return self.gen_q.get((k, g), AlgebraElement.zero(self.res.ring))

    def chi_level(self, k: int, node: Node) -> AlgebraElement:
        if k == -1:
            return AlgebraElement.from_module_element(self.hook.value(node))
        return self.chi.get((k, node), AlgebraElement.zero(self.res.ring))

    def q_level_on_positive(self, k: int, g: GeneratorId) -> AlgebraElement:
        if k == -1:
            return AlgebraElement.zero(self.res.ring)
        if k == 0:
            return self.pos.q_on_gens[g]
        return self.vgen_q.get((k, g), AlgebraElement.zero(self.res.ring))

    def q_level_on_coeff(self, k: int, c: Poly) -> Optional[AlgebraElement]:
        if k == -1:
            return None
        if k == 0:
            return self.pos.qplus_poly(c)
        out = AlgebraElement.zero(self.res.ring)
        for (kk, j), val in self.var_q.items():
            if kk != k:
                continue
            dc = c.partial(j)
            if not dc.is_zero():
                out = out + val.scale(dc)
        return out

    def q_level_on_tree(self, k: int, node: Node) -> AlgebraElement:
        if is_leaf(node):
            return self.q_level_on_gen(k, node[1])
        if k == -1:
            return self._delta.on_tree(node)
        key = (k, node)
        cached = self._tree_memo.get(key)
        if cached is not None:
            return cached
        if self.mode == "general":
            if key in self.tree_q:
                result = self.tree_q[key]
            elif k - tree_degree(node) > self.neg_degree_max:
                raise TruncationError(
                    f"level {k} table not solved for {tree_str(node)}")
            else:
                result = AlgebraElement.zero(self.res.ring)
        else:
            result = self._tree_formula(k, node, include_root_hook=True)
        self._tree_memo[key] = result
        return result

    def _tree_formula(self, k: int, node: Node, include_root_hook: bool) -> AlgebraElement:
        """Level-k action on a tree: corrected leaves plus hook substitutions."""
        from .kt import _substituted

        ring = self.res.ring
        result = AlgebraElement.zero(ring)
        for path, gen in leaf_paths(node):
            value = self.q_level_on_gen(k, gen)
            if value.is_zero():
                continue
            w = vertex_weight(node, path)
            result = result + _substituted(ring, node, path, value, parity_sign(w), w)
        paths = inner_vertex_paths(node) + ([()] if include_root_hook else [])
        for path in paths:
            value = self.chi_level(k, subtree_at(node, path))
            if value.is_zero():
                continue
            w = vertex_weight(node, path)
            result = result + _substituted(ring, node, path, value, -parity_sign(w), w)
        return result

    # -- assembled operators ------------------------------------------------------

    def apply_level(self, k: int, elem: AlgebraElement) -> AlgebraElement:
        return apply_derivation(
            elem,
            on_tree=lambda node: self.q_level_on_tree(k, node),
            on_positive=lambda g: self.q_level_on_positive(k, g),
            on_coeff=lambda c: self.q_level_on_coeff(k, c),
        )

    def apply(self, elem: AlgebraElement) -> AlgebraElement:
        out = AlgebraElement.zero(self.res.ring)
        for k in range(-1, self.level_max + 1):
            out = out + self.apply_level(k, elem)
        return out

    def q_on_gen_total(self, g: GeneratorId) -> AlgebraElement:
        return self.apply(AlgebraElement.from_tree(self.res.ring, leaf(g)))

    # -- reporting -------------------------------------------------------------------

    def residue_records(self) -> List[dict]:
        """Nonzero corrections as {level, source, value} records."""
        records = []
        for (k, g), val in self.gen_q.items():
            if not val.is_zero():
                records.append({"level": k, "source": g.label, "value": str(val)})
        for (k, node), val in self.chi.items():
            if not val.is_zero():
                records.append({"level": k, "source": tree_str(node), "value": str(val)})
        for (k, j), val in self.var_q.items():
            if not val.is_zero():
                records.append({"level": k, "source": self.res.ring.names[j],
                                "value": str(val)})
        for (k, g), val in self.vgen_q.items():
            if not val.is_zero():
                records.append({"level": k, "source": g.label, "value": str(val)})
        records.sort(key=lambda r: (r["level"], r["source"]))
        return records


# ---------------------------------------------------------------------------
# lifting preimages of the level -1 differential
# ---------------------------------------------------------------------------

def _group_by_positives(elem: AlgebraElement):
    """Split (module + scalar) x positives into per-positive-monomial parts."""
    groups: Dict[tuple, dict] = {}
    for (trees, pos), c in elem.terms.items():
        entry = groups.setdefault(pos, {"module": {}, "scalar": Poly.zero(elem.ring)})
        if not trees:
            entry["scalar"] = entry["scalar"] + c
        elif len(trees) == 1 and is_leaf(trees[0]):
            g = trees[0][1]
            prev = entry["module"].get(g, Poly.zero(elem.ring))
            entry["module"][g] = prev + c
        else:
            raise SolveError("lift", "target", f"unexpected tree component {tree_str(trees[0])}")
    return groups


def lift_delta_preimage(res: FreeResolution, target: AlgebraElement) -> Optional[AlgebraElement]:
    """Solve delta(w) = target with w valued in module x positives.

    The target must be (module + scalar) x positives; each positive
    monomial is lifted independently through the resolution differential
    (module components) or the augmentation (scalar components).
    """
    ring = res.ring
    out = AlgebraElement.zero(ring)
    for pos, entry in _group_by_positives(target).items():
        sign = parity_sign(sum(g.module_degree for g in pos))
        module = ModuleElement(ring, entry["module"])
        scalar = entry["scalar"]
        if not module.is_zero() and not scalar.is_zero():
            raise SolveError("lift", "target", "mixed module and scalar components "
                             "in one bidegree")
        if not scalar.is_zero():
            lifted = res.lift(scalar.scale(sign), 1)
        elif not module.is_zero():
            depths = {-g.module_degree for g in module.terms}
            if len(depths) != 1:
                raise SolveError("lift", "target", "mixed homological degrees")
            lifted = res.lift(module.scale(sign), depths.pop() + 1)
        else:
            continue
        if lifted is None:
            return None
        for g, p in lifted.terms.items():
            mono, s = make_monomial([("p", u) for u in pos] + [("t", leaf(g))])
            if mono is not None:
                out = out + AlgebraElement(ring, {mono: p.scale(s)})
    return out


# ---------------------------------------------------------------------------
# the explicit solver
# ---------------------------------------------------------------------------

def _sum_lower_level_squares(ext: ExtensionData, k: int, x: AlgebraElement) -> AlgebraElement:
    out = AlgebraElement.zero(ext.res.ring)
    for m in range(0, k):
        out = out + ext.apply_level(m, ext.apply_level(k - 1 - m, x))
    return out


def solve_residues_explicit(res: FreeResolution, pos: PositivePart, hook: HookMap,
                            neg_degree_max: int,
                            nabla0: Optional[dict] = None) -> ExtensionData:
    """Solve the correction tables of the ideal-preserving extension.

    Levels run from 0 while the forced bidegrees stay nonzero; within a
    level, module generators are solved by increasing depth, then basis
    trees by increasing negative degree.  Square-zero is asserted on every
    solved source after each level.
    """
    issues = pos.square_issues()
    if issues:
        raise SolveError("positive input", issues[0],
                         "positive differential must square to zero; "
                         "use the general mode for quotient lifts")
    gate = check_ideal_preserved(pos, res.ideal_generators())
    if not gate.passed:
        raise SolveError("check_ideal_preserved", gate.failures[0][0],
                         gate.failures[0][1])
    ext = ExtensionData(res, pos, hook, mode="explicit",
                        nabla0=choose_nabla0(res, pos, nabla0),
                        neg_degree_max=neg_degree_max)
    level_cap = min(res.length - 1, neg_degree_max)
    for k in range(0, level_cap + 1):
        _solve_level_on_generators(ext, k)
        _solve_level_on_trees(ext, k)
        ext.level_max = k
        _assert_square_on_generators(ext, k)
    ext.level_max = max(ext.level_max, 0)
    return ext


def _solve_level_on_generators(ext: ExtensionData, k: int):
    res, ring = ext.res, ext.res.ring
    for depth in range(1, res.length + 1):
        for g in res.generators(depth):
            x = AlgebraElement.from_tree(ring, leaf(g))
            forced = ext.apply_level(k, ext.apply_level(-1, x)) \
                + _sum_lower_level_squares(ext, k, x)
            if k == 0 and g in ext.nabla0:
                forced = forced + ext.apply_level(-1, ext.nabla0[g])
            target_vanishes = depth + k > res.length or not ext.pos.slice_nonempty(k + 1)
            if target_vanishes:
                if not forced.is_zero():
                    raise SolveError(f"residue level {k}", g.label,
                                     "forced-zero correction but the obstruction "
                                     f"is {forced}")
                continue
            lifted = lift_delta_preimage(res, forced)
            if lifted is None:
                raise SolveError(f"residue level {k}", g.label,
                                 "no preimage under the resolution differential")
            value = -lifted
            if k == 0 and g in ext.nabla0:
                value = ext.nabla0[g] + value
            if not value.is_zero():
                ext.gen_q[(k, g)] = value


def _solve_level_on_trees(ext: ExtensionData, k: int):
    res, ring = ext.res, ext.res.ring
    top = min(res.length - k, ext.neg_degree_max)
    for degree in range(3, top + 1):
        for node in enumerate_tree_basis(res, degree):
            if is_leaf(node):
                continue
            if not ext.pos.slice_nonempty(k + 1):
                continue
            x = AlgebraElement.from_tree(ring, node)
            partial = ext._tree_formula(k, node, include_root_hook=False)
            forced = ext.apply_level(-1, partial) \
                + ext.apply_level(k, ext.apply_level(-1, x)) \
                + _sum_lower_level_squares(ext, k, x)
            if not forced.has_only_module_and_scalar():
                raise SolveError(f"residue level {k}", tree_str(node),
                                 f"tree components survive in the obstruction: {forced}")
            lifted = lift_delta_preimage(res, forced)
            if lifted is None:
                raise SolveError(f"residue level {k}", tree_str(node),
                                 "no preimage under the resolution differential")
            if not lifted.is_zero():
                ext.chi[(k, node)] = lifted
                ext._tree_memo.pop((k, node), None)


def _assert_square_on_generators(ext: ExtensionData, k: int):
    ring = ext.res.ring
    for depth in range(1, ext.res.length + 1):
        for g in ext.res.generators(depth):
            x = AlgebraElement.from_tree(ring, leaf(g))
            total = AlgebraElement.zero(ring)
            for a in range(-1, k + 1):
                b = k - 1 - a
                if -1 <= b <= k:
                    total = total + ext.apply_level(a, ext.apply_level(b, x))
            if not total.is_zero():
                raise SolveError(f"level {k} consistency", g.label,
                                 f"square residue {total}")


# ---------------------------------------------------------------------------
# the general solver
# ---------------------------------------------------------------------------

def _closed_preimage(ext: ExtensionData, closed: AlgebraElement) -> Optional[AlgebraElement]:
    """A preimage of a closed element under the level -1 differential.

    Splits as homotopy part plus a lifted projection part; returns None when
    the projected part cannot be lifted.
    """
    h_part = homotopy(closed)
    projected = project_to_resolution(ext.hook, closed)
    lifted = lift_delta_preimage(ext.res, projected)
    if lifted is None:
        return None
    return h_part + lifted


def solve_general_extension(res: FreeResolution, pos: PositivePart, hook: HookMap,
                            neg_degree_max: int) -> ExtensionData:
    """Solve the extension without assuming the ideal-preserving form.

    Correction tables additionally cover the ring variables and the
    positive generators; images on trees are stored per level through the
    truncation.  The positive derivation only needs to square to zero
    modulo the ideal.
    """
    issues = pos.square_in_ideal(res.ideal_generators())
    if issues:
        raise SolveError("positive input", issues[0],
                         "squared derivation leaves the ideal")
    ext = ExtensionData(res, pos, hook, mode="general", neg_degree_max=neg_degree_max)
    ring = res.ring
    level_cap = min(res.length, neg_degree_max)

    def preimage_or_raise(stage, label, closed):
        value = _closed_preimage(ext, closed)
        if value is None:
            raise SolveError(stage, label, "no preimage under the resolution differential")
        return value

    # Dependencies at level k and source degree i reach tables at degree +
    # level strictly below i + k, so solving in increasing reach keeps every
    # lookup inside the already-solved range.
    for reach in range(0, neg_degree_max + 1):
        for k in range(0, min(reach, level_cap) + 1):
            i = reach - k
            if i == 0 and k >= 1:
                for j in range(ring.num_vars):
                    x = AlgebraElement.scalar(Poly.variable(ring, j))
                    closed = -_sum_lower_level_squares(ext, k, x)
                    value = preimage_or_raise(f"variable level {k}", ring.names[j], closed)
                    if not value.is_zero():
                        ext.var_q[(k, j)] = value
                for g in pos.gens:
                    x = AlgebraElement.from_positive(ring, g)
                    closed = -_sum_lower_level_squares(ext, k, x)
                    value = preimage_or_raise(f"positive-generator level {k}",
                                              g.label, closed)
                    if not value.is_zero():
                        ext.vgen_q[(k, g)] = value
            elif 1 <= i <= res.length:
                for g in res.generators(i):
                    x = AlgebraElement.from_tree(ring, leaf(g))
                    closed = -ext.apply_level(k, ext.apply_level(-1, x)) \
                        - _sum_lower_level_squares(ext, k, x)
                    value = preimage_or_raise(f"residue level {k}", g.label, closed)
                    if not value.is_zero():
                        ext.gen_q[(k, g)] = value
            if i >= 3:
                for node in enumerate_tree_basis(res, i):
                    if is_leaf(node):
                        continue
                    x = AlgebraElement.from_tree(ring, node)
                    closed = -ext.apply_level(k, ext.apply_level(-1, x)) \
                        - _sum_lower_level_squares(ext, k, x)
                    value = preimage_or_raise(f"residue level {k}", tree_str(node), closed)
                    if not value.is_zero():
                        ext.tree_q[(k, node)] = value
                        ext._tree_memo.pop((k, node), None)
            ext.level_max = max(ext.level_max, k)
    return ext


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def verify_extension(ext: ExtensionData, neg_degree_max: int) -> CheckResult:
    """Square-zero on variables, positive and module generators, and trees.

    Also asserts the containment of module-generator images in
    (module x positives) + positives.
    """
    ring = ext.res.ring
    failures = []
    count = 0
    items: List[Tuple[str, AlgebraElement]] = []
    for j in range(ring.num_vars):
        items.append((ring.names[j], AlgebraElement.scalar(Poly.variable(ring, j))))
    for g in ext.pos.gens:
        items.append((g.label, AlgebraElement.from_positive(ring, g)))
    for depth in range(1, ext.res.length + 1):
        for g in ext.res.generators(depth):
            items.append((g.label, AlgebraElement.from_tree(ring, leaf(g))))
    tree_window = neg_degree_max
    if ext.mode == "general":
        # evaluating the square on a tree reaches tables two levels out
        tree_window = max(0, neg_degree_max - 2 * max(ext.level_max, 0))
    for degree in range(3, tree_window + 1):
        for node in enumerate_tree_basis(ext.res, degree):
            if not is_leaf(node):
                items.append((tree_str(node), AlgebraElement.from_tree(ring, node)))
    for label, x in items:
        count += 1
        residue = ext.apply(ext.apply(x))
        if not residue.is_zero():
            failures.append((label, f"square residue {residue}"))
    for depth in range(1, ext.res.length + 1):
        for g in ext.res.generators(depth):
            img = ext.q_on_gen_total(g)
            if not img.has_only_module_and_scalar():
                failures.append((g.label, "image leaves module x positives"))
    checked = (f"{count} sources, trees through negative degree {tree_window}")
    return CheckResult("total differential square zero", not failures, checked, failures)


def boundary_equivalent(res: FreeResolution, a: AlgebraElement, b: AlgebraElement) -> bool:
    """Whether two (module x positives) values differ by an exact term."""
    diff = a - b
    if diff.is_zero():
        return True
    if not diff.has_only_module_and_scalar():
        return False
    try:
        return lift_delta_preimage(res, diff) is not None
    except SolveError:
        return False


# ---------------------------------------------------------------------------
# inclusion / projection homotopy equivalence
# ---------------------------------------------------------------------------

def _proj(ext: ExtensionData, elem: AlgebraElement) -> AlgebraElement:
    """Projection onto (module x positives) + positives with hooked joins."""
    out = elem.project_module() + elem.project_scalar()
    joined = homotopy(elem)  # join of the product part, a single tree each
    if not joined.is_zero():
        out = out + apply_hook_linear(lambda t: _chi_total(ext, t), joined)
    return out


def _chi_total(ext: ExtensionData, node: Node) -> AlgebraElement:
    out = AlgebraElement.from_module_element(ext.hook.value(node))
    for k in range(0, ext.level_max + 1):
        out = out + ext.chi_level(k, node)
    return out


def verify_incl_proj(ext: ExtensionData, neg_degree_max: int) -> CheckResult:
    """The chain homotopy equivalence between the algebra and its core.

    Checks Proj Incl = Id, Incl Proj = Id - (h Q + Q h), and the side
    relations h h = 0, h Incl = 0, Proj h = 0 on the monomial basis.
    """
    from .forest import enumerate_monomial_basis

    ring = ext.res.ring
    failures = []
    count = 0
    monos = []
    for degree in range(1, neg_degree_max + 1):
        monos.extend(enumerate_monomial_basis(ext.res, degree))
    for mono in monos:
        count += 1
        x = AlgebraElement(ring, {mono: Poly.const(ring, 1)})
        lhs = _proj(ext, x)
        rhs = x - homotopy(ext.apply(x)) - ext.apply(homotopy(x))
        if not homotopy(homotopy(x)).is_zero():
            failures.append((_label(mono), "h h != 0"))
        if lhs != rhs:
            failures.append((_label(mono), f"Incl Proj mismatch: {lhs - rhs}"))
    # Proj Incl = Id on core monomials: trivial tree and pure positive samples
    for depth in range(1, ext.res.length + 1):
        for g in ext.res.generators(depth):
            count += 1
            x = AlgebraElement.from_tree(ring, leaf(g))
            if _proj(ext, x) != x:
                failures.append((g.label, "Proj Incl != Id"))
            if not homotopy(x).is_zero():
                failures.append((g.label, "h Incl != 0"))
    for g in ext.pos.gens:
        count += 1
        x = AlgebraElement.from_positive(ring, g)
        if _proj(ext, x) != x:
            failures.append((g.label, "Proj Incl != Id"))
    for mono in monos[: 50]:
        x = AlgebraElement(ring, {mono: Poly.const(ring, 1)})
        h = homotopy(x)
        if not h.is_zero() and not _proj(ext, h).is_zero():
            failures.append((_label(mono), "Proj h != 0"))
    return CheckResult("inclusion/projection homotopy", not failures,
                       f"{count} monomials through negative degree {neg_degree_max}",
                       failures)


def _label(mono) -> str:
    trees, pos = mono
    parts = [g.label for g in pos] + [tree_str(t) for t in trees]
    return "*".join(parts) if parts else "1"


# ---------------------------------------------------------------------------
# higher products
# ---------------------------------------------------------------------------

def higher_product(ext: ExtensionData, a: ModuleElement, b: ModuleElement,
                   k: int) -> AlgebraElement:
    """The level-k binary product read off the hook corrections.

    Level 0 is the product of the plain hook; level k >= 1 reads the level
    (k-1) correction table on two-leaf trees.
    """
    return _star_extended(ext, AlgebraElement.from_module_element(a),
                          AlgebraElement.from_module_element(b), k)


def _star_extended(ext: ExtensionData, x: AlgebraElement, y: AlgebraElement,
                   k: int) -> AlgebraElement:
    """The level-k product on (module x positives)-valued arguments."""
    ring = ext.res.ring
    out = AlgebraElement.zero(ring)
    for (tx, px), cx in x.terms.items():
        for (ty, py), cy in y.terms.items():
            if len(tx) != 1 or not is_leaf(tx[0]) or len(ty) != 1 or not is_leaf(ty[0]):
                raise ValueError("product arguments must be module-valued")
            gx, gy = tx[0][1], ty[0][1]
            cnode, sign = canonicalize_node(("N", (leaf(gx), leaf(gy))))
            if cnode is None:
                continue
            # the second argument's positives exit past the first decoration;
            # the product map is even, so the blocks themselves pass freely
            sign *= parity_sign(sum(g.module_degree for g in py) * gx.module_degree)
            value = ext.chi_level(k - 1, cnode)
            if value.is_zero():
                continue
            dressed, s2 = make_monomial([("p", g) for g in px] + [("p", g) for g in py])
            if dressed is None:
                continue
            coeff = (cx * cy).scale(sign * s2)
            out = out + AlgebraElement(ring, {dressed: coeff}) * value
    return out


def verify_product_defect(ext: ExtensionData, k: int) -> CheckResult:
    """The level-k product measures the failure of the lower-level Leibniz rules.

    For module generators a (depth i) and b (depth j):
      delta(a *_k b) - [i>=2] d(a) *_k b - (-1)^i [j>=2] a *_k d(b)
        = sum over m+n=k-1 of
          -(Q_m)(a *_n b) + (Q_m)(a) *_n b + (-1)^i a *_n (Q_m)(b),
    scalar-valued differentials dropping out of the product.
    """
    res, ring = ext.res, ext.res.ring
    failures = []
    count = 0
    gens = [g for depth in range(1, res.length + 1) for g in res.generators(depth)]
    for a in gens:
        for b in gens:
            count += 1
            i = -a.module_degree
            ea, eb = ModuleElement.of_gen(ring, a), ModuleElement.of_gen(ring, b)
            ea_alg = AlgebraElement.from_module_element(ea)
            eb_alg = AlgebraElement.from_module_element(eb)
            lhs = ext.apply_level(-1, higher_product(ext, ea, eb, k))
            if a.module_degree <= -2:
                lhs = lhs - higher_product(ext, res.diff[a], eb, k)
            if b.module_degree <= -2:
                lhs = lhs - higher_product(ext, ea, res.diff[b], k).scale(parity_sign(i))
            rhs = AlgebraElement.zero(ring)
            for m in range(0, k):
                n = k - 1 - m
                rhs = rhs - ext.apply_level(m, higher_product(ext, ea, eb, n))
                rhs = rhs + _star_extended(ext, ext.q_level_on_gen(m, a), eb_alg, n)
                rhs = rhs + _star_extended(
                    ext, ea_alg, ext.q_level_on_gen(m, b), n).scale(parity_sign(i))
            if lhs != rhs:
                failures.append((f"{a.label} *_{k} {b.label}",
                                 f"defect mismatch: {lhs - rhs}"))
    return CheckResult(f"level-{k} product defect", not failures,
                       f"{count} generator pairs", failures)


# ---------------------------------------------------------------------------
# Koszul-complex comparison mode
# ---------------------------------------------------------------------------

def koszul_hook(kres: KoszulComplex, neg_degree_max: int) -> HookMap:
    """The hook determined by the exterior product: nonzero only on corollas."""
    table = {}
    for degree in range(3, neg_degree_max + 1):
        for node in enumerate_tree_basis(kres, degree):
            if is_leaf(node) or any(not is_leaf(c) for c in node[1]):
                continue
            value: Optional[ModuleElement] = None
            for child in node[1]:
                gen_elem = ModuleElement.of_gen(kres.ring, child[1])
                value = gen_elem if value is None else kres.wedge(value, gen_elem)
            if value is not None and not value.is_zero():
                table[node] = value
    return HookMap(kres, table, neg_degree_max)


def koszul_mode(kres: KoszulComplex, pos: PositivePart,
                qk_tables: Dict[int, Dict[GeneratorId, AlgebraElement]],
                neg_degree_max: int) -> Tuple[ExtensionData, CheckResult]:
    """Ingest a differential given on the Koszul generators and compare.

    The hook is the exterior product on corollas and zero elsewhere; the
    ingested level tables on depth-1 generators extend to all generators by
    the Leibniz rule through the exterior product.  The hook corrections of
    nonnegative level all vanish; validity is certified by the hook
    recursion and the square-zero check of the assembled differential.
    """
    from .kt import verify_hook

    ring = kres.ring
    hook = koszul_hook(kres, neg_degree_max)
    ext = ExtensionData(kres, pos, hook, mode="koszul", neg_degree_max=neg_degree_max)
    failures = []
    for k, table in sorted(qk_tables.items()):
        for depth in range(1, kres.length + 1):
            for g in kres.generators(depth):
                value = _koszul_leibniz_extend(kres, table, g)
                if not value.is_zero():
                    ext.gen_q[(k, g)] = value
        ext.level_max = max(ext.level_max, k)
    hook_report = verify_hook(kres, hook, neg_degree_max)
    if not hook_report.passed:
        failures.extend(hook_report.failures)
    # the hook product must be the exterior product itself
    gens = [g for depth in range(1, kres.length + 1) for g in kres.generators(depth)]
    for a in gens:
        for b in gens:
            ea, eb = ModuleElement.of_gen(ring, a), ModuleElement.of_gen(ring, b)
            if hook_product(hook, ea, eb) != kres.wedge(ea, eb):
                failures.append((f"{a.label} * {b.label}",
                                 "hook product differs from the exterior product"))
    report = CheckResult("koszul comparison", not failures,
                         f"hook recursion + product table through degree {neg_degree_max}",
                         failures)
    return ext, report


def _koszul_leibniz_extend(kres: KoszulComplex,
                           table: Dict[GeneratorId, AlgebraElement],
                           g: GeneratorId) -> AlgebraElement:
    """Extend a depth-1 table to a product generator through the wedge."""
    ring = kres.ring
    subset = kres.subset_of_gen[g]
    depth1 = {s: kres.gen_of_subset[(s,)] for s in subset}
    out = AlgebraElement.zero(ring)
    for idx, s in enumerate(subset):
        img = table.get(depth1[s])
        if img is None or img.is_zero():
            continue
        for (trees, pos), c in img.terms.items():
            if len(trees) != 1 or not is_leaf(trees[0]):
                raise ValueError("ingested tables must be module x positives valued")
            h = trees[0][1]
            # operator passes idx odd generators; positives then exit past them
            sign = parity_sign(idx) * parity_sign(sum(p.module_degree for p in pos) * idx)
            value: Optional[ModuleElement] = None
            ok = True
            for pos_idx, s2 in enumerate(subset):
                gen_elem = ModuleElement.of_gen(ring, depth1[s2]) if pos_idx != idx \
                    else ModuleElement.of_gen(ring, h)
                value = gen_elem if value is None else kres.wedge(value, gen_elem)
                if value.is_zero():
                    ok = False
                    break
            if not ok or value is None:
                continue
            for gg, p in value.terms.items():
                mono, s2 = make_monomial([("p", u) for u in pos] + [("t", leaf(gg))])
                if mono is not None:
                    out = out + AlgebraElement(ring, {mono: (c * p).scale(sign * s2)})
    return out
