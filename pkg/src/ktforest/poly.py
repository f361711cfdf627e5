"""Exact multivariate polynomial arithmetic over the rationals.

A polynomial is a dict mapping exponent tuples (one entry per ring variable)
to nonzero Fraction coefficients.  The zero polynomial has an empty dict.
Monomials are ordered graded-lexicographically: lower total degree first,
and within a degree x^2 before x*y before y^2.  All arithmetic is exact;
there are no floating-point coefficients anywhere in this package.

The module also provides the exact linear solver `solve_lift` used by every
lifting step in the higher layers: given columns and a target in a free
module over the ring, it finds polynomial coefficients c with
sum(columns[j] * c[j]) == target, solving one rational linear system over
the monomials up to a degree cap.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

Exponent = tuple  # tuple[int, ...], one entry per variable


class RingError(ValueError):
    pass


class RingSpec:
    """An ordered list of variable names fixing the polynomial ring."""

    __slots__ = ("names",)

    def __init__(self, names: Sequence[str]):
        names = tuple(names)
        if len(names) < 1:
            raise RingError("a ring needs at least one variable")
        if len(set(names)) != len(names):
            raise RingError(f"duplicate variable names: {names}")
        self.names = names

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def var_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise RingError(f"unknown variable {name!r}") from None

    def __eq__(self, other):
        return isinstance(other, RingSpec) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"RingSpec({', '.join(self.names)})"


def monomial_key(exp: Exponent):
    """Graded-lex sort key: total degree, then lexicographic with x first."""
    return (sum(exp), tuple(-e for e in exp))


def monomial_str(exp: Exponent, ring: RingSpec) -> str:
    parts = []
    for name, e in zip(ring.names, exp):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts) if parts else "1"


class Poly:
    """Immutable exact polynomial over a RingSpec."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: RingSpec, terms: dict):
        self.ring = ring
        self.terms = {e: c for e, c in terms.items() if c != 0}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(ring: RingSpec) -> "Poly":
        return Poly(ring, {})

    @staticmethod
    def const(ring: RingSpec, value) -> "Poly":
        c = Fraction(value)
        if c == 0:
            return Poly.zero(ring)
        return Poly(ring, {(0,) * ring.num_vars: c})

    @staticmethod
    def variable(ring: RingSpec, index: int) -> "Poly":
        exp = [0] * ring.num_vars
        exp[index] = 1
        return Poly(ring, {tuple(exp): Fraction(1)})

    @staticmethod
    def monomial(ring: RingSpec, exp: Exponent, coeff=1) -> "Poly":
        return Poly(ring, {tuple(exp): Fraction(coeff)})

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, exp: Exponent) -> Fraction:
        return self.terms.get(tuple(exp), Fraction(0))

    def total_degree(self) -> Optional[int]:
        """Maximum total degree, or None for the zero polynomial."""
        if not self.terms:
            return None
        return max(sum(e) for e in self.terms)

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e in self.terms}
        return len(degs) <= 1

    def homogeneous_part(self, degree: int) -> "Poly":
        return Poly(self.ring, {e: c for e, c in self.terms.items() if sum(e) == degree})

    def constant_value(self) -> Fraction:
        zero_exp = (0,) * self.ring.num_vars
        return self.terms.get(zero_exp, Fraction(0))

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "Poly"):
        if self.ring != other.ring:
            raise RingError(f"ring mismatch: {self.ring} vs {other.ring}")

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, Fraction(0)) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly(self.ring, out)

    def __neg__(self) -> "Poly":
        return Poly(self.ring, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        self._check(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, Fraction(0)) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Poly(self.ring, out)

    def scale(self, value) -> "Poly":
        c = Fraction(value)
        if c == 0:
            return Poly.zero(self.ring)
        return Poly(self.ring, {e: c * v for e, v in self.terms.items()})

    def partial(self, index: int) -> "Poly":
        """Exact partial derivative with respect to variable `index`."""
        out: dict = {}
        for e, c in self.terms.items():
            if e[index] == 0:
                continue
            d = list(e)
            d[index] -= 1
            out[tuple(d)] = c * e[index]
        return Poly(self.ring, out)

    # -- comparison / hashing ---------------------------------------------

    def canonical(self) -> tuple:
        return tuple(sorted(self.terms.items(), key=lambda kv: monomial_key(kv[0])))

    def __eq__(self, other):
        return isinstance(other, Poly) and self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        return hash((self.ring, self.canonical()))

    # -- text form ---------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda kv: monomial_key(kv[0]), reverse=True)
        chunks = []
        for exp, coeff in items:
            mono = monomial_str(exp, self.ring)
            if mono == "1":
                body = str(abs(coeff))
            elif abs(coeff) == 1:
                body = mono
            else:
                body = f"{abs(coeff)}*{mono}"
            sign = "-" if coeff < 0 else "+"
            chunks.append((sign, body))
        first_sign, first_body = chunks[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in chunks[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"Poly({self})"

    @staticmethod
    def parse(text: str, ring: RingSpec) -> "Poly":
        return parse_poly(text, ring)


# ---------------------------------------------------------------------------
# text grammar: `3*x^2*y - 1/2*z`, `*` optional between factors
# ---------------------------------------------------------------------------

def tokenize(text: str) -> list:
    """Split into (kind, value) tokens; kinds: num, name, op."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "/" and j + 1 < n and text[j + 1].isdigit():
                k = j + 1
                while k < n and text[k].isdigit():
                    k += 1
                tokens.append(("num", Fraction(int(text[i:j]), int(text[j + 1:k]))))
                i = k
            else:
                tokens.append(("num", Fraction(int(text[i:j]))))
                i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j]))
            i = j
            continue
        if ch in "+-*^(),":
            tokens.append(("op", ch))
            i += 1
            continue
        raise ValueError(f"unexpected character {ch!r} in {text!r}")
    return tokens


class _PolyParser:
    def __init__(self, tokens, ring: RingSpec):
        self.tokens = tokens
        self.pos = 0
        self.ring = ring

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else ("end", None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse_sum(self) -> Poly:
        result = self.parse_signed_term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.take()
            term = self.parse_term()
            result = result + term if op == "+" else result - term
        return result

    def parse_signed_term(self) -> Poly:
        sign = 1
        while self.peek() in (("op", "+"), ("op", "-")):
            if self.take() == ("op", "-"):
                sign = -sign
        term = self.parse_term()
        return term if sign == 1 else -term

    def parse_term(self) -> Poly:
        result = self.parse_factor()
        while True:
            kind, val = self.peek()
            if (kind, val) == ("op", "*"):
                self.take()
                result = result * self.parse_factor()
            elif kind in ("num", "name") or (kind, val) == ("op", "("):
                result = result * self.parse_factor()
            else:
                return result

    def parse_factor(self) -> Poly:
        kind, val = self.take()
        if kind == "num":
            base = Poly.const(self.ring, val)
        elif kind == "name":
            base = Poly.variable(self.ring, self.ring.var_index(val))
        elif (kind, val) == ("op", "("):
            base = self.parse_sum()
            if self.take() != ("op", ")"):
                raise ValueError("expected closing parenthesis")
        else:
            raise ValueError(f"unexpected token {val!r} in polynomial")
        if self.peek() == ("op", "^"):
            self.take()
            kind, power = self.take()
            if kind != "num" or power.denominator != 1 or power < 0:
                raise ValueError("exponent must be a nonnegative integer")
            result = Poly.const(self.ring, 1)
            for _ in range(int(power)):
                result = result * base
            return result
        return base


def parse_poly(text: str, ring: RingSpec) -> Poly:
    parser = _PolyParser(tokenize(text), ring)
    result = parser.parse_sum()
    if parser.peek() != ("end", None):
        raise ValueError(f"trailing input in polynomial {text!r}")
    return result


# ---------------------------------------------------------------------------
# graded slices
# ---------------------------------------------------------------------------

def slice_basis(ring: RingSpec, poly_degree: int) -> list:
    """All exponent tuples of the given total degree, in graded-lex order."""
    if poly_degree < 0:
        raise ValueError("poly_degree must be nonnegative")
    d = ring.num_vars
    out = []

    def fill(prefix, remaining, slots):
        if slots == 1:
            out.append(tuple(prefix) + (remaining,))
            return
        for e in range(remaining, -1, -1):
            fill(prefix + [e], remaining - e, slots - 1)

    fill([], poly_degree, d)
    out.sort(key=monomial_key)
    return out


def slice_dim(num_vars: int, poly_degree: int) -> int:
    """Stars-and-bars count of monomials of total degree `poly_degree`."""
    from math import comb

    return comb(poly_degree + num_vars - 1, num_vars - 1)


# ---------------------------------------------------------------------------
# exact linear algebra
# ---------------------------------------------------------------------------

def rref_solve(rows: list, rhs: list, num_unknowns: int):
    """Solve rows * x = rhs over Fraction, free variables set to zero.

    `rows` is a list of dense lists of Fractions.  Returns the solution list
    or None when inconsistent.  Reduced row echelon form is unique, so the
    answer does not depend on the incoming row order.
    """
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    n_rows = len(m)
    pivot_of_col: dict = {}
    pr = 0
    for pc in range(num_unknowns):
        pivot_row = None
        for r in range(pr, n_rows):
            if m[r][pc] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        m[pr], m[pivot_row] = m[pivot_row], m[pr]
        inv = m[pr][pc]
        m[pr] = [v / inv for v in m[pr]]
        for r in range(n_rows):
            if r != pr and m[r][pc] != 0:
                f = m[r][pc]
                m[r] = [a - f * b for a, b in zip(m[r], m[pr])]
        pivot_of_col[pc] = pr
        pr += 1
        if pr == n_rows:
            break
    for r in range(pr, n_rows):
        if m[r][num_unknowns] != 0:
            return None
    sol = [Fraction(0)] * num_unknowns
    for pc, r in pivot_of_col.items():
        sol[pc] = m[r][num_unknowns]
    return sol


def solve_lift(columns: Sequence[Sequence[Poly]], target: Sequence[Poly],
               poly_degree_cap: Optional[int] = None):
    """Find polynomial coefficients c with sum_j columns[j]*c[j] == target.

    Each column and the target are vectors of Polys over a common ring.
    Unknown coefficients are supported on all monomials up to the cap
    (default: the maximum total degree appearing in the target); for graded
    inputs the system decouples by degree, so the answer is automatically
    homogeneous of the forced degree.  The solution is the unique one with
    all free variables of the reduced echelon form set to zero, unknowns
    ordered graded-lexicographically by monomial and then by column index.
    Returns None when no solution exists within the cap.
    """
    if not columns:
        return [] if all(t.is_zero() for t in target) else None
    ring = None
    for vec in list(columns) + [list(target)]:
        for p in vec:
            if ring is None:
                ring = p.ring
            elif p.ring != ring:
                raise RingError("solve_lift entries over mixed rings")
    n_rows = len(target)
    for vec in columns:
        if len(vec) != n_rows:
            raise ValueError("column length does not match target length")
    if all(t.is_zero() for t in target):
        return [Poly.zero(ring) for _ in columns]
    if poly_degree_cap is None:
        poly_degree_cap = max(t.total_degree() for t in target if not t.is_zero())

    # Unknowns: (column j, monomial m), ordered by (monomial graded-lex, j).
    target_max = max(t.total_degree() for t in target if not t.is_zero())
    monomials = []
    for d in range(poly_degree_cap + 1):
        monomials.extend(slice_basis(ring, d))
    unknowns = []
    for m in monomials:
        for j, vec in enumerate(columns):
            degs = [p.total_degree() for p in vec if not p.is_zero()]
            if not degs:
                continue  # zero column never contributes; coefficient stays 0
            if sum(m) + min(degs) <= max(target_max, poly_degree_cap):
                unknowns.append((j, m))
    unknowns.sort(key=lambda jm: (monomial_key(jm[1]), jm[0]))

    # Equations: one per (row, result monomial).
    equations: dict = {}
    for i, (j, m) in enumerate(unknowns):
        for r in range(n_rows):
            for e, c in columns[j][r].terms.items():
                mu = tuple(a + b for a, b in zip(e, m))
                eq = equations.setdefault((r, mu), {})
                eq[i] = eq.get(i, Fraction(0)) + c
    for r in range(n_rows):
        for mu in target[r].terms:
            equations.setdefault((r, mu), {})

    eq_keys = sorted(equations, key=lambda k: (k[0], monomial_key(k[1])))
    rows, rhs = [], []
    for key in eq_keys:
        r, mu = key
        row = [Fraction(0)] * len(unknowns)
        for i, c in equations[key].items():
            row[i] = c
        rows.append(row)
        rhs.append(target[r].terms.get(mu, Fraction(0)))

    sol = rref_solve(rows, rhs, len(unknowns))
    if sol is None:
        return None
    out = [Poly.zero(ring) for _ in columns]
    for i, (j, m) in enumerate(unknowns):
        if sol[i]:
            out[j] = out[j] + Poly.monomial(ring, m, sol[i])
    return out


def matrix_rank(columns: Sequence[Sequence[Fraction]]) -> int:
    """Rank of a matrix given by columns of Fractions."""
    if not columns:
        return 0
    n_rows = len(columns[0])
    m = [list(col) for col in columns]  # row-reduce the transpose
    rank = 0
    pivot_row = 0
    for c in range(n_rows):
        sel = None
        for r in range(pivot_row, len(m)):
            if m[r][c] != 0:
                sel = r
                break
        if sel is None:
            continue
        m[pivot_row], m[sel] = m[sel], m[pivot_row]
        inv = m[pivot_row][c]
        m[pivot_row] = [v / inv for v in m[pivot_row]]
        for r in range(len(m)):
            if r != pivot_row and m[r][c] != 0:
                f = m[r][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[pivot_row])]
        pivot_row += 1
        rank += 1
        if pivot_row == len(m):
            break
    return rank
