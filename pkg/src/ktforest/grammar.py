"""Parsing for mixed expressions: polynomials, generators, and trees.

The element grammar extends the polynomial grammar with generator labels:
`2*xi1*pi1 - (x+y)*eta1*pi`.  Factors multiply in the written order through
the graded product, so transcribed tables keep their intended signs no
matter how the source orders its factors.  Trees are written `V(a,b)` with
nesting, a bare label being the trivial tree.
"""

from __future__ import annotations

from typing import Dict, Optional

from .forest import AlgebraElement, Node, canonicalize_node, leaf
from .poly import Poly, RingSpec, tokenize
from .resolution import GeneratorId, ModuleElement


class ParseError(ValueError):
    pass


class SymbolTable:
    """Resolves names to ring variables or generators."""

    def __init__(self, ring: RingSpec, generators: Dict[str, GeneratorId]):
        self.ring = ring
        self.generators = dict(generators)
        overlap = set(ring.names) & set(self.generators)
        if overlap:
            raise ParseError(f"names clash between variables and generators: {overlap}")

    def lookup(self, name: str):
        if name in self.ring.names:
            return ("var", self.ring.var_index(name))
        if name in self.generators:
            return ("gen", self.generators[name])
        raise ParseError(f"unknown name {name!r}")


class _ElementParser:
    def __init__(self, tokens, symbols: SymbolTable):
        self.tokens = tokens
        self.pos = 0
        self.symbols = symbols
        self.ring = symbols.ring

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else ("end", None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse_sum(self) -> AlgebraElement:
        result = self.parse_signed_term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            term = self.parse_term()
            result = result + term if op == "+" else result - term
        return result

    def parse_signed_term(self) -> AlgebraElement:
        sign = 1
        while self.peek() in (("op", "+"), ("op", "-")):
            if self.take() == ("op", "-"):
                sign = -sign
        term = self.parse_term()
        return term if sign == 1 else -term

    def parse_term(self) -> AlgebraElement:
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

    def parse_factor(self) -> AlgebraElement:
        kind, val = self.take()
        if kind == "num":
            base = AlgebraElement.scalar(Poly.const(self.ring, val))
        elif kind == "name":
            what, obj = self.symbols.lookup(val)
            if what == "var":
                base = AlgebraElement.scalar(Poly.variable(self.ring, obj))
            elif obj.module_degree < 0:
                base = AlgebraElement.from_tree(self.ring, leaf(obj))
            else:
                base = AlgebraElement.from_positive(self.ring, obj)
        elif (kind, val) == ("op", "("):
            base = self.parse_sum()
            if self.take() != ("op", ")"):
                raise ParseError("expected closing parenthesis")
        else:
            raise ParseError(f"unexpected token {val!r}")
        if self.peek() == ("op", "^"):
            self.take()
            kind, power = self.take()
            if kind != "num" or power.denominator != 1 or power < 0:
                raise ParseError("exponent must be a nonnegative integer")
            result = AlgebraElement.scalar(Poly.const(self.ring, 1))
            for _ in range(int(power)):
                result = result * base
            return result
        return base


def parse_element(text: str, symbols: SymbolTable) -> AlgebraElement:
    parser = _ElementParser(tokenize(text), symbols)
    result = parser.parse_sum()
    if parser.peek() != ("end", None):
        raise ParseError(f"trailing input in {text!r}")
    return result


def parse_module_element(text: str, symbols: SymbolTable) -> ModuleElement:
    elem = parse_element(text, symbols)
    return elem.module_part() if not elem.is_zero() else ModuleElement.zero(symbols.ring)


def parse_tree(text: str, symbols: SymbolTable) -> Optional[Node]:
    """Parse `V(a,b)` / nested / bare-label trees into a canonical node."""
    tokens = tokenize(text)
    pos = [0]

    def peek():
        return tokens[pos[0]] if pos[0] < len(tokens) else ("end", None)

    def take():
        tok = peek()
        pos[0] += 1
        return tok

    def decoration(name):
        what, obj = symbols.lookup(name)
        if what != "gen" or obj.module_degree >= 0:
            raise ParseError(f"tree decorations must be module generators: {name!r}")
        return obj

    def node():
        kind, val = take()
        if kind != "name":
            raise ParseError(f"expected a label or V(...), got {val!r}")
        if val == "V" and peek() == ("op", "("):
            take()
            children = [node()]
            while peek() == ("op", ","):
                take()
                children.append(node())
            if take() != ("op", ")"):
                raise ParseError("expected closing parenthesis in tree")
            return ("N", tuple(children))
        return leaf(decoration(val))

    raw = node()
    if peek() != ("end", None):
        raise ParseError(f"trailing input in tree {text!r}")
    cnode, _sign = canonicalize_node(raw)
    return cnode


def parse_hook_table(lines, symbols: SymbolTable) -> dict:
    """Parse `V(a,b) -> value` lines into a tree-to-module table."""
    table = {}
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise ParseError(f"hook line needs '->': {line!r}")
        tree_text, value_text = line.split("->", 1)
        node = parse_tree(tree_text.strip(), symbols)
        value = parse_module_element(value_text.strip(), symbols)
        if node is None:
            if not value.is_zero():
                raise ParseError(f"hook value on a vanishing tree: {line!r}")
            continue
        table[node] = value
    return table
