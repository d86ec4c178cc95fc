"""Restricted expression grammar for coefficients and delay arguments.

The grammar is deliberately closed: constants, the time variable, sums,
products, quotients, sine, cosine, absolute value and scalar multiples.
Every coefficient or delay used by the bundled benchmark corpus is
representable, and suprema/infima of each node can be estimated honestly
by dense sampling.

Expressions serialize to/from a nested-array JSON form, e.g.

    ["+", ["const", 0.498], ["scale", 0.001, ["cos", ["t"]]]]

and the mapping is lossless in both directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class DomainError(ValueError):
    """Evaluation left the expression's domain (e.g. division by zero)."""


_KINDS = {"const", "t", "add", "mul", "div", "sin", "cos", "abs", "scale"}

_JSON_TAGS = {
    "add": "+",
    "mul": "*",
    "div": "/",
    "sin": "sin",
    "cos": "cos",
    "abs": "abs",
    "scale": "scale",
    "const": "const",
    "t": "t",
}
_TAG_KINDS = {v: k for k, v in _JSON_TAGS.items()}


@dataclass(frozen=True)
class Expr:
    """Immutable expression tree node.

    ``value`` holds the constant for ``const`` nodes and the multiplier for
    ``scale`` nodes; it is None otherwise.
    """

    kind: str
    value: float | None = None
    args: tuple["Expr", ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown expression kind {self.kind!r}")
        if self.kind in ("const", "scale") and self.value is None:
            raise ValueError(f"{self.kind} node requires a numeric value")
        arity = {"const": 0, "t": 0, "div": 2, "sin": 1, "cos": 1, "abs": 1, "scale": 1}
        if self.kind in arity and len(self.args) != arity[self.kind]:
            raise ValueError(f"{self.kind} node takes {arity[self.kind]} children, got {len(self.args)}")
        if self.kind in ("add", "mul") and len(self.args) < 1:
            raise ValueError(f"{self.kind} node needs at least one child")

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, t: float) -> float:
        """Evaluate at a single time in double precision.

        Raises DomainError on division by zero or a non-finite result.
        Deterministic: identical inputs give bit-identical outputs.
        """
        k = self.kind
        if k == "const":
            return self.value
        if k == "t":
            return t
        if k == "add":
            out = 0.0
            for c in self.args:
                out += c.evaluate(t)
            return out
        if k == "mul":
            out = 1.0
            for c in self.args:
                out *= c.evaluate(t)
            return out
        if k == "div":
            den = self.args[1].evaluate(t)
            if den == 0.0:
                raise DomainError(f"division by zero at t={t}")
            return self.args[0].evaluate(t) / den
        if k == "sin":
            return math.sin(self.args[0].evaluate(t))
        if k == "cos":
            return math.cos(self.args[0].evaluate(t))
        if k == "abs":
            return abs(self.args[0].evaluate(t))
        # scale
        return self.value * self.args[0].evaluate(t)

    def eval_array(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on a numpy array of times."""
        k = self.kind
        if k == "const":
            return np.full_like(ts, self.value, dtype=float)
        if k == "t":
            return np.asarray(ts, dtype=float).copy()
        if k == "add":
            out = self.args[0].eval_array(ts)
            for c in self.args[1:]:
                out = out + c.eval_array(ts)
            return out
        if k == "mul":
            out = self.args[0].eval_array(ts)
            for c in self.args[1:]:
                out = out * c.eval_array(ts)
            return out
        if k == "div":
            den = self.args[1].eval_array(ts)
            bad = np.nonzero(den == 0.0)[0]
            if bad.size:
                raise DomainError(f"division by zero at t={float(np.asarray(ts)[bad[0]])}")
            return self.args[0].eval_array(ts) / den
        if k == "sin":
            return np.sin(self.args[0].eval_array(ts))
        if k == "cos":
            return np.cos(self.args[0].eval_array(ts))
        if k == "abs":
            return np.abs(self.args[0].eval_array(ts))
        return self.value * self.args[0].eval_array(ts)

    # -- structure ----------------------------------------------------------

    def denominators(self) -> Iterator["Expr"]:
        """Yield the denominator subtree of every quotient node."""
        if self.kind == "div":
            yield self.args[1]
        for c in self.args:
            yield from c.denominators()

    def to_json(self):
        """Nested-array JSON form; inverse of :func:`parse_expr`."""
        k = self.kind
        if k == "const":
            return ["const", self.value]
        if k == "t":
            return ["t"]
        if k == "scale":
            return ["scale", self.value, self.args[0].to_json()]
        return [_JSON_TAGS[k]] + [c.to_json() for c in self.args]


# -- constructors ------------------------------------------------------------

def const(v: float) -> Expr:
    return Expr("const", float(v))


def tvar() -> Expr:
    return Expr("t")


def add(*args: Expr) -> Expr:
    return Expr("add", args=tuple(args))


def mul(*args: Expr) -> Expr:
    return Expr("mul", args=tuple(args))


def div(num: Expr, den: Expr) -> Expr:
    return Expr("div", args=(num, den))


def sin(e: Expr) -> Expr:
    return Expr("sin", args=(e,))


def cos(e: Expr) -> Expr:
    return Expr("cos", args=(e,))


def absval(e: Expr) -> Expr:
    return Expr("abs", args=(e,))


def scale(v: float, e: Expr) -> Expr:
    return Expr("scale", float(v), (e,))


def parse_expr(node) -> Expr:
    """Parse the nested-array JSON form into an Expr tree."""
    if not isinstance(node, (list, tuple)) or not node:
        raise ValueError(f"expression node must be a non-empty array, got {node!r}")
    tag = node[0]
    if tag == "const":
        if len(node) != 2 or not isinstance(node[1], (int, float)):
            raise ValueError(f"const node takes one number: {node!r}")
        return const(node[1])
    if tag == "t":
        if len(node) != 1:
            raise ValueError(f"t node takes no arguments: {node!r}")
        return tvar()
    if tag == "scale":
        if len(node) != 3 or not isinstance(node[1], (int, float)):
            raise ValueError(f"scale node takes a number and one child: {node!r}")
        return scale(node[1], parse_expr(node[2]))
    if tag not in _TAG_KINDS:
        raise ValueError(f"unknown expression tag {tag!r}")
    return Expr(_TAG_KINDS[tag], args=tuple(parse_expr(c) for c in node[1:]))


def evaluate(expr: Expr, t: float) -> float:
    """Module-level alias for Expr.evaluate."""
    return expr.evaluate(t)
