"""Expression-tree engine for arithmetic logit programs.

Programs are binary trees over {plus, minus, times, divide} with terminals
that are either embedding coordinates (``d<int>``) or real constants
(``[<real>]``). Division is protected: denominators with magnitude below a
threshold are replaced by the signed threshold, so evaluation of any finite
input is finite.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

__all__ = [
    "DEFAULT_EPSILON",
    "OPS",
    "BinOp",
    "Const",
    "Dim",
    "Node",
    "ParseError",
    "Program",
    "ProgramStats",
    "StructuralError",
    "evaluate",
    "evaluate_matrix",
    "parse",
    "serialize",
    "simplify",
    "stats",
    "visitation_length",
]

DEFAULT_EPSILON = 1e-6

OPS = ("plus", "minus", "times", "divide")


class StructuralError(ValueError):
    """A program references a coordinate outside the data it is applied to."""


class ParseError(ValueError):
    """Malformed program text. Carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


@dataclass(frozen=True, slots=True)
class Dim:
    index: int


@dataclass(frozen=True, slots=True)
class Const:
    value: float


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Dim, Const, BinOp]


@dataclass(frozen=True, slots=True)
class Program:
    """Immutable arithmetic expression tree."""

    root: Node

    def __str__(self) -> str:
        return serialize(self)


@dataclass(frozen=True)
class ProgramStats:
    node_count: int
    depth: int
    used_dims: frozenset[int]
    op_counts: dict[str, int]
    const_count: int

    @property
    def internal_count(self) -> int:
        return sum(self.op_counts.values())

    @property
    def terminal_count(self) -> int:
        return self.node_count - self.internal_count


def _protected_div(a: float, b: float, eps: float) -> float:
    if abs(b) >= eps:
        return a / b
    return a / (eps if b >= 0.0 else -eps)


def evaluate(program: Program, row, epsilon: float = DEFAULT_EPSILON) -> float:
    """Evaluate one program on a single row of coordinates."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    d = len(row)

    def ev(node: Node) -> float:
        if type(node) is Dim:
            if not 0 <= node.index < d:
                raise StructuralError(
                    f"coordinate d{node.index} out of range for row of length {d}"
                )
            return float(row[node.index])
        if type(node) is Const:
            return node.value
        a = ev(node.left)
        b = ev(node.right)
        op = node.op
        if op == "plus":
            return a + b
        if op == "minus":
            return a - b
        if op == "times":
            return a * b
        return _protected_div(a, b, epsilon)

    return ev(program.root)


def evaluate_matrix(program: Program, X, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Evaluate one program on every row of an n x d matrix at once."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    X = np.asarray(X)
    n, d = X.shape

    def ev(node: Node):
        if type(node) is Dim:
            if not 0 <= node.index < d:
                raise StructuralError(
                    f"coordinate d{node.index} out of range for matrix with d={d}"
                )
            return X[:, node.index].astype(np.float64, copy=False)
        if type(node) is Const:
            return np.float64(node.value)
        a = ev(node.left)
        b = ev(node.right)
        op = node.op
        if op == "plus":
            return a + b
        if op == "minus":
            return a - b
        if op == "times":
            return a * b
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            raw = a / b
            prot = a / np.where(b >= 0.0, epsilon, -epsilon)
            return np.where(np.abs(b) >= epsilon, raw, prot)

    out = ev(program.root)
    if np.ndim(out) == 0:
        return np.full(n, float(out), dtype=np.float64)
    return np.asarray(out, dtype=np.float64)


_TOKEN_WS = re.compile(r"\s*")
_TOKEN_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_TOKEN_REAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        self.pos = _TOKEN_WS.match(self.text, self.pos).end()

    def _fail(self, message: str):
        raise ParseError(message, self.pos)

    def _expect(self, char: str):
        self._skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != char:
            self._fail(f"expected {char!r}")
        self.pos += 1

    def parse_expr(self) -> Node:
        self._skip_ws()
        if self.pos >= len(self.text):
            self._fail("unexpected end of input")
        ch = self.text[self.pos]
        if ch == "[":
            return self._parse_const()
        m = _TOKEN_NAME.match(self.text, self.pos)
        if not m:
            self._fail(f"unexpected character {ch!r}")
        name = m.group(0)
        if name in OPS:
            self.pos = m.end()
            self._expect("(")
            left = self.parse_expr()
            self._skip_ws()
            if self.pos < len(self.text) and self.text[self.pos] == ")":
                self._fail(f"operator {name!r} takes two arguments")
            self._expect(",")
            right = self.parse_expr()
            self._skip_ws()
            if self.pos < len(self.text) and self.text[self.pos] == ",":
                self._fail(f"operator {name!r} takes two arguments")
            self._expect(")")
            return BinOp(name, left, right)
        if name[0] == "d" and name[1:].isdigit():
            self.pos = m.end()
            return Dim(int(name[1:]))
        self._fail(f"unknown token {name!r}")

    def _parse_const(self) -> Const:
        start = self.pos
        self.pos += 1  # consume '['
        self._skip_ws()
        m = _TOKEN_REAL.match(self.text, self.pos)
        if not m:
            self.pos = start
            self._fail("constant is not a real literal")
        value = float(m.group(0))
        self.pos = m.end()
        self._expect("]")
        return Const(value)

    def parse_program(self) -> Program:
        root = self.parse_expr()
        self._skip_ws()
        if self.pos != len(self.text):
            self._fail("trailing characters after expression")
        return Program(root)


def parse(text: str) -> Program:
    """Parse program text like ``plus(d618, minus(d303, [1.73]))``."""
    return _Parser(text).parse_program()


def _format_const(value: float) -> str:
    return repr(float(value))


def serialize(program: Program) -> str:
    """Canonical text form: single space after commas, shortest round-trip
    decimals for constants."""
    parts: list[str] = []

    def emit(node: Node):
        if type(node) is Dim:
            parts.append(f"d{node.index}")
        elif type(node) is Const:
            parts.append(f"[{_format_const(node.value)}]")
        else:
            parts.append(node.op)
            parts.append("(")
            emit(node.left)
            parts.append(", ")
            emit(node.right)
            parts.append(")")

    emit(program.root)
    return "".join(parts)


def iter_nodes(program: Program) -> Iterator[Node]:
    """Preorder traversal of all nodes."""
    stack = [program.root]
    while stack:
        node = stack.pop()
        yield node
        if type(node) is BinOp:
            stack.append(node.right)
            stack.append(node.left)


def stats(program: Program) -> ProgramStats:
    node_count = 0
    const_count = 0
    used: set[int] = set()
    op_counts = {op: 0 for op in OPS}
    max_depth = 0
    stack: list[tuple[Node, int]] = [(program.root, 0)]
    while stack:
        node, depth = stack.pop()
        node_count += 1
        if type(node) is BinOp:
            op_counts[node.op] += 1
            stack.append((node.right, depth + 1))
            stack.append((node.left, depth + 1))
        else:
            if depth > max_depth:
                max_depth = depth
            if type(node) is Dim:
                used.add(node.index)
            else:
                const_count += 1
    return ProgramStats(node_count, max_depth, frozenset(used), op_counts, const_count)


def visitation_length(program: Program) -> int:
    """Sum over nodes of their subtree sizes (an alternative complexity
    measure; node_count stays the normative one)."""

    total = 0

    def size(node: Node) -> int:
        nonlocal total
        if type(node) is BinOp:
            s = 1 + size(node.left) + size(node.right)
        else:
            s = 1
        total += s
        return s

    size(program.root)
    return total


def _is_zero(node: Node, tol: float) -> bool:
    return type(node) is Const and abs(node.value) <= tol


def _is_exact_zero(node: Node) -> bool:
    return type(node) is Const and node.value == 0.0


def _is_one(node: Node, tol: float) -> bool:
    return type(node) is Const and abs(node.value - 1.0) <= tol


def simplify(program: Program, tol: float = 1e-9) -> Program:
    """Constant folding, neutral-element elimination and double-negation
    collapse, bottom-up.

    Conservative by design: no distribution or factoring across protected
    division, so values never drift near the protection threshold. Constant
    folding assumes the default protection threshold. Node count never
    increases; semantics are preserved within ``tol`` relatively.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    def simp(node: Node) -> Node:
        if type(node) is not BinOp:
            return node
        left = simp(node.left)
        right = simp(node.right)
        op = node.op
        if type(left) is Const and type(right) is Const:
            a, b = left.value, right.value
            if op == "plus":
                return Const(a + b)
            if op == "minus":
                return Const(a - b)
            if op == "times":
                return Const(a * b)
            return Const(_protected_div(a, b, DEFAULT_EPSILON))
        if op == "plus":
            if _is_zero(left, tol):
                return right
            if _is_zero(right, tol):
                return left
        elif op == "minus":
            if _is_zero(right, tol):
                return left
            # 0 - (0 - x) -> x; requires exact zeros, which folding produces
            if (
                _is_exact_zero(left)
                and type(right) is BinOp
                and right.op == "minus"
                and _is_exact_zero(right.left)
            ):
                return right.right
        elif op == "times":
            if _is_exact_zero(left) or _is_exact_zero(right):
                return Const(0.0)
            if _is_one(left, tol):
                return right
            if _is_one(right, tol):
                return left
        else:  # divide
            if _is_exact_zero(left):
                return Const(0.0)
            if _is_one(right, tol):
                return left
        return BinOp(op, left, right)

    return Program(simp(program.root))
