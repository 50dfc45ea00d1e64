"""Numeric ListOps trees: random sampling, deterministic evaluation, prefix notation.

Grammar (bit-exact): node := integer | "[" OPNAME (space node)+ "]",
OPNAME one of SUM, MAX, MIN, MED.
"""

from __future__ import annotations

import random
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union

from .errors import ConfigError, ParseError


class NumericOp(Enum):
    SUM = "SUM"
    MAX = "MAX"
    MIN = "MIN"
    MED = "MED"


@dataclass(frozen=True)
class Atom:
    value: int


@dataclass(frozen=True)
class OpNode:
    op: NumericOp
    children: tuple["AstNode", ...]
    # Assigned in post-order over OpNodes; excluded from structural equality
    # so parse(to_prefix(t)) == t holds regardless of numbering provenance.
    node_id: int = field(default=-1, compare=False)
    anchor_name: str | None = field(default=None, compare=False)


AstNode = Union[Atom, OpNode]


@dataclass(frozen=True)
class TreeShapeConfig:
    max_ops: int = 8
    max_branch: int = 8
    min_arity: int = 4
    min_atom_val: int = 1
    max_atom_val: int = 30
    early_termination_probability: float = 0.0

    def validate(self) -> None:
        if self.max_ops < 1:
            raise ConfigError(f"max_ops must be >= 1, got {self.max_ops}")
        if self.min_arity < 1:
            raise ConfigError(f"min_arity must be >= 1, got {self.min_arity}")
        if self.min_arity > self.max_branch:
            raise ConfigError(
                f"min_arity ({self.min_arity}) exceeds max_branch ({self.max_branch})"
            )
        if self.min_atom_val > self.max_atom_val:
            raise ConfigError(
                f"min_atom_val ({self.min_atom_val}) exceeds max_atom_val ({self.max_atom_val})"
            )
        if not 0.0 <= self.early_termination_probability <= 1.0:
            raise ConfigError(
                "early_termination_probability must be in [0, 1], got "
                f"{self.early_termination_probability}"
            )


class _Slot:
    """Mutable node under construction; frozen into Atom/OpNode afterwards."""

    __slots__ = ("op", "children", "value")

    def __init__(self, op: NumericOp | None = None, value: int | None = None):
        self.op = op
        self.value = value
        self.children: list[_Slot] = []


def sample_ast(shape: TreeShapeConfig, rng: random.Random) -> AstNode:
    """Sample a random tree satisfying `shape`; deterministic for a given rng state.

    The root is always an operator. Growth expands a FIFO frontier of child
    slots: a slot becomes an operator while op budget remains with probability
    1 - early_termination_probability, else an atom.
    """
    shape.validate()
    ops = list(NumericOp)

    def new_op_slot() -> _Slot:
        slot = _Slot(op=rng.choice(ops))
        arity = rng.randint(shape.min_arity, shape.max_branch)
        slot.children = [_Slot() for _ in range(arity)]
        return slot

    root = new_op_slot()
    ops_used = 1
    frontier = deque(root.children)
    while frontier:
        slot = frontier.popleft()
        grow = (
            ops_used < shape.max_ops
            and rng.random() < 1.0 - shape.early_termination_probability
        )
        if grow:
            child = new_op_slot()
            slot.op, slot.children = child.op, child.children
            ops_used += 1
            frontier.extend(slot.children)
        else:
            slot.value = rng.randint(shape.min_atom_val, shape.max_atom_val)
    return _freeze(root)


def _freeze(slot: _Slot) -> AstNode:
    counter = [0]

    def build(s: _Slot) -> AstNode:
        if s.op is None:
            return Atom(s.value)
        children = tuple(build(c) for c in s.children)
        node = OpNode(s.op, children, node_id=counter[0])
        counter[0] += 1
        return node

    return build(slot)


def renumber(node: AstNode) -> AstNode:
    """Rebuild `node` with canonical post-order node_ids (0-based, OpNodes only)."""
    counter = [0]

    def build(n: AstNode) -> AstNode:
        if isinstance(n, Atom):
            return n
        children = tuple(build(c) for c in n.children)
        rebuilt = OpNode(n.op, children, node_id=counter[0], anchor_name=n.anchor_name)
        counter[0] += 1
        return rebuilt

    return build(node)


def eval_node(node: AstNode) -> int:
    """Deterministic post-order evaluation. MED is the lower middle of the sorted children."""
    if isinstance(node, Atom):
        return node.value
    values = [eval_node(c) for c in node.children]
    if node.op is NumericOp.SUM:
        return sum(values)
    if node.op is NumericOp.MAX:
        return max(values)
    if node.op is NumericOp.MIN:
        return min(values)
    return sorted(values)[(len(values) - 1) // 2]


def to_prefix(node: AstNode) -> str:
    if isinstance(node, Atom):
        return str(node.value)
    inner = " ".join(to_prefix(c) for c in node.children)
    return f"[{node.op.value} {inner}]"


def count_ops(node: AstNode) -> int:
    if isinstance(node, Atom):
        return 0
    return 1 + sum(count_ops(c) for c in node.children)


_INT_RE = re.compile(r"-?\d+$")


def parse_prefix(text: str) -> AstNode:
    """Parse prefix notation back into a tree; whitespace-tolerant.

    Raises ParseError (with byte offset) on unbalanced brackets, unknown or
    empty operators, and non-integer atoms. Node ids are assigned post-order.
    """
    pos = 0
    n = len(text)

    def skip_ws() -> None:
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def read_token() -> tuple[str, int]:
        nonlocal pos
        start = pos
        while pos < n and not text[pos].isspace() and text[pos] not in "[]":
            pos += 1
        return text[start:pos], start

    def parse_node() -> AstNode:
        nonlocal pos
        skip_ws()
        if pos >= n:
            raise ParseError("unexpected end of input", pos)
        if text[pos] == "]":
            raise ParseError("unexpected ']'", pos)
        if text[pos] == "[":
            bracket = pos
            pos += 1
            skip_ws()
            name, _ = read_token()
            if not name:
                raise ParseError("empty operator", bracket)
            try:
                op = NumericOp(name)
            except ValueError:
                raise ParseError(f"unknown operator {name!r}", bracket) from None
            children: list[AstNode] = []
            while True:
                skip_ws()
                if pos >= n:
                    raise ParseError("unbalanced brackets: missing ']'", bracket)
                if text[pos] == "]":
                    pos += 1
                    break
                children.append(parse_node())
            if not children:
                raise ParseError(f"operator {name} has no children", bracket)
            return OpNode(op, tuple(children))
        token, start = read_token()
        if not _INT_RE.match(token):
            raise ParseError(f"expected integer atom, got {token!r}", start)
        return Atom(int(token))

    node = parse_node()
    skip_ws()
    if pos < n:
        raise ParseError("unexpected trailing content", pos)
    return renumber(node)


def post_order_ops(node: AstNode) -> list[OpNode]:
    """OpNodes in post-order (children before parents), i.e. narrative order."""
    out: list[OpNode] = []

    def walk(n: AstNode) -> None:
        if isinstance(n, Atom):
            return
        for c in n.children:
            walk(c)
        out.append(n)

    walk(node)
    return out


def iter_nodes(node: AstNode) -> Iterator[AstNode]:
    """All nodes (atoms included) in post-order."""
    if isinstance(node, OpNode):
        for c in node.children:
            yield from iter_nodes(c)
    yield node


def node_depths(node: AstNode) -> dict[int, int]:
    """Depth (root = 0) of every OpNode, keyed by node_id."""
    depths: dict[int, int] = {}

    def walk(n: AstNode, d: int) -> None:
        if isinstance(n, Atom):
            return
        depths[n.node_id] = d
        for c in n.children:
            walk(c, d + 1)

    walk(node, 0)
    return depths
