# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Boolean
=======

Boolean formula AST, evaluation, restriction and brute force solving.

Formulas are immutable trees of :class:`Var`, :class:`Not`, :class:`And`,
:class:`Or` and :class:`Const` nodes. Assignments are sequences of bits where
index 0 is the most significant position, so the lexicographic order on
assignments is the integer order on their truth table rows.

Truth tables are computed on ``torch.bool`` tensors, one entry per row.
"""

import json
import logging
from dataclasses import dataclass
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
    TypeVar,
    Union,
)

import torch

from torchselector.errors import ArityError, ConfigError, InstanceTooLarge
from torchselector.field import Rng

logger: logging.Logger = logging.getLogger(__name__)

MAX_BRUTE_FORCE_VARS: int = 24
TABLE_CHUNK_ROWS: int = 2**16


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Const:
    value: int

    def __post_init__(self) -> None:
        if self.value not in (0, 1):
            raise ArityError(f"constant must be 0 or 1, got {self.value}")


@dataclass(frozen=True)
class Not:
    child: "Node"


@dataclass(frozen=True)
class And:
    children: Tuple["Node", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ArityError("And needs at least two children")


@dataclass(frozen=True)
class Or:
    children: Tuple["Node", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ArityError("Or needs at least two children")


Node = Union[Var, Const, Not, And, Or]
T = TypeVar("T")


def node_children(node: Node) -> Tuple[Node, ...]:
    if isinstance(node, Not):
        return (node.child,)
    if isinstance(node, (And, Or)):
        return node.children
    return ()


def postorder(root: Node) -> List[Node]:
    """
    Every distinct node below ``root`` with children before parents. Walks
    with an explicit stack, so depth is bounded by memory only.
    """
    order: List[Node] = []
    seen: Set[int] = set()
    stack: List[Tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in reversed(node_children(node)):
            stack.append((c, False))
    return order


def fold_nodes(
    root: Node,
    visit: Callable[[Node, List[T]], T],
    order: Optional[List[Node]] = None,
) -> T:
    """
    Bottom-up evaluation of ``visit(node, child_values)`` over the tree.

    A child's value is dropped once its last parent has consumed it, so only
    the values on the current frontier are alive.

    Args:
        root: the root node
        visit: combines a node with the values of its children
        order: ``postorder(root)``, computed if omitted
    """
    if order is None:
        order = postorder(root)
    uses: Dict[int, int] = {}
    for node in order:
        for c in node_children(node):
            uses[id(c)] = uses.get(id(c), 0) + 1
    values: Dict[int, T] = {}
    for node in order:
        kids = node_children(node)
        args = [values[id(c)] for c in kids]
        for c in kids:
            uses[id(c)] -= 1
            if uses[id(c)] == 0:
                del values[id(c)]
        values[id(node)] = visit(node, args)
    return values[id(root)]


def _emit(
    root: Node,
    leaf: Callable[[Node], str],
    gate: Callable[[Node], Tuple[str, str, str]],
) -> str:
    # gate(node) -> (open, separator, close) around the rendered children
    parts: List[str] = []
    stack: List[Union[Node, str]] = [root]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
            continue
        kids = node_children(item)
        if not kids:
            parts.append(leaf(item))
            continue
        opening, sep, closing = gate(item)
        parts.append(opening)
        stack.append(closing)
        for i in range(len(kids) - 1, -1, -1):
            stack.append(kids[i])
            if i:
                stack.append(sep)
    return "".join(parts)


def _max_index(node: Node) -> int:
    stack = [node]
    best = -1
    while stack:
        cur = stack.pop()
        if isinstance(cur, Var):
            best = max(best, cur.index)
        elif isinstance(cur, Not):
            stack.append(cur.child)
        elif isinstance(cur, (And, Or)):
            stack.extend(cur.children)
    return best


@dataclass(frozen=True, eq=False, repr=False)
class Formula:
    """
    A Boolean formula over ``num_vars`` variable slots.

    Slots need not all occur in the tree; ``num_vars`` fixes the arity of the
    assignments the formula is evaluated on. Equality and hashing go through
    the canonical JSON text, so deep trees compare without recursion.

    Args:
        root: the root node
        num_vars: number of variable slots, every Var index must be below it
    """

    root: Node
    num_vars: int

    def __post_init__(self) -> None:
        if self.num_vars < 0:
            raise ArityError(f"num_vars must be >= 0, got {self.num_vars}")
        top = _max_index(self.root)
        if top >= self.num_vars:
            raise ArityError(f"variable {top} out of range for {self.num_vars} slots")

    def canonical(self) -> str:
        text = self.__dict__.get("_canonical")
        if text is None:
            text = formula_to_json(self)
            object.__setattr__(self, "_canonical", text)
        return text

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Formula):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        return f"Formula({describe(self)}, num_vars={self.num_vars})"


def var(index: int) -> Var:
    return Var(index)


def neg(node: Node) -> Node:
    return Not(node)


def conj(nodes: Sequence[Node]) -> Node:
    """
    And of ``nodes``; collapses the empty and unary cases.
    """
    nodes = list(nodes)
    if not nodes:
        return Const(1)
    if len(nodes) == 1:
        return nodes[0]
    return And(tuple(nodes))


def disj(nodes: Sequence[Node]) -> Node:
    """
    Or of ``nodes``; collapses the empty and unary cases.
    """
    nodes = list(nodes)
    if not nodes:
        return Const(0)
    if len(nodes) == 1:
        return nodes[0]
    return Or(tuple(nodes))


def literal(index: int, bit: int) -> Node:
    return Var(index) if bit else Not(Var(index))


def eval_formula(phi: Formula, a: Sequence[int]) -> int:
    """
    Evaluates ``phi`` on the assignment ``a``.

    Args:
        phi: the formula
        a: bits, one per variable slot

    Returns:
        0 or 1
    """
    if len(a) != phi.num_vars:
        raise ArityError(f"assignment of length {len(a)} for {phi.num_vars} slots")

    def visit(node: Node, args: List[int]) -> int:
        if isinstance(node, Var):
            return 1 if a[node.index] else 0
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Not):
            return 1 - args[0]
        if isinstance(node, And):
            return int(all(args))
        if isinstance(node, Or):
            return int(any(args))
        raise TypeError(f"unknown node {node!r}")

    return fold_nodes(phi.root, visit)


def cube_bits(n: int) -> torch.Tensor:
    """
    All points of {0,1}^n as a ``(2**n, n)`` int64 tensor in increasing order,
    column 0 most significant. Only for small ``n``; truth tables build their
    columns one variable at a time instead.
    """
    rows = torch.arange(2**n, dtype=torch.int64)
    if n == 0:
        return torch.zeros((1, 0), dtype=torch.int64)
    shifts = torch.arange(n - 1, -1, -1, dtype=torch.int64)
    return (rows[:, None] >> shifts[None, :]) & 1


def _table_chunk(
    phi: Formula, order: List[Node], start: int, stop: int
) -> torch.Tensor:
    n = phi.num_vars
    rows = torch.arange(start, stop, dtype=torch.int64)
    cols: Dict[int, torch.Tensor] = {}

    def visit(node: Node, args: List[torch.Tensor]) -> torch.Tensor:
        if isinstance(node, Var):
            col = cols.get(node.index)
            if col is None:
                col = ((rows >> (n - 1 - node.index)) & 1).bool()
                cols[node.index] = col
            return col
        if isinstance(node, Const):
            return torch.full((stop - start,), bool(node.value), dtype=torch.bool)
        if isinstance(node, Not):
            return ~args[0]
        out = args[0]
        for t in args[1:]:
            out = out & t if isinstance(node, And) else out | t
        return out

    return fold_nodes(phi.root, visit, order)


def _check_budget(phi: Formula) -> None:
    if phi.num_vars > MAX_BRUTE_FORCE_VARS:
        raise InstanceTooLarge(
            f"{phi.num_vars} variables exceeds brute-force budget {MAX_BRUTE_FORCE_VARS}"
        )


def _chunks(phi: Formula) -> List[Tuple[int, int]]:
    size = 2**phi.num_vars
    step = TABLE_CHUNK_ROWS
    return [(s, min(s + step, size)) for s in range(0, size, step)]


def truth_table(phi: Formula) -> torch.Tensor:
    """
    The truth table of ``phi`` as a ``torch.bool`` tensor of length
    ``2**num_vars``; row ``i`` is the assignment whose bits spell ``i`` with
    variable 0 most significant.

    Rows are evaluated ``TABLE_CHUNK_ROWS`` at a time, so peak memory beyond
    the result is bounded by the chunk size and the formula size.
    """
    _check_budget(phi)
    order = postorder(phi.root)
    return torch.cat([_table_chunk(phi, order, s, e) for s, e in _chunks(phi)])


def index_to_bits(index: int, n: int) -> Tuple[int, ...]:
    return tuple((index >> (n - 1 - i)) & 1 for i in range(n))


def bits_to_index(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | (1 if b else 0)
    return out


def lexmax_sat(phi: Formula) -> Tuple[int, ...]:
    """
    The lexicographically greatest satisfying assignment of ``phi``, or all
    zeros if ``phi`` is unsatisfiable. Scans chunks from the top row down and
    stops at the first satisfied one.
    """
    _check_budget(phi)
    order = postorder(phi.root)
    for start, stop in reversed(_chunks(phi)):
        rows = torch.nonzero(_table_chunk(phi, order, start, stop)).flatten()
        if rows.numel():
            return index_to_bits(start + int(rows.max()), phi.num_vars)
    return (0,) * phi.num_vars


def satisfiable(phi: Formula) -> bool:
    _check_budget(phi)
    order = postorder(phi.root)
    return any(bool(_table_chunk(phi, order, s, e).any()) for s, e in _chunks(phi))


def restrict(phi: Formula, index: int, bit: int) -> Formula:
    """
    Substitutes ``bit`` for variable ``index``, simplifies constants away and
    reindexes the remaining variables, leaving ``num_vars - 1`` slots.

    Args:
        phi: the formula
        index: the variable to fix
        bit: the value to fix it to
    """
    if not 0 <= index < phi.num_vars:
        raise ArityError(f"variable {index} out of range for {phi.num_vars} slots")
    value = 1 if bit else 0

    def visit(node: Node, args: List[Node]) -> Node:
        if isinstance(node, Var):
            if node.index == index:
                return Const(value)
            return Var(node.index - 1) if node.index > index else node
        if isinstance(node, Const):
            return node
        if isinstance(node, Not):
            child = args[0]
            if isinstance(child, Const):
                return Const(1 - child.value)
            if isinstance(child, Not):
                return child.child
            return Not(child)
        absorbing = 0 if isinstance(node, And) else 1
        kept: List[Node] = []
        for c in args:
            if isinstance(c, Const):
                if c.value == absorbing:
                    return Const(absorbing)
                continue
            kept.append(c)
        return conj(kept) if isinstance(node, And) else disj(kept)

    return Formula(fold_nodes(phi.root, visit), phi.num_vars - 1)


def node_to_dict(node: Node) -> Dict[str, Any]:
    def visit(n: Node, args: List[Dict[str, Any]]) -> Dict[str, Any]:
        if isinstance(n, Var):
            return {"op": "var", "index": n.index}
        if isinstance(n, Const):
            return {"op": "const", "value": n.value}
        if isinstance(n, Not):
            return {"op": "not", "children": args}
        return {"op": "and" if isinstance(n, And) else "or", "children": args}

    return fold_nodes(node, visit)


def node_from_dict(data: Dict[str, Any]) -> Node:
    out: List[Node] = []
    stack: List[Tuple[Any, bool]] = [(data, False)]
    while stack:
        item, expanded = stack.pop()
        try:
            op = item["op"]
            if not expanded:
                if op == "var":
                    out.append(Var(int(item["index"])))
                elif op == "const":
                    out.append(Const(int(item["value"])))
                elif op in ("not", "and", "or"):
                    children = item["children"]
                    if not isinstance(children, list):
                        raise ConfigError(f"{op} children must be a list")
                    stack.append((item, True))
                    stack.extend((c, False) for c in reversed(children))
                else:
                    raise ConfigError(f"unknown formula op {op!r}")
                continue
            k = len(item["children"])
            children = out[len(out) - k :]
            del out[len(out) - k :]
            if op == "not":
                if k != 1:
                    raise ConfigError(f"not takes exactly one child, got {k}")
                out.append(Not(children[0]))
            elif op == "and":
                out.append(And(tuple(children)))
            else:
                out.append(Or(tuple(children)))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed formula node: {e}") from e
    return out[0]


def formula_to_dict(phi: Formula) -> Dict[str, Any]:
    return {"num_vars": phi.num_vars, "root": node_to_dict(phi.root)}


def formula_from_dict(data: Dict[str, Any]) -> Formula:
    if "num_vars" not in data or "root" not in data:
        raise ConfigError("formula JSON needs 'num_vars' and 'root'")
    root = node_from_dict(data["root"])
    try:
        return Formula(root, int(data["num_vars"]))
    except ArityError as e:
        raise ConfigError(str(e)) from e


def _json_leaf(node: Node) -> str:
    if isinstance(node, Var):
        return f'{{"index":{node.index},"op":"var"}}'
    return f'{{"op":"const","value":{node.value}}}'


def _json_gate(node: Node) -> Tuple[str, str, str]:
    op = "not" if isinstance(node, Not) else "and" if isinstance(node, And) else "or"
    return ('{"children":[', ",", f'],"op":"{op}"}}')


def formula_to_json(phi: Formula) -> str:
    """
    Canonical JSON encoding: sorted keys, no whitespace. The text is emitted
    with an explicit stack; ``json.dumps`` recurses once per nesting level.
    """
    root = _emit(phi.root, _json_leaf, _json_gate)
    return f'{{"num_vars":{phi.num_vars},"root":{root}}}'


def formula_from_json(text: str) -> Formula:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid formula JSON: {e}") from e
    except RecursionError as e:
        raise ConfigError("formula JSON nested too deeply to parse") from e
    return formula_from_dict(data)


def encoded_size(phi: Formula) -> Tuple[int, int]:
    """
    Size of ``phi`` for downward self-reduction: ``(num_vars, len(json))``,
    compared lexicographically. Restriction always drops one slot, so the size
    strictly decreases even when constant substitution lengthens the text.
    """
    return (phi.num_vars, len(phi.canonical()))


def formula_from_truth_table(bits: Sequence[int], num_vars: int) -> Formula:
    """
    Canonical DNF realizing the given truth table.

    Args:
        bits: ``2**num_vars`` output bits, row order as in :func:`truth_table`
        num_vars: number of variable slots
    """
    if len(bits) != 2**num_vars:
        raise ArityError(f"truth table of length {len(bits)} for {num_vars} vars")
    rows = [i for i, b in enumerate(bits) if b]
    if not rows:
        return Formula(Const(0), num_vars)
    if len(rows) == len(bits):
        return Formula(Const(1), num_vars)
    terms = [
        conj([literal(j, b) for j, b in enumerate(index_to_bits(r, num_vars))])
        for r in rows
    ]
    return Formula(disj(terms), num_vars)


def all_templates(num_vars: int) -> List[Formula]:
    """
    One formula per Boolean function of ``num_vars`` variables (``num_vars <= 3``).
    """
    if num_vars > 3:
        raise InstanceTooLarge(f"template enumeration limited to 3 vars, got {num_vars}")
    size = 2**num_vars
    return [
        formula_from_truth_table(index_to_bits(f, size), num_vars)
        for f in range(2**size)
    ]


def random_formula(rng: Rng, num_vars: int, depth: int = 3) -> Formula:
    """
    A random formula over ``num_vars`` slots with at most ``depth`` levels of
    gates.
    """

    def build(level: int) -> Node:
        if level == 0 or rng.randrange(4) == 0:
            if num_vars == 0 or rng.randrange(8) == 0:
                return Const(rng.rand_bit())
            return literal(rng.randrange(num_vars), rng.rand_bit())
        kind = rng.randrange(3)
        if kind == 0:
            return Not(build(level - 1))
        children = tuple(build(level - 1) for _ in range(2 + rng.randrange(2)))
        return And(children) if kind == 1 else Or(children)

    return Formula(build(depth), num_vars)


def describe(phi: Formula, names: Optional[Sequence[str]] = None) -> str:
    """
    Human-readable rendering used in log messages.
    """

    def leaf(node: Node) -> str:
        if isinstance(node, Var):
            return names[node.index] if names else f"x{node.index}"
        return str(node.value)

    def gate(node: Node) -> Tuple[str, str, str]:
        if isinstance(node, Not):
            return ("~", "", "")
        return ("(", " & " if isinstance(node, And) else " | ", ")")

    return _emit(phi.root, leaf, gate)
