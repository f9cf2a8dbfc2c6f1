"""Rooted bi-coloured trees indexing the order conditions of partitioned pairs.

Only a restricted family matters here: trees whose root is black and in which
no black vertex hangs below a white one (the white part of the flow does not
feed back into the black part).  For every such tree the pair must satisfy
``weight(tree) = 1 / density(tree)`` up to the target order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError
from .tableau import PartitionedTableau

BLACK = "black"
WHITE = "white"


@dataclass(frozen=True)
class BiColouredTree:
    """Rooted tree with black/white vertices; children are kept in canonical order."""

    colour: str
    children: tuple["BiColouredTree", ...] = ()

    def __post_init__(self):
        if self.colour not in (BLACK, WHITE):
            raise ConfigError(f"colour must be {BLACK!r} or {WHITE!r}")
        kids = tuple(sorted(self.children, key=lambda t: (t.order, t.serial)))
        object.__setattr__(self, "children", kids)
        object.__setattr__(self, "_order", 1 + sum(ch.order for ch in kids))
        tag = "b" if self.colour == BLACK else "w"
        if kids:
            tag += "[" + ",".join(ch.serial for ch in kids) + "]"
        object.__setattr__(self, "_serial", tag)

    @property
    def order(self) -> int:
        """Number of vertices."""
        return self._order

    @property
    def serial(self) -> str:
        """Canonical text form; equal serials mean equal trees."""
        return self._serial


def black(*children) -> BiColouredTree:
    return BiColouredTree(BLACK, tuple(children))


def white(*children) -> BiColouredTree:
    return BiColouredTree(WHITE, tuple(children))


def _colour_rule_holds(tree: BiColouredTree) -> bool:
    for ch in tree.children:
        if ch.colour == BLACK and tree.colour == WHITE:
            return False
        if not _colour_rule_holds(ch):
            return False
    return True


def is_admissible(tree: BiColouredTree) -> bool:
    """Black root, and the parent of every black vertex is black."""
    return tree.colour == BLACK and _colour_rule_holds(tree)


def _child_multisets(items, total, start=0):
    # items sorted by (order, serial); non-decreasing index choice dedupes multisets
    if total == 0:
        yield ()
        return
    for idx in range(start, len(items)):
        t = items[idx]
        if t.order > total:
            continue
        for rest in _child_multisets(items, total - t.order, idx):
            yield (t,) + rest


def enumerate_tpy(max_order: int) -> list[BiColouredTree]:
    """All admissible trees with at most ``max_order`` vertices, deduplicated.

    Sorted by (order, serial) so the output is deterministic.
    """
    if max_order < 1:
        raise ConfigError("max_order must be at least 1")
    white_trees: dict[int, list[BiColouredTree]] = {}
    for n in range(1, max_order):
        pool = sorted(
            (t for m in range(1, n) for t in white_trees[m]),
            key=lambda t: (t.order, t.serial),
        )
        white_trees[n] = [BiColouredTree(WHITE, ms) for ms in _child_multisets(pool, n - 1)]
    black_trees: dict[int, list[BiColouredTree]] = {}
    for n in range(1, max_order + 1):
        pool = sorted(
            (t for m in range(1, n) for t in black_trees[m] + white_trees[m]),
            key=lambda t: (t.order, t.serial),
        )
        black_trees[n] = [BiColouredTree(BLACK, ms) for ms in _child_multisets(pool, n - 1)]
    out = [t for n in range(1, max_order + 1) for t in black_trees[n]]
    return sorted(out, key=lambda t: (t.order, t.serial))


def density(tree: BiColouredTree) -> int:
    """Tree factorial: the order times the product of the children's densities."""
    out = tree.order
    for ch in tree.children:
        out *= density(ch)
    return out


def _stage_weights(pair: PartitionedTableau, tree: BiColouredTree) -> np.ndarray:
    # weight of the subtree as seen from each stage; black subtrees propagate
    # through the main matrix, white subtrees through the predictor matrix
    if tree.colour == BLACK:
        mat, leaf = pair.main.A, pair.main.c
    else:
        mat, leaf = pair.Ahat, pair.chat
    if not tree.children:
        return leaf
    inner = np.ones(pair.s)
    for ch in tree.children:
        inner = inner * _stage_weights(pair, ch)
    return mat @ inner


def elementary_weight(pair: PartitionedTableau, tree: BiColouredTree) -> float:
    """Coefficient the pair attaches to ``tree`` in its series expansion."""
    if not is_admissible(tree):
        raise ConfigError(f"tree {tree.serial} is outside the admissible family")
    inner = np.ones(pair.s)
    for ch in tree.children:
        inner = inner * _stage_weights(pair, ch)
    return float(pair.main.b @ inner)


@dataclass(frozen=True)
class OrderCondition:
    tree: str
    order: int
    weight: float
    target: Fraction
    residual: float


@dataclass(frozen=True)
class OrderReport:
    """Per-tree record of the order conditions up to a requested order."""

    pair: str
    order: int
    tol: float
    conditions: tuple[OrderCondition, ...]

    @property
    def passed(self) -> bool:
        return all(c.residual <= self.tol for c in self.conditions)

    @property
    def worst(self) -> OrderCondition:
        return max(self.conditions, key=lambda c: c.residual)

    def as_text(self) -> str:
        width = max(len(c.tree) for c in self.conditions)
        lines = [
            f"pair {self.pair}: {len(self.conditions)} conditions up to order {self.order}, tol {self.tol:g}",
            f"{'tree':<{width}}  ord  {'weight':>22}  {'target':>12}  {'residual':>10}  ok",
        ]
        for c in self.conditions:
            ok = "yes" if c.residual <= self.tol else "NO"
            lines.append(
                f"{c.tree:<{width}}  {c.order:>3}  {c.weight:>22.16f}  {str(c.target):>12}  {c.residual:>10.2e}  {ok}"
            )
        if self.passed:
            lines.append(f"PASS: all conditions up to order {self.order} hold")
        else:
            n_bad = sum(c.residual > self.tol for c in self.conditions)
            lines.append(f"FAIL: {n_bad} condition(s) violated; order >= {self.order} not certified")
        return "\n".join(lines)


def verify_order(pair: PartitionedTableau, p: int, tol: float) -> OrderReport:
    """Check every admissible tree of order <= p against its density.

    A failure means order p is not certified by these conditions; it does not
    by itself prove the order is lower.
    """
    if p < 1:
        raise ConfigError("order must be at least 1")
    if tol <= 0:
        raise ConfigError("tol must be positive")
    conditions = []
    for tree in enumerate_tpy(p):
        w = elementary_weight(pair, tree)
        target = Fraction(1, density(tree))
        conditions.append(
            OrderCondition(
                tree=tree.serial,
                order=tree.order,
                weight=w,
                target=target,
                residual=abs(w - float(target)),
            )
        )
    return OrderReport(pair=pair.name, order=p, tol=tol, conditions=tuple(conditions))
