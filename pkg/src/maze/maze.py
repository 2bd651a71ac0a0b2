"""Grid mazes shaped as spanning trees.

Rooms are labelled with spreadsheet-like names: letters index the column
(A, B, ..., Z, AA, AB, ...) and numbers index the row, starting at 1.
"""
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

LABEL_PATTERN = re.compile(r"^([A-Z]+)([1-9][0-9]*)$")


class InvalidDimensions(ValueError):
    pass


class LabelParseError(ValueError):
    pass


class DisconnectedCells(ValueError):
    pass


def render_label(column: int, row: int) -> str:
    """Render a `(column, row)` pair, Excel style.

    ---
    Args:
        column: 0-based column index.
        row: 1-based row index.

    ---
    Returns:
        The room label, e.g. `(3, 5) -> "D5"` and `(26, 10) -> "AA10"`.
    """
    assert column >= 0, f"Negative column: {column}"
    assert row >= 1, f"Rows start at 1, got {row}"

    letters = []
    column += 1  # Bijective base-26.
    while column > 0:
        column, remainder = divmod(column - 1, 26)
        letters.append(chr(ord("A") + remainder))
    return "".join(reversed(letters)) + str(row)


def parse_label(text: str) -> tuple[int, int]:
    """Inverse of `render_label`."""
    match = LABEL_PATTERN.match(text.strip())
    if match is None:
        raise LabelParseError(f"Malformed room label: {text!r}")

    letters, digits = match.groups()
    column = 0
    for letter in letters:
        column = column * 26 + (ord(letter) - ord("A") + 1)
    return column - 1, int(digits)


class CellLabel(NamedTuple):
    column: int
    row: int

    def __str__(self) -> str:
        return render_label(self.column, self.row)

    @classmethod
    def parse(cls, text: str) -> "CellLabel":
        return cls(*parse_label(text))


Edge = tuple[CellLabel, CellLabel]


def make_edge(a: CellLabel, b: CellLabel) -> Edge:
    """Canonical orientation of an unordered pair: smaller endpoint first."""
    return (a, b) if a <= b else (b, a)


def are_grid_adjacent(a: CellLabel, b: CellLabel) -> bool:
    return abs(a.column - b.column) + abs(a.row - b.row) == 1


def grid_walls(n: int, m: int) -> list[Edge]:
    """Every 4-neighbourhood pair of the grid, in canonical order."""
    walls = []
    for column in range(n):
        for row in range(1, m + 1):
            cell = CellLabel(column, row)
            if row < m:
                walls.append((cell, CellLabel(column, row + 1)))
            if column < n - 1:
                walls.append((cell, CellLabel(column + 1, row)))
    return sorted(walls)


@dataclass(frozen=True)
class MazeGraph:
    """An undirected graph over the cells of an `n x m` grid.

    Generated mazes are spanning trees. Mazes rebuilt from a fact list
    can be forests, as only the described rooms are connected.
    """

    n: int
    m: int
    edges: frozenset[Edge]

    def __post_init__(self):
        for a, b in self.edges:
            assert a < b, f"Non canonical edge: {a}, {b}"
            assert self.contains(a) and self.contains(b), f"Edge outside grid: {a}-{b}"
            assert are_grid_adjacent(a, b), f"Cells {a} and {b} are not adjacent"

    def contains(self, cell: CellLabel) -> bool:
        return 0 <= cell.column < self.n and 1 <= cell.row <= self.m

    @property
    def cells(self) -> list[CellLabel]:
        return [
            CellLabel(column, row)
            for column in range(self.n)
            for row in range(1, self.m + 1)
        ]

    @cached_property
    def adjacency(self) -> dict[CellLabel, list[CellLabel]]:
        adjacency = {cell: [] for cell in self.cells}
        for a, b in sorted(self.edges):
            adjacency[a].append(b)
            adjacency[b].append(a)
        return adjacency

    def has_edge(self, a: CellLabel, b: CellLabel) -> bool:
        return make_edge(a, b) in self.edges

    @cached_property
    def rooted(self) -> tuple[dict[CellLabel, CellLabel | None], dict[CellLabel, int]]:
        """Parent pointers and depths, each component rooted at its smallest cell."""
        parents: dict[CellLabel, CellLabel | None] = {}
        depths: dict[CellLabel, int] = {}
        for root in self.cells:
            if root in parents:
                continue

            parents[root], depths[root] = None, 0
            queue = deque([root])
            while queue:
                cell = queue.popleft()
                for neighbour in self.adjacency[cell]:
                    if neighbour not in parents:
                        parents[neighbour] = cell
                        depths[neighbour] = depths[cell] + 1
                        queue.append(neighbour)

        return parents, depths


def build_maze(n: int, m: int, seed: int) -> MazeGraph:
    """Random spanning tree of the `n x m` grid using Kruskal's algorithm.

    All walls are shuffled by a generator seeded with `seed`, then accepted
    whenever they join two distinct components.

    ---
    Args:
        n: Number of columns.
        m: Number of rows.
        seed: Seed of the wall permutation.

    ---
    Returns:
        The maze, with exactly `n * m - 1` edges.
    """
    if n < 1 or m < 1:
        raise InvalidDimensions(f"Maze dimensions must be positive, got {n}x{m}")

    rng = np.random.default_rng(seed)
    walls = grid_walls(n, m)
    order = rng.permutation(len(walls))

    parent = {cell: cell for cell in MazeGraph(n, m, frozenset()).cells}

    def find(cell: CellLabel) -> CellLabel:
        while parent[cell] != cell:
            parent[cell] = parent[parent[cell]]  # Path halving.
            cell = parent[cell]
        return cell

    edges = set()
    for wall_id in order:
        a, b = walls[wall_id]
        root_a, root_b = find(a), find(b)
        if root_a != root_b:
            parent[root_a] = root_b
            edges.add((a, b))

    return MazeGraph(n, m, frozenset(edges))


def tree_path(maze: MazeGraph, a: CellLabel, b: CellLabel) -> list[CellLabel]:
    """The unique simple path from `a` to `b`, both included.

    Both ends climb their parent pointers until they meet.
    """
    for cell in (a, b):
        if not maze.contains(cell):
            raise ValueError(f"Cell {cell} is outside of the {maze.n}x{maze.m} grid")

    parents, depths = maze.rooted
    head, tail = [a], [b]
    while head[-1] != tail[-1]:
        if depths[head[-1]] >= depths[tail[-1]] and parents[head[-1]] is not None:
            head.append(parents[head[-1]])
        elif parents[tail[-1]] is not None:
            tail.append(parents[tail[-1]])
        else:
            raise DisconnectedCells(f"No path between {a} and {b}")

    return head + tail[-2::-1]


def reachable_cells(
    maze: MazeGraph, source: CellLabel, blocked: set[Edge] | frozenset[Edge]
) -> list[CellLabel]:
    """Cells reachable from `source` without crossing any `blocked` edge,
    in discovery order (source first).
    """
    seen = {source}
    order = [source]
    queue = deque([source])
    while queue:
        cell = queue.popleft()
        for neighbour in maze.adjacency[cell]:
            if neighbour not in seen and make_edge(cell, neighbour) not in blocked:
                seen.add(neighbour)
                order.append(neighbour)
                queue.append(neighbour)
    return order
