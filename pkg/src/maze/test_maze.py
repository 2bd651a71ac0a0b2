"""Test the maze generation and queries.

To run the tests, use the following command:
    `python3 -m pytest --import-mode importlib src/`
"""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from .maze import (
    CellLabel,
    InvalidDimensions,
    LabelParseError,
    MazeGraph,
    are_grid_adjacent,
    build_maze,
    make_edge,
    parse_label,
    render_label,
    tree_path,
)


def maze_from_pairs(n: int, m: int, pairs: list[tuple[str, str]]) -> MazeGraph:
    edges = frozenset(
        make_edge(CellLabel.parse(a), CellLabel.parse(b)) for a, b in pairs
    )
    return MazeGraph(n, m, edges)


def is_spanning_tree(maze: MazeGraph) -> bool:
    """Union-find check: `n*m - 1` edges and no edge closes a cycle."""
    parent = {cell: cell for cell in maze.cells}

    def find(cell):
        while parent[cell] != cell:
            cell = parent[cell]
        return cell

    for a, b in maze.edges:
        root_a, root_b = find(a), find(b)
        if root_a == root_b:
            return False
        parent[root_a] = root_b

    return len(maze.edges) == maze.n * maze.m - 1


@pytest.mark.parametrize(
    "column, row, label",
    [
        (0, 1, "A1"),
        (3, 5, "D5"),
        (25, 3, "Z3"),
        (26, 10, "AA10"),
        (27, 2, "AB2"),
        (49, 50, "AX50"),
        (701, 1, "ZZ1"),
        (702, 1, "AAA1"),
    ],
)
def test_render_label(column: int, row: int, label: str):
    assert render_label(column, row) == label
    assert parse_label(label) == (column, row)


@pytest.mark.parametrize("text", ["", "A", "1", "a1", "A0", "1A", "A-1", "A1B"])
def test_parse_label_errors(text: str):
    with pytest.raises(LabelParseError):
        parse_label(text)


@given(
    st.integers(min_value=0, max_value=5000), st.integers(min_value=1, max_value=500)
)
def test_label_bijection(column: int, row: int):
    label = render_label(column, row)
    assert parse_label(label) == (column, row)
    assert str(CellLabel.parse(label)) == label


@pytest.mark.parametrize(
    "n, m, seed",
    [
        (5, 5, 0),
        (5, 5, 123),
        (1, 1, 4),
        (1, 7, 2),
        (9, 1, 3),
        (40, 40, 7),
    ],
)
def test_build_maze(n: int, m: int, seed: int):
    maze = build_maze(n, m, seed)
    assert len(maze.edges) == n * m - 1
    assert is_spanning_tree(maze)
    assert all(are_grid_adjacent(a, b) for a, b in maze.edges)


@pytest.mark.parametrize("n, m", [(0, 5), (5, 0), (-1, 3)])
def test_build_maze_invalid(n: int, m: int):
    with pytest.raises(InvalidDimensions):
        build_maze(n, m, 0)


def test_build_maze_sweep():
    for seed in range(250):
        for size in [5, 10, 20]:
            assert is_spanning_tree(build_maze(size, size, seed))


def test_build_maze_deterministic():
    assert build_maze(12, 9, 42).edges == build_maze(12, 9, 42).edges
    assert build_maze(12, 9, 42).edges != build_maze(12, 9, 43).edges


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=1, max_value=50),
    st.integers(min_value=1, max_value=50),
    st.integers(min_value=0, max_value=2**64 - 1),
)
def test_build_maze_properties(n: int, m: int, seed: int):
    assert is_spanning_tree(build_maze(n, m, seed))


def test_tree_path_in_forest():
    maze = maze_from_pairs(
        5,
        5,
        [
            ("C4", "C3"),
            ("C3", "D3"),
            ("D5", "E5"),
            ("A2", "A1"),
            ("A3", "B3"),
            ("A1", "B1"),
            ("A4", "A3"),
            ("E5", "E4"),
            ("D4", "D3"),
            ("A5", "B5"),
            ("D4", "E4"),
        ],
    )
    path = tree_path(maze, CellLabel.parse("D5"), CellLabel.parse("C4"))
    assert [str(cell) for cell in path] == ["D5", "E5", "E4", "D4", "D3", "C3", "C4"]


def test_tree_path_trivial():
    maze = build_maze(6, 6, 1)
    cell = CellLabel(2, 3)
    assert tree_path(maze, cell, cell) == [cell]

    a, b = sorted(maze.edges)[0]
    assert tree_path(maze, a, b) == [a, b]


def test_tree_path_out_of_range():
    maze = build_maze(3, 3, 1)
    with pytest.raises(ValueError):
        tree_path(maze, CellLabel(0, 1), CellLabel(3, 1))


@settings(max_examples=80, deadline=None)
@given(
    st.integers(min_value=1, max_value=15),
    st.integers(min_value=1, max_value=15),
    st.integers(min_value=0, max_value=10_000),
    st.data(),
)
def test_tree_path_properties(n: int, m: int, seed: int, data: st.DataObject):
    maze = build_maze(n, m, seed)
    cells = st.sampled_from(maze.cells)
    a, b = data.draw(cells), data.draw(cells)

    path = tree_path(maze, a, b)
    assert path[0] == a and path[-1] == b
    assert len(set(path)) == len(path)
    assert all(maze.has_edge(u, v) for u, v in zip(path, path[1:]))
    assert tree_path(maze, b, a) == path[::-1]
