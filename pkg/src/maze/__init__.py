from .maze import (
    CellLabel,
    DisconnectedCells,
    Edge,
    InvalidDimensions,
    LabelParseError,
    MazeGraph,
    are_grid_adjacent,
    build_maze,
    grid_walls,
    make_edge,
    parse_label,
    reachable_cells,
    render_label,
    tree_path,
)
