from pathlib import Path

import pandas as pd

from src.dataset import read_jsonl, select_depth_bins, write_jsonl


def prepare_depth_sweep(
    pool_path: Path,
    out_path: Path,
    per_bin: int = 40,
    l_min: int = 10,
    l_max: int = 300,
    seed: int = 0,
):
    """Cut a generated pool into unit-depth bins of `per_bin` instances each.

    ---
    Args:
        pool_path (Path): JSON-Lines file of generated instances.
        out_path (Path): Where to write the selected instances.
            The number of instances per depth is written next to it, as a CSV.
        per_bin (int): Number of instances kept for every logical depth.
        l_min (int): Smallest logical depth kept.
        l_max (int): Largest logical depth kept.
        seed (int): Seed of the sampling within each bin.
    """
    pool = read_jsonl(pool_path)
    selected = select_depth_bins(pool, per_bin, l_min, l_max, seed)
    write_jsonl(selected, out_path)

    df = pd.DataFrame({"logical_depth": [task.logical_depth for task in selected]})
    counts = df.value_counts("logical_depth").sort_index().rename("instances")
    counts.to_csv(out_path.with_suffix(".bins.csv"))

    print(f"Kept {len(selected):,} out of {len(pool):,} instances")
    print(f"Depths covered: {len(counts)}, full bins: {(counts == per_bin).sum()}")


if __name__ == "__main__":
    PATH_TO_POOL = Path("./.data/depth_sweep/pool.jsonl")
    prepare_depth_sweep(PATH_TO_POOL, Path("./.data/depth_sweep/tasks.jsonl"))
