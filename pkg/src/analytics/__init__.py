from .bins import (
    BIN_KEYS,
    CSV_COLUMNS,
    BinSeries,
    UnknownInstance,
    aggregate_bins,
    bins_to_frame,
    first_violation_histogram,
    grouped_first_violation_histograms,
    violation_map,
    write_bins_csv,
)
from .fit import FitResult, InsufficientData, NonDecaying, fit_decay, fit_l0
from .metrics import (
    RunResult,
    lcs_matches,
    missed_critical,
    precision_recall,
    progress_ratio,
    score_run,
)
from .synthetic import binomial_bins, corrupting_solver
