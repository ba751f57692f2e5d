"""Symbol sequences with exact rational densities and bounded gap ratios.

The package builds infinite streams over a finite alphabet where every
symbol appears with an exact prescribed rational density and the ratio
between its largest and smallest occurrence gap is controlled:

* :mod:`quasireg.lowdisc` — earliest-deadline scheduling keeping every
  prefix count within one of its expectation,
* :mod:`quasireg.binary2qr` — gap ratio at most 2 for any finite rational
  distribution, via balanced-binary block assembly,
* :mod:`quasireg.epsqr` — gap ratio approaching 1 when all probabilities
  are small, via phase-aligned block colorings and sparse insertion,
* :mod:`quasireg.pinwheel` — application to pinwheel scheduling: exact
  solving of small instances and generation for dense ones,
* :mod:`quasireg.cli` — the ``quasireg`` command-line tool.
"""

from .seqcore import (
    ContractError,
    Dist,
    GapStats,
    StreamAnalyzer,
    SymbolGaps,
    check_min_gap_bound,
    discrepancy,
    empirical_density,
    gap_stats,
    qr_k,
    qr_observed,
)
from .lowdisc import (
    lowdisc_next,
    lowdisc_prefix,
    lowdisc_stream,
    lowdisc_window_check,
    window_counts,
)
from .binary2qr import (
    Assembly2QR,
    ConnectError,
    Frame,
    PBA,
    assemble_2qr,
    connect,
    frame_of,
    huffman_uniform,
    pba_decompose,
    pba_enumerate,
    pba_path,
    pba_step,
    verify_connection,
    verify_uniform,
)
from .epsqr import (
    BlockColoring,
    BlockParams,
    Coloring,
    EpsqrAssembly,
    assemble_epsqr,
    block_coloring,
    coarse_coloring,
    compose,
    expanded_sparse,
    sparse_coloring,
)
from .pinwheel import (
    UNSCHEDULABLE,
    PinwheelStream,
    Violation,
    density,
    generate_dense,
    solve_exact,
    verify_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "ContractError", "Dist", "GapStats", "StreamAnalyzer", "SymbolGaps",
    "check_min_gap_bound", "discrepancy", "empirical_density", "gap_stats",
    "qr_k", "qr_observed",
    "lowdisc_next", "lowdisc_prefix", "lowdisc_stream",
    "lowdisc_window_check", "window_counts",
    "Assembly2QR", "ConnectError", "Frame", "PBA", "assemble_2qr",
    "connect", "frame_of", "huffman_uniform", "pba_decompose",
    "pba_enumerate", "pba_path", "pba_step", "verify_connection",
    "verify_uniform",
    "BlockColoring", "BlockParams", "Coloring", "EpsqrAssembly",
    "assemble_epsqr", "block_coloring", "coarse_coloring", "compose",
    "expanded_sparse", "sparse_coloring",
    "UNSCHEDULABLE", "PinwheelStream", "Violation", "density",
    "generate_dense", "solve_exact", "verify_schedule",
    "__version__",
]
