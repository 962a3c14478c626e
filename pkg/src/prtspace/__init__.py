"""Verification toolkit for probabilistic real-time reactive components.

Model component interfaces as probabilistic real-time state machines,
compile them to probabilistic timed automata, check bounded-reachability
probabilities on the digital-clocks MDP, simulate the moving-robot safety
scenario, and verify spatial collision properties over probability-annotated
occupancy specifications.
"""

__version__ = "0.1.0"

from .distributions import (
    DelayCdf,
    DelayPmf,
    HistogramBin,
    cdf_to_pmf,
    convolve,
    convolve_many,
    histogram,
    pmf_to_cdf,
    prob_at_most,
)
from .model import (
    Prtesm,
    PrtesmTransition,
    ParameterEvent,
    PtaCommand,
    PtaModule,
    PtaNetwork,
    network_of,
    prtesm_to_pta,
    saturate_clock_bound,
    validate_prtesm,
)
from .composer import DigitalMdp, compose
from .checker import (
    DensityResult,
    ReachabilityQuery,
    ReachabilityResult,
    check_bounded_reachability,
    density_sweep,
    min_max_gap,
    reach_staircase,
)

__all__ = [
    "__version__",
    "DelayCdf",
    "DelayPmf",
    "HistogramBin",
    "cdf_to_pmf",
    "pmf_to_cdf",
    "convolve",
    "convolve_many",
    "prob_at_most",
    "histogram",
    "Prtesm",
    "PrtesmTransition",
    "ParameterEvent",
    "PtaCommand",
    "PtaModule",
    "PtaNetwork",
    "network_of",
    "prtesm_to_pta",
    "saturate_clock_bound",
    "validate_prtesm",
    "DigitalMdp",
    "compose",
    "ReachabilityQuery",
    "ReachabilityResult",
    "DensityResult",
    "check_bounded_reachability",
    "density_sweep",
    "min_max_gap",
    "reach_staircase",
]
