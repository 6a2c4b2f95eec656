"""Relay-network cut-set bounds, random-coding simulation and pipelined schedules."""

from .coding import (
    TypicalityConfig,
    distinguishability_set,
    lemma1_check,
    rate_sweep,
    run_experiment,
    theoretical_cut_exponent,
)
from .cuts import Cut, cut_value, enumerate_cuts, min_cut, optimize_distribution
from .errors import RelayNetError
from .gaussian import GaussianParams, cut_upper_bound, df_rate, gap
from .info import (
    InputDistribution,
    X,
    Y,
    YE,
    conditional_mutual_information,
    joint_entropy,
)
from .network import (
    Network,
    load_network,
    longest_path_and_layering,
    parse_network,
    render_network,
    steiner_reachability,
    toposort,
)
from .schedule import build_schedule, delay_report, forward_window_analysis, render_table

__version__ = "0.1.0"
