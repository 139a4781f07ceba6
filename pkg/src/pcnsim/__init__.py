"""Seed-reproducible payment channel network simulator with balance-aware routing."""

from .engine import PaymentOutcome, RunLog, replay, run
from .errors import (
    ConfigError,
    EmptyLog,
    GenerationFailed,
    InsufficientBalance,
    InvalidParams,
    NoRoute,
    NoSuchChannel,
    PCNError,
    ReplayMismatch,
)
from .metrics import (
    Diameter,
    Histogram,
    MetricsReport,
    PathStats,
    all_pairs_path_length,
    capacity_histogram,
    count_below,
    diameter,
    feasible_hop_matrix,
    fraction_within,
    mean_hops,
    moving_avg_hops,
    network_imbalance,
    report,
    success_ratio,
)
from .network import Network, fund_uniform, new_random_regular
from .routing import (
    CommonWeight,
    FixedRandom,
    RouteResult,
    compute_weight,
    make_policy,
    select_route,
    shortest_path,
)
from .workload import (
    EndpointBinding,
    Payment,
    Workload,
    assign_connections,
    gen_balanced,
    gen_skewed,
)

__version__ = "0.1.0"
