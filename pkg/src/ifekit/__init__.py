"""ifekit: parallel in-memory shortest-path query engine.

Breadth-first frontier expansion per source, morsel-driven workers, four
dispatch policies (1t1s, nt1s, ntks, ntkms), numba kernels with a pure
numpy fallback selected by the IFEKIT_BACKEND environment variable.
"""

from ._kernels import BACKENDS, select as select_backend
from .algorithms import LANE_WIDTH, MAX_DEPTH, UNREACHED, decode_set_bits
from .dispatcher import DispatchPolicy, MorselDispatcher, SourceTable
from .engine import QueryResult, QuerySpec, QueryStats, replay_run, run_query
from .errors import (
    CapacityError,
    DepthOverflowError,
    EdgeListParseError,
    IfeError,
    ParentArenaOverflowError,
    SnapshotFormatError,
    WorkloadError,
)
from .graph import (
    CsrGraph,
    generate_random_graph,
    load_edge_list,
    load_snapshot,
    save_snapshot,
)
from .oracle import (
    brute_force_all_shortest_paths,
    replay_policy_single_threaded,
    serial_ife_oracle,
)
from .parents import ParentStore

__version__ = "0.1.0"

__all__ = [
    "BACKENDS",
    "CapacityError",
    "CsrGraph",
    "DepthOverflowError",
    "DispatchPolicy",
    "EdgeListParseError",
    "IfeError",
    "LANE_WIDTH",
    "MAX_DEPTH",
    "MorselDispatcher",
    "ParentArenaOverflowError",
    "ParentStore",
    "QueryResult",
    "QuerySpec",
    "QueryStats",
    "SnapshotFormatError",
    "SourceTable",
    "UNREACHED",
    "WorkloadError",
    "brute_force_all_shortest_paths",
    "decode_set_bits",
    "generate_random_graph",
    "load_edge_list",
    "load_snapshot",
    "replay_policy_single_threaded",
    "replay_run",
    "run_query",
    "save_snapshot",
    "select_backend",
    "serial_ife_oracle",
    "__version__",
]
