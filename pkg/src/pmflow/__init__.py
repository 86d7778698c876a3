"""Batch parametric max-flow segmentation: grid cut solvers, supergraph
knitting, worker scheduling, and a binary cut-server protocol."""

from .grid import CAP_MAX, CutResult, GraphError, GridGraph, admit, cut_cost
from .parametric import (LambdaSchedule, SeedProblem, check_nested, instantiate,
                         solve_schedule_sequential)
from .rpc import WorkerClient, WorkerServer, call_remote, simulate_pipeline
from .scheduler import (SimulatedBackend, Task, ThreadedBackend, WorkerHandle,
                        brute_force_makespan, lpt_offline, run_dynamic, run_lpt,
                        run_static)
from .solvers import maxflow_pushrelabel, maxflow_reference
from .supergraph import (SupergraphLayout, apply_swap, build_lambda_supergraph,
                         build_seed_supergraph, join, solve_composite, split,
                         swap_decision)
from .wire import (Status, WireRequest, WireResponse, decode_request,
                   decode_response, encode_request, encode_response)

__version__ = "0.1.0"

__all__ = [
    "CAP_MAX", "CutResult", "GraphError", "GridGraph", "LambdaSchedule",
    "SeedProblem", "SimulatedBackend", "Status", "SupergraphLayout", "Task",
    "ThreadedBackend", "WireRequest", "WireResponse", "WorkerClient",
    "WorkerHandle", "WorkerServer", "admit", "apply_swap",
    "brute_force_makespan", "build_lambda_supergraph", "build_seed_supergraph",
    "call_remote", "check_nested", "cut_cost", "decode_request",
    "decode_response", "encode_request", "encode_response", "instantiate",
    "join", "lpt_offline", "maxflow_pushrelabel", "maxflow_reference",
    "run_dynamic", "run_lpt", "run_static", "simulate_pipeline",
    "solve_composite", "solve_schedule_sequential", "split", "swap_decision",
    "__version__",
]
