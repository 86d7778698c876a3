"""Self-check battery behind ``pmflow verify``.

Each check re-derives a core guarantee from scratch on freshly generated
inputs: solver agreement, exhaustive minima, knit/split exactness, swap
algebra, nestedness, wire round trips, scheduling fixtures, the pipeline
model, and a real loopback server.  ``quick`` shrinks the sample counts,
not the coverage.
"""

from __future__ import annotations

import numpy as np

from ..grid import GridGraph, admit, cut_cost
from ..parametric import LambdaSchedule, SeedProblem, check_nested, solve_schedule_sequential
from ..rpc import WorkerClient, WorkerServer, simulate_pipeline
from ..scheduler import (brute_force_makespan, run_dynamic, run_lpt, run_static,
                         simulate_policy)
from ..solvers import maxflow_pushrelabel, maxflow_reference
from ..supergraph import apply_swap, join, solve_composite, split
from ..wire import (BadMagicError, FrameLengthError, WireRequest, decode_request,
                    encode_request)


def _random_grid(rng, max_side=6, cap_hi=10):
    w = int(rng.integers(1, max_side + 1))
    h = int(rng.integers(1, max_side + 1))
    n = w * h
    nbr = np.zeros((4, h, w), np.int64)
    nbr[0, :, 1:] = rng.integers(0, cap_hi + 1, (h, w - 1))
    nbr[1, :, :-1] = rng.integers(0, cap_hi + 1, (h, w - 1))
    nbr[2, 1:, :] = rng.integers(0, cap_hi + 1, (h - 1, w))
    nbr[3, :-1, :] = rng.integers(0, cap_hi + 1, (h - 1, w))
    return admit(GridGraph(w, h, rng.integers(0, cap_hi + 1, n),
                           rng.integers(0, cap_hi + 1, n), nbr.reshape(4, n)))


def _random_problem(rng, side=6):
    n = side * side
    pairwise = np.zeros((4, side, side), np.int64)
    pairwise[1, :, :-1] = rng.integers(0, 6, (side, side - 1))
    pairwise[0, :, 1:] = rng.integers(0, 6, (side, side - 1))
    pairwise[3, :-1, :] = rng.integers(0, 6, (side - 1, side))
    pairwise[2, 1:, :] = rng.integers(0, 6, (side - 1, side))
    return SeedProblem(width=side, height=side,
                       unary_base=rng.integers(0, 8, n),
                       unary_slope=rng.integers(0, 4, n),
                       sink_base=rng.integers(0, 30, n),
                       pairwise=pairwise.reshape(4, n),
                       fg_seeds=frozenset({0}), bg_seeds=frozenset({n - 1}))


def check_solver_oracle(rng, count):
    for _ in range(count):
        g = _random_grid(rng)
        a = maxflow_pushrelabel(g)
        b = maxflow_reference(g)
        if a.flow != b.flow or not np.array_equal(a.labels, b.labels):
            return False, f"solvers disagree on a {g.width}x{g.height} grid"
    return True, f"{count} random grids, flows and labels identical"

def check_brute_force(rng, count):
    for _ in range(count):
        g = _random_grid(rng, max_side=3, cap_hi=7)
        best = min(cut_cost(g, [(m >> p) & 1 for p in range(g.n)])
                   for m in range(1 << g.n))
        if maxflow_pushrelabel(g).flow != best:
            return False, f"flow differs from exhaustive minimum on {g.width}x{g.height}"
    return True, f"{count} grids match the exhaustive minimum"

def check_decomposition(rng, count):
    for _ in range(count):
        k = int(rng.integers(1, 5))
        graphs = [_random_grid(rng, max_side=5) for _ in range(k)]
        composite, layout = join(graphs, pad=True)
        parts = split(layout, solve_composite(composite, layout), graphs)
        for part, g in zip(parts, graphs):
            direct = maxflow_pushrelabel(g)
            if part.flow != direct.flow or not np.array_equal(part.labels, direct.labels):
                return False, "decoded constituent differs from direct solve"
    return True, f"{count} random batches decode exactly"

def check_swap(rng, count):
    for _ in range(count):
        g = _random_grid(rng)
        if not apply_swap(apply_swap(g)).equals(g):
            return False, "swap is not an involution"
        if maxflow_pushrelabel(apply_swap(g)).flow != maxflow_pushrelabel(g).flow:
            return False, "swap changed the max flow"
        composite, layout = join([apply_swap(g)], swapped=[True])
        part = split(layout, solve_composite(composite, layout), [g])[0]
        direct = maxflow_pushrelabel(g)
        if part.flow != direct.flow or not np.array_equal(part.labels, direct.labels):
            return False, "swapped segment decoded wrong"
    return True, f"{count} graphs: involution, flow invariance, exact decode"

def check_nestedness(rng, count):
    schedule = LambdaSchedule.default()
    for _ in range(count):
        result = solve_schedule_sequential(_random_problem(rng), schedule)
        ok, idx = check_nested(result)
        if not ok:
            return False, f"nestedness violated at schedule index {idx}"
    return True, f"{count} problems x {len(schedule)} lambdas, all nested"

def check_wire(rng, count):
    for _ in range(count):
        k = int(rng.integers(1, 4))
        graphs = [_random_grid(rng, max_side=4) for _ in range(k)]
        composite, layout = join(graphs, pad=True)
        req = WireRequest(int(rng.integers(0, 1 << 62)), composite, layout)
        if encode_request(decode_request(encode_request(req))) != encode_request(req):
            return False, "request round trip is not bit-identical"
    payload = encode_request(WireRequest(1, _random_grid(rng), None))
    try:
        decode_request(b"XXXX" + payload[4:])
        return False, "bad magic accepted"
    except BadMagicError:
        pass
    try:
        decode_request(payload[:-3])
        return False, "truncated payload accepted"
    except FrameLengthError:
        pass
    return True, f"{count} round trips bit-identical, malformed frames rejected"

def check_scheduling(rng, count):
    if simulate_policy(run_static, [3, 1, 3, 1], 2) != 6:
        return False, "static fixture makespan wrong"
    if simulate_policy(run_dynamic, [3, 1, 3, 1], 2) != 4:
        return False, "dynamic fixture makespan wrong"
    for _ in range(count):
        n = int(rng.integers(1, 8))
        m = int(rng.integers(1, 4))
        durs = [int(d) for d in rng.integers(1, 15, n)]
        opt = brute_force_makespan(durs, m)
        bound = (2 - 1 / m) * opt
        if simulate_policy(run_dynamic, durs, m) > bound + 1e-9:
            return False, f"dynamic broke the greedy bound on {durs} x{m}"
        if simulate_policy(run_lpt, durs, m) > bound + 1e-9:
            return False, f"lpt broke the greedy bound on {durs} x{m}"
    return True, f"fixtures exact, greedy bound held on {count} instances"

def check_pipeline_model():
    for t, c in ((4.0, 6.0), (6.0, 4.0), (3.0, 3.0)):
        done = simulate_pipeline(2, t, c, max_concurrent=2)[-1]
        if done != 2 * (t + c) - min(t, c):
            return False, "pipelined completion time off"
        if not done < 2 * (t + c) - 0.5 * min(t, c):
            return False, "pipelining bound violated"
    return True, "two-request overlap exact for three (transfer, solve) shapes"

def check_loopback(rng):
    graphs = [_random_grid(rng, max_side=4) for _ in range(2)]
    composite, layout = join(graphs, pad=True)
    want = solve_composite(composite, layout)
    with WorkerServer() as server:
        host, port = server.address
        client = WorkerClient.connect(f"{host}:{port}", timeout=30)
        try:
            got = client.solve(composite, layout)
        finally:
            client.close()
    if got.flow != want.flow or not np.array_equal(got.labels, want.labels):
        return False, "remote result differs from local"
    return True, "remote solve matches local bit for bit"


def run_battery(quick: bool = False, out=print) -> bool:
    rng = np.random.default_rng(2024)
    n = (lambda a, b: a if quick else b)
    checks = [
        ("solver_oracle", lambda: check_solver_oracle(rng, n(40, 150))),
        ("brute_force", lambda: check_brute_force(rng, n(10, 40))),
        ("decomposition", lambda: check_decomposition(rng, n(10, 30))),
        ("swap", lambda: check_swap(rng, n(10, 40))),
        ("nestedness", lambda: check_nestedness(rng, n(3, 10))),
        ("wire", lambda: check_wire(rng, n(20, 80))),
        ("scheduling", lambda: check_scheduling(rng, n(30, 120))),
        ("pipeline_model", check_pipeline_model),
        ("loopback", lambda: check_loopback(rng)),
    ]
    all_ok = True
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:
            ok, detail = False, f"crashed: {exc!r}"
        all_ok &= ok
        out(f"[{'ok' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
