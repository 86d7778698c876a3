"""Dispatching batches of cut tasks to workers.

Three policies over one backend interface:

* ``run_static``: task i belongs to worker i mod n; each worker runs its
  class strictly in order.  No retry: the first failure aborts the batch.
* ``run_dynamic``: workers are tokens in a FIFO queue; the head token takes
  the next pending task and re-enters at the tail on completion.  A failed
  worker is retired and its task is re-dispatched once (to the front of the
  queue); a second failure of the same task aborts the batch.
* ``run_lpt``: longest-processing-time offline plan (sort by duration,
  greedily fill the least-loaded worker), then executed like static.

Backends: ``SimulatedBackend`` runs on a virtual clock using task durations
and supports scripted failures, so policy behavior is deterministic and
testable.  ``ThreadedBackend`` really executes tasks, locally in-process or
on remote cut servers.
"""

from __future__ import annotations

import heapq
import time
from collections import deque
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait as futures_wait
from dataclasses import dataclass, field

from .grid import CutResult, GridGraph
from .supergraph import SupergraphLayout, solve_composite


class SchedulerError(RuntimeError):
    pass


class WorkerFailure(SchedulerError):
    """A worker failed while executing a task."""


class BatchAborted(SchedulerError):
    """The policy gave up on the batch."""


@dataclass(frozen=True)
class Task:
    """One unit of work: solve a (composite) graph.  ``duration`` is the
    cost estimate used by the simulated backend and the LPT plan."""

    id: int
    graph: GridGraph | None = None
    layout: SupergraphLayout | None = None
    duration: int = 1


@dataclass(frozen=True)
class WorkerHandle:
    id: int
    kind: str = "local"  # "local" | "remote"
    endpoint: str | None = None
    slots: int = 1


@dataclass(frozen=True)
class TaskRecord:
    task_id: int
    worker_id: int
    start: float
    finish: float
    attempt: int = 1


@dataclass(frozen=True)
class TaskSchedule:
    records: tuple

    @property
    def makespan(self) -> float:
        return max((r.finish for r in self.records), default=0)

    def record_for(self, task_id: int) -> TaskRecord:
        for r in self.records:
            if r.task_id == task_id:
                return r
        raise KeyError(task_id)


@dataclass(frozen=True)
class Completion:
    task: Task
    worker: WorkerHandle
    attempt: int
    start: float
    finish: float
    cut: CutResult | None
    error: Exception | None


class SimulatedBackend:
    """Virtual-time executor.  Tasks take exactly ``task.duration`` ticks.

    ``failures`` is a set of (worker_id, task_id) pairs; a scripted failure
    consumes the full duration and surfaces as a WorkerFailure completion.
    Completions are delivered in (finish, submission order) order, so runs
    are fully deterministic.
    """

    def __init__(self, failures=()):
        self.failures = frozenset(failures)
        self.clock = 0
        self._heap = []
        self._seq = 0
        self._slot_free = {}

    def submit(self, worker: WorkerHandle, task: Task, attempt: int = 1) -> None:
        slots = self._slot_free.setdefault(worker.id, [0] * worker.slots)
        start = max(self.clock, heapq.heappop(slots))
        finish = start + task.duration
        heapq.heappush(slots, finish)
        err = None
        if (worker.id, task.id) in self.failures:
            err = WorkerFailure(f"worker {worker.id} failed on task {task.id}")
        comp = Completion(task, worker, attempt, start, finish, None, err)
        heapq.heappush(self._heap, (finish, self._seq, comp))
        self._seq += 1

    def wait_any(self) -> Completion:
        if not self._heap:
            raise SchedulerError("wait_any with nothing outstanding")
        finish, _, comp = heapq.heappop(self._heap)
        self.clock = max(self.clock, finish)
        return comp

    def close(self) -> None:
        self._heap.clear()


class ThreadedBackend:
    """Real executor: local tasks solve in-process, remote tasks go through
    a cut-server client.  One thread pool per worker, ``slots`` wide."""

    def __init__(self, local_solver=None, client_factory=None):
        self._solve = local_solver or (lambda t: solve_composite(t.graph, t.layout))
        self._client_factory = client_factory
        self._pools = {}
        self._clients = {}
        self._outstanding = {}
        self._t0 = time.monotonic()

    def _client(self, worker: WorkerHandle):
        if worker.id not in self._clients:
            factory = self._client_factory
            if factory is None:
                from .rpc import WorkerClient

                factory = WorkerClient.connect
            self._clients[worker.id] = factory(worker.endpoint)
        return self._clients[worker.id]

    def _now(self) -> float:
        return time.monotonic() - self._t0

    def _run(self, worker: WorkerHandle, task: Task, attempt: int) -> Completion:
        start = self._now()
        cut = None
        err = None
        try:
            if worker.kind == "remote":
                cut = self._client(worker).solve(task.graph, task.layout)
            else:
                cut = self._solve(task)
        except Exception as exc:
            err = exc if isinstance(exc, WorkerFailure) else WorkerFailure(str(exc))
            if err is not exc:
                err.__cause__ = exc
        return Completion(task, worker, attempt, start, self._now(), cut, err)

    def submit(self, worker: WorkerHandle, task: Task, attempt: int = 1) -> None:
        pool = self._pools.get(worker.id)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=worker.slots)
            self._pools[worker.id] = pool
        fut = pool.submit(self._run, worker, task, attempt)
        self._outstanding[fut] = None

    def wait_any(self) -> Completion:
        if not self._outstanding:
            raise SchedulerError("wait_any with nothing outstanding")
        done, _ = futures_wait(list(self._outstanding), return_when=FIRST_COMPLETED)
        fut = next(iter(done))
        del self._outstanding[fut]
        return fut.result()

    def close(self) -> None:
        for pool in self._pools.values():
            pool.shutdown(wait=True, cancel_futures=True)
        for client in self._clients.values():
            client.close()
        self._pools.clear()
        self._clients.clear()
        self._outstanding.clear()


def _run_classes(classes, backend):
    """Execute per-worker task lists, each class strictly in order.

    Shared by the static and LPT policies.  Any failure aborts the batch;
    completions already in flight are drained first so the backend is clean.
    """
    queues = {w.id: deque(ts) for w, ts in classes}
    workers = {w.id: w for w, _ in classes}
    records = []
    cuts = {}
    active = 0
    for w, _ in classes:
        q = queues[w.id]
        if q:
            backend.submit(w, q.popleft())
            active += 1
    failure = None
    while active:
        comp = backend.wait_any()
        active -= 1
        if comp.error is not None:
            failure = comp
            continue
        if failure is None:
            records.append(TaskRecord(comp.task.id, comp.worker.id,
                                      comp.start, comp.finish, comp.attempt))
            cuts[comp.task.id] = comp.cut
            q = queues[comp.worker.id]
            if q:
                backend.submit(workers[comp.worker.id], q.popleft())
                active += 1
    if failure is not None:
        raise BatchAborted(
            f"task {failure.task.id} failed on worker {failure.worker.id}; "
            "batch aborted without retry") from failure.error
    return TaskSchedule(tuple(records)), cuts


def run_static(tasks, workers, backend):
    """Fixed assignment: task i goes to worker i mod n, classes run in order."""
    tasks = list(tasks)
    workers = list(workers)
    if not workers:
        raise SchedulerError("no workers")
    classes = [(w, []) for w in workers]
    for i, t in enumerate(tasks):
        classes[i % len(workers)][1].append(t)
    return _run_classes(classes, backend)


def run_dynamic(tasks, workers, backend):
    """FIFO work queue: free workers take tasks in order; one retry per task."""
    pending = deque(tasks)
    workers = list(workers)
    if not workers:
        raise SchedulerError("no workers")
    avail = deque()
    for w in workers:
        avail.extend([w] * w.slots)
    records = []
    cuts = {}
    retried = set()
    dead = set()
    active = 0
    while pending or active:
        while pending and avail:
            w = avail.popleft()
            t = pending.popleft()
            backend.submit(w, t, attempt=2 if t.id in retried else 1)
            active += 1
        if active == 0:
            raise BatchAborted(f"{len(pending)} tasks pending and every worker retired")
        comp = backend.wait_any()
        active -= 1
        if comp.error is not None:
            # retire the whole worker, then give the task one more chance
            dead.add(comp.worker.id)
            avail = deque(w for w in avail if w.id not in dead)
            if comp.task.id in retried:
                raise BatchAborted(
                    f"task {comp.task.id} failed twice; batch aborted") from comp.error
            retried.add(comp.task.id)
            pending.appendleft(comp.task)
            continue
        records.append(TaskRecord(comp.task.id, comp.worker.id,
                                  comp.start, comp.finish, comp.attempt))
        cuts[comp.task.id] = comp.cut
        if comp.worker.id not in dead:
            avail.append(comp.worker)
    return TaskSchedule(tuple(records)), cuts


def lpt_offline(durations, n_machines: int):
    """Longest-processing-time plan: sort jobs by decreasing duration (stable),
    place each on the least-loaded machine, lower id breaking ties.

    Returns (assignment, loads): assignment[j] is the machine of job j.
    """
    if n_machines < 1:
        raise SchedulerError("need at least one machine")
    order = sorted(range(len(durations)), key=lambda j: -durations[j])
    loads = [0] * n_machines
    assignment = [0] * len(durations)
    for j in order:
        m = min(range(n_machines), key=lambda i: (loads[i], i))
        assignment[j] = m
        loads[m] += durations[j]
    return assignment, loads


def run_lpt(tasks, workers, backend):
    """Plan with ``lpt_offline`` on task durations, then execute per class."""
    tasks = list(tasks)
    workers = list(workers)
    if not workers:
        raise SchedulerError("no workers")
    assignment, _ = lpt_offline([t.duration for t in tasks], len(workers))
    classes = [(w, []) for w in workers]
    order = sorted(range(len(tasks)), key=lambda j: -tasks[j].duration)
    for j in order:
        classes[assignment[j]][1].append(tasks[j])
    return _run_classes(classes, backend)


def brute_force_makespan(durations, n_machines: int) -> int:
    """Exact optimal makespan by exhaustive assignment with pruning.

    Exponential; meant for instances of at most about a dozen jobs.
    """
    durations = sorted(durations, reverse=True)
    if not durations:
        return 0
    best = sum(durations)  # one machine does everything
    loads = [0] * n_machines

    def go(j, current_max):
        nonlocal best
        if current_max >= best:
            return
        if j == len(durations):
            best = current_max
            return
        seen = set()
        for m in range(n_machines):
            if loads[m] in seen:  # identical loads are symmetric
                continue
            seen.add(loads[m])
            loads[m] += durations[j]
            go(j + 1, max(current_max, loads[m]))
            loads[m] -= durations[j]

    go(0, 0)
    return best


def simulate_policy(policy, durations, n_machines: int) -> float:
    """Makespan of a policy on duration-only tasks under the virtual clock."""
    tasks = [Task(id=i, duration=d) for i, d in enumerate(durations)]
    workers = [WorkerHandle(id=i) for i in range(n_machines)]
    schedule, _ = policy(tasks, workers, SimulatedBackend())
    return schedule.makespan


def makespan_report(durations, n_machines: int, with_optimal: bool = True) -> dict:
    """Makespans (and ratios) of all policies on one instance.

    Numbers to look at, not to assert: relative policy quality varies by
    instance; only the greedy guarantee (at most 2 - 1/n times optimal for
    dynamic and LPT) is a theorem.
    """
    durations = list(durations)
    report = {
        "n_tasks": len(durations),
        "n_machines": n_machines,
        "static": simulate_policy(run_static, durations, n_machines),
        "dynamic": simulate_policy(run_dynamic, durations, n_machines),
        "lpt": simulate_policy(run_lpt, durations, n_machines),
    }
    if with_optimal:
        report["optimal"] = brute_force_makespan(durations, n_machines)
    base = report.get("optimal") or None
    if base:
        for k in ("static", "dynamic", "lpt"):
            report[f"{k}_over_optimal"] = report[k] / base
    if report["lpt"]:
        report["dynamic_over_lpt"] = report["dynamic"] / report["lpt"]
    return report
