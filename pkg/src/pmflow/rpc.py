"""Cut server and client speaking the length-prefixed binary format.

The server reads frames off each connection one at a time, but acquires a
bounded semaphore *before* reading the next frame: up to ``max_concurrent``
requests per connection may be in flight through the shared solver pool, and
the transport is paced beyond that.  Responses are written under a
per-connection lock and may complete out of order; clients match them back
up by task id.

Failure split: a frame that cannot be decoded gets an error response and the
connection is closed (the stream can no longer be trusted); a frame that
decodes but carries an inadmissible graph gets a nonzero status and the
connection stays open.

``simulate_pipeline`` is the virtual-time model of this arrangement, with a
serialized uplink, one solver resource, and a serialized downlink.  It is
deterministic, which makes latency-overlap claims testable without a clock.
"""

from __future__ import annotations

import itertools
import logging
import socket
import struct
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from heapq import heappop, heappush

from .grid import CutResult, GridGraph, admit, cut_cost
from .supergraph import SupergraphLayout, solve_composite
from .wire import (
    MAGIC,
    Status,
    WireError,
    WireRequest,
    WireResponse,
    decode_request,
    decode_response,
    encode_request,
    encode_response,
    frame,
    read_frame,
    status_for_exception,
)

log = logging.getLogger("pmflow.rpc")

DEFAULT_TIMEOUT = 120.0


class RpcError(RuntimeError):
    pass


class TransportError(RpcError):
    """The connection failed, closed early, or timed out."""


class RemoteStatusError(RpcError):
    """The server answered with a nonzero status."""

    def __init__(self, status: Status, message: str):
        super().__init__(message)
        self.status = status


class IntegrityError(RpcError):
    """The reported flow does not match the cost of the reported labels."""


def parse_endpoint(endpoint) -> tuple:
    if isinstance(endpoint, tuple):
        return endpoint[0], int(endpoint[1])
    host, sep, port = str(endpoint).rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
    return host, int(port)


def _peek_task_id(payload: bytes) -> int:
    """Best-effort task id from a frame that failed to decode."""
    if len(payload) >= 16 and payload[:4] == MAGIC:
        return struct.unpack_from("<Q", payload, 8)[0]
    return 0


class WorkerServer:
    """Serves cut requests over TCP until stopped."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 max_concurrent: int = 4, solver_threads: int = 2,
                 solve_fn=None):
        if max_concurrent < 1 or solver_threads < 1:
            raise ValueError("max_concurrent and solver_threads must be positive")
        self._host = host
        self._port = port
        self.max_concurrent = max_concurrent
        self._solve = solve_fn or solve_composite
        self._pool = ThreadPoolExecutor(max_workers=solver_threads)
        self._listener = None
        self._accept_thread = None
        self._conns = set()
        self._lock = threading.Lock()
        self._stopping = False

    @property
    def address(self) -> tuple:
        return self._listener.getsockname()[:2]

    def start(self) -> tuple:
        self._listener = socket.create_server((self._host, self._port))
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               name="pmflow-accept", daemon=True)
        self._accept_thread.start()
        log.info("listening on %s:%d", *self.address)
        return self.address

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    def _accept_loop(self):
        while not self._stopping:
            try:
                sock, peer = self._listener.accept()
            except OSError:
                break
            if self._stopping:
                sock.close()
                break
            log.debug("connection from %s", peer)
            with self._lock:
                self._conns.add(sock)
            threading.Thread(target=self._serve_conn, args=(sock,),
                             name="pmflow-conn", daemon=True).start()

    def _send(self, sock, wlock, resp: WireResponse) -> None:
        data = frame(encode_response(resp))
        try:
            with wlock:
                sock.sendall(data)
        except OSError:
            log.debug("peer went away while sending task %d", resp.task_id)

    def _solve_and_reply(self, sock, wlock, sem, req: WireRequest) -> None:
        try:
            try:
                g = admit(req.graph)
                cut = self._solve(g, req.layout)
                resp = WireResponse(req.task_id, Status.OK, cut.flow, cut.labels)
            except Exception as exc:
                status = status_for_exception(exc)
                if status == Status.INTERNAL:
                    log.exception("task %d failed", req.task_id)
                else:
                    log.info("task %d rejected: %s", req.task_id, exc)
                resp = WireResponse(req.task_id, status, 0, None)
            self._send(sock, wlock, resp)
        finally:
            sem.release()

    def _serve_conn(self, sock) -> None:
        reader = sock.makefile("rb")
        wlock = threading.Lock()
        sem = threading.BoundedSemaphore(self.max_concurrent)
        try:
            while not self._stopping:
                sem.acquire()  # pace the transport before touching the stream
                try:
                    payload = read_frame(reader)
                except WireError as exc:
                    self._send(sock, wlock, WireResponse(0, exc.status, 0, None))
                    return
                except (OSError, ValueError):
                    return
                if payload is None:
                    return
                try:
                    req = decode_request(payload)
                except WireError as exc:
                    self._send(sock, wlock, WireResponse(
                        _peek_task_id(payload), exc.status, 0, None))
                    return
                self._pool.submit(self._solve_and_reply, sock, wlock, sem, req)
        finally:
            reader.close()
            try:
                sock.close()
            except OSError:
                pass
            with self._lock:
                self._conns.discard(sock)

    def stop(self) -> None:
        self._stopping = True
        if self._listener is not None:
            try:
                # a blocked accept() is not interrupted by close(); poke it
                with socket.create_connection(self.address, timeout=1):
                    pass
            except OSError:
                pass
            try:
                self._listener.close()
            except OSError:
                pass
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=5)
        with self._lock:
            conns = list(self._conns)
        for sock in conns:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                sock.close()
            except OSError:
                pass
        self._pool.shutdown(wait=True)


@dataclass
class _Pending:
    n_pixels: int
    event: threading.Event = field(default_factory=threading.Event)
    response: WireResponse | None = None
    error: Exception | None = None


class WorkerClient:
    """One connection to a cut server; safe for concurrent solve() calls.

    Requests are written under a send lock; a reader thread matches the
    (possibly out-of-order) responses back to waiters by task id.  Every
    successful response is integrity-checked: the reported flow must equal
    the cut cost of the reported labels on the graph that was sent.
    """

    def __init__(self, sock, timeout: float = DEFAULT_TIMEOUT):
        self._sock = sock
        self.timeout = timeout
        self._ids = itertools.count(1)
        self._pending = {}
        self._lock = threading.Lock()
        self._send_lock = threading.Lock()
        self._closed = False
        self._reader = threading.Thread(target=self._read_loop,
                                        name="pmflow-client-reader", daemon=True)
        self._reader.start()

    @classmethod
    def connect(cls, endpoint, timeout: float = DEFAULT_TIMEOUT,
                connect_timeout: float = 10.0) -> "WorkerClient":
        host, port = parse_endpoint(endpoint)
        try:
            sock = socket.create_connection((host, port), timeout=connect_timeout)
        except OSError as exc:
            raise TransportError(f"cannot reach {host}:{port}: {exc}") from exc
        sock.settimeout(None)
        return cls(sock, timeout)

    def _read_loop(self) -> None:
        reader = self._sock.makefile("rb")
        error: Exception | None = None
        try:
            while True:
                payload = read_frame(reader)
                if payload is None:
                    break
                (tid,) = struct.unpack_from("<Q", payload)
                with self._lock:
                    entry = self._pending.pop(tid, None)
                if entry is None:
                    raise TransportError(f"response for unknown task {tid}; stream desynced")
                try:
                    entry.response = decode_response(payload, entry.n_pixels)
                except WireError as exc:
                    entry.error = TransportError(f"undecodable response: {exc}")
                entry.event.set()
        except Exception as exc:
            error = exc
        finally:
            reader.close()
            self._fail_pending(error or TransportError("connection closed"))

    def _fail_pending(self, exc: Exception) -> None:
        with self._lock:
            entries = list(self._pending.values())
            self._pending.clear()
        for entry in entries:
            entry.error = exc
            entry.event.set()

    def solve(self, graph: GridGraph, layout: SupergraphLayout | None = None,
              timeout: float | None = None) -> CutResult:
        if self._closed:
            raise TransportError("client is closed")
        tid = next(self._ids)
        entry = _Pending(graph.n)
        with self._lock:
            self._pending[tid] = entry
        data = frame(encode_request(WireRequest(tid, graph, layout)))
        try:
            with self._send_lock:
                self._sock.sendall(data)
        except OSError as exc:
            with self._lock:
                self._pending.pop(tid, None)
            raise TransportError(f"send failed: {exc}") from exc
        limit = self.timeout if timeout is None else timeout
        if not entry.event.wait(limit):
            with self._lock:
                self._pending.pop(tid, None)
            raise TransportError(f"task {tid}: no response within {limit} s")
        if entry.error is not None:
            raise entry.error if isinstance(entry.error, RpcError) \
                else TransportError(str(entry.error))
        resp = entry.response
        if resp.status != Status.OK:
            raise RemoteStatusError(
                resp.status, f"task {tid} refused: {resp.status.name}")
        if cut_cost(graph, resp.labels) != resp.flow:
            raise IntegrityError(
                f"task {tid}: labels cost {cut_cost(graph, resp.labels)} "
                f"but the server claims flow {resp.flow}")
        return CutResult(resp.flow, resp.labels)

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass
        self._reader.join(timeout=5)


def call_remote(endpoint, graph: GridGraph,
                layout: SupergraphLayout | None = None,
                timeout: float = DEFAULT_TIMEOUT) -> CutResult:
    """Connect, solve one graph, disconnect."""
    client = WorkerClient.connect(endpoint, timeout=timeout)
    try:
        return client.solve(graph, layout)
    finally:
        client.close()


def simulate_pipeline(n_requests: int, transfer: float, solve: float,
                      max_concurrent: int = 2, response_transfer: float = 0.0):
    """Completion times of n requests through the paced transport model.

    Three serialized resources: the uplink (``transfer`` per request), one
    solver (``solve``), and the downlink (``response_transfer``).  A request
    may not begin its uplink until fewer than ``max_concurrent`` requests are
    in flight, mirroring the server acquiring its semaphore before reading
    the next frame.  Purely arithmetic, so exact and deterministic.
    """
    if n_requests < 0 or transfer < 0 or solve < 0 or response_transfer < 0:
        raise ValueError("counts and durations must be non-negative")
    if max_concurrent < 1:
        raise ValueError("max_concurrent must be at least 1")
    uplink_free = 0.0
    solver_free = 0.0
    downlink_free = 0.0
    in_flight = []
    completions = []
    for _ in range(n_requests):
        gate = heappop(in_flight) if len(in_flight) >= max_concurrent else 0.0
        up_done = max(uplink_free, gate) + transfer
        uplink_free = up_done
        solve_done = max(solver_free, up_done) + solve
        solver_free = solve_done
        done = max(downlink_free, solve_done) + response_transfer
        downlink_free = done
        heappush(in_flight, done)
        completions.append(done)
    return tuple(completions)
