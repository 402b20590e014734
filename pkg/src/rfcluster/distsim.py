"""Simulation of the distributed protocol.

Every node holds a slice of the data. Given a shared seed, each node derives
the same field draws, reports its local maximum per draw in a fixed 16-byte
message, and a coordinator takes the maximum of the local maxima.
"""
from __future__ import annotations

import json
import math
import socket
import struct
import threading
from dataclasses import dataclass

import numpy as np

from .core import DecisionReport, PointSet, Verdict
from .decider import verdict_for
from .errors import DimError, TransportError
from .fields import MASK64, FieldSpec, draw_field, evaluate, mix64

MESSAGE = struct.Struct("<IId")
HEADER = struct.Struct("<I")
VERDICT_CODES = {Verdict.YES: 0, Verdict.NO: 1, Verdict.FAIL: 2}
SOCKET_TIMEOUT = 60.0


@dataclass(frozen=True)
class NodeMessage:
    node_id: int
    field_index: int
    local_max: float

    def pack(self) -> bytes:
        return MESSAGE.pack(self.node_id, self.field_index, self.local_max)

    @classmethod
    def unpack(cls, data: bytes) -> "NodeMessage":
        return cls(*MESSAGE.unpack(data))


@dataclass(frozen=True)
class SessionConfig:
    seed: int
    field_spec: FieldSpec
    threshold_T: float
    n_draws: int
    prob_yes_C: float
    prob_no_M: float

    def __post_init__(self):
        if not (0 <= self.seed <= MASK64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_draws < 1:
            raise ValueError("n_draws must be >= 1")

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["field_spec"] = self.field_spec.to_dict()
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SessionConfig":
        d = json.loads(text)
        d["field_spec"] = FieldSpec.from_dict(d["field_spec"])
        return cls(**d)

    @classmethod
    def from_tune(cls, tune_result, dim: int, n_draws: int = 2000, seed: int = 42) -> "SessionConfig":
        from .decider import tuned_spec
        return cls(seed, tuned_spec(tune_result, dim), tune_result.best_T, n_draws,
                   tune_result.C, tune_result.M)


def node_local_max(local: PointSet, cfg: SessionConfig, field_index: int, node_id: int = 0) -> NodeMessage:
    """Maximum of draw ``field_index`` over the node's points (``-inf`` if it has none)."""
    if len(local) == 0:
        return NodeMessage(node_id, field_index, -math.inf)
    draw = draw_field(cfg.field_spec, mix64(cfg.seed, field_index))
    return NodeMessage(node_id, field_index, float(np.max(evaluate(draw, local.points))))


class Coordinator:
    """Keeps the running maximum per draw; arrival order does not matter."""

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.maxima = np.full(cfg.n_draws, -math.inf)
        self.bytes_received = 0
        self._lock = threading.Lock()

    def receive(self, frame: bytes):
        msg = NodeMessage.unpack(frame)
        if msg.field_index >= self.cfg.n_draws:
            raise TransportError(f"field index {msg.field_index} out of range", node_id=msg.node_id)
        with self._lock:
            self.bytes_received += len(frame)
            if msg.local_max > self.maxima[msg.field_index]:
                self.maxima[msg.field_index] = msg.local_max

    def report(self) -> DecisionReport:
        cfg = self.cfg
        P = float((self.maxima >= cfg.threshold_T).mean())
        spec = cfg.field_spec
        return DecisionReport(spec.param, cfg.threshold_T, cfg.prob_yes_C, cfg.prob_no_M, P,
                              verdict_for(P, cfg.prob_yes_C, cfg.prob_no_M), cfg.n_draws, cfg.seed,
                              spec.kind.value, spec.n_terms, self.bytes_received)


def _node_frames(local: PointSet, cfg: SessionConfig, node_id: int):
    for i in range(cfg.n_draws):
        yield node_local_max(local, cfg, i, node_id).pack()


def _run_in_process(partitions, cfg):
    coord = Coordinator(cfg)
    for node_id, part in enumerate(partitions):
        for frame in _node_frames(part, cfg, node_id):
            coord.receive(frame)
    return coord.report()


def _recv_exact(sock, n):
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("connection closed early")
        buf.extend(chunk)
    return bytes(buf)


def _run_tcp(partitions, cfg, port=0):
    coord = Coordinator(cfg)
    n_nodes = len(partitions)
    errors = []
    acks = {}
    done = threading.Barrier(n_nodes + 1)
    verdict_ready = threading.Event()
    result = {}

    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind(("127.0.0.1", port))
    server.listen(n_nodes)
    server.settimeout(SOCKET_TIMEOUT)
    addr = server.getsockname()
    header = cfg.to_json().encode()

    def handle(conn):
        try:
            with conn:
                conn.settimeout(SOCKET_TIMEOUT)
                conn.sendall(HEADER.pack(len(header)) + header)
                for _ in range(cfg.n_draws):
                    coord.receive(_recv_exact(conn, MESSAGE.size))
                done.wait()
                verdict_ready.wait(SOCKET_TIMEOUT)
                conn.sendall(bytes([VERDICT_CODES[result["report"].verdict]]))
        except Exception as exc:  # re-raised in the caller
            errors.append(TransportError(f"coordinator side: {exc}", node_id=None))
            done.abort()

    def node(node_id, part):
        try:
            with socket.create_connection(addr, timeout=SOCKET_TIMEOUT) as s:
                (n,) = HEADER.unpack(_recv_exact(s, HEADER.size))
                local_cfg = SessionConfig.from_json(_recv_exact(s, n).decode())
                for frame in _node_frames(part, local_cfg, node_id):
                    s.sendall(frame)
                acks[node_id] = _recv_exact(s, 1)[0]
        except Exception as exc:
            errors.append(TransportError(str(exc), node_id=node_id))

    def serve():
        handlers = []
        try:
            for _ in range(n_nodes):
                conn, _ = server.accept()
                t = threading.Thread(target=handle, args=(conn,), daemon=True)
                t.start()
                handlers.append(t)
            done.wait()
            result["report"] = coord.report()
        except Exception as exc:
            errors.append(TransportError(f"coordinator: {exc}", node_id=None))
            done.abort()
        finally:
            verdict_ready.set()
            for t in handlers:
                t.join(SOCKET_TIMEOUT)

    srv = threading.Thread(target=serve, daemon=True)
    srv.start()
    nodes = [threading.Thread(target=node, args=(i, p), daemon=True) for i, p in enumerate(partitions)]
    for t in nodes:
        t.start()
    for t in nodes:
        t.join()
    srv.join()
    server.close()
    if errors:
        raise errors[0]
    code = VERDICT_CODES[result["report"].verdict]
    if any(a != code for a in acks.values()) or len(acks) != n_nodes:
        raise TransportError("nodes received inconsistent verdict acks", node_id=None)
    return result["report"]


def run_simulation(partitions, cfg: SessionConfig, transport: str = "in_process", port: int = 0) -> DecisionReport:
    """Run the protocol over ``partitions`` and return the coordinator's report.

    ``transport`` is ``"in_process"`` (alias ``"inproc"``) or ``"tcp"``
    (loopback sockets; ``port=0`` picks a free port).
    """
    partitions = list(partitions)
    if not partitions:
        raise ValueError("need at least one partition")
    dim = cfg.field_spec.dim
    for i, p in enumerate(partitions):
        if p.dim != dim:
            raise DimError(f"partition {i} has dimension {p.dim}, field has {dim}")
    if sum(len(p) for p in partitions) == 0:
        raise ValueError("all partitions are empty")
    if cfg.prob_no_M - cfg.prob_yes_C <= 0:
        spec = cfg.field_spec
        return DecisionReport(spec.param, cfg.threshold_T, cfg.prob_yes_C, cfg.prob_no_M, None,
                              Verdict.FAIL, 0, cfg.seed, spec.kind.value, spec.n_terms, 0)
    if transport in ("in_process", "inproc"):
        return _run_in_process(partitions, cfg)
    if transport == "tcp":
        return _run_tcp(partitions, cfg, port)
    raise ValueError(f"unknown transport {transport!r}")


def random_partition(S: PointSet, n_nodes: int, seed: int = 0):
    """Split ``S`` into ``n_nodes`` random parts (some may be empty)."""
    rng = np.random.default_rng(seed)
    owner = rng.integers(0, n_nodes, len(S))
    return [S.subset(np.nonzero(owner == j)[0]) for j in range(n_nodes)]
