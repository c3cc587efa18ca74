"""Socket worker: newline-delimited JSON job protocol over TCP.

Client frames are ``{"type": "hello"}`` and ``{"type": "job", "id", "circuit",
"observable", "shots", "seed"}``. The worker answers ``capabilities``,
``result`` (``id``, ``value``, ``wall_ms``) or ``error`` (``id``, ``code``,
``message``) frames, one JSON object per line.
"""

from __future__ import annotations

import json
import os
import socket
import socketserver
import threading
import time
from dataclasses import asdict, dataclass

from .circuit import CircuitError, from_document, to_document
from .simulator import MAX_QUBITS, RunSpec, SimulationError, estimate_signed_expectation

PORT_ENV = "QCUT_WORKER_PORT"
DEFAULT_PORT = 7781
MAX_FRAME = 64 * 1024 * 1024


@dataclass(frozen=True)
class WorkerConfig:
    id: str = "worker"
    max_qubits: int = MAX_QUBITS
    supports_midmeas: bool = True
    parallelism: int = 1
    latency: float = 0.0  # artificial seconds added to every job

    def capabilities(self) -> dict:
        return {"type": "capabilities", "kind": "REMOTE_SIM", **asdict(self)}


def default_port() -> int:
    return int(os.environ.get(PORT_ENV, DEFAULT_PORT))


def parse_endpoint(text: str | None) -> tuple[str, int]:
    if not text:
        return "127.0.0.1", default_port()
    host, sep, port = str(text).rpartition(":")
    if not sep:
        return "127.0.0.1", int(port)
    return host or "127.0.0.1", int(port)


class RemoteError(RuntimeError):
    """A job failed on a remote worker or the worker was unreachable."""

    def __init__(self, message: str, code: str = "unreachable"):
        super().__init__(message)
        self.code = code


def _error(job_id, code: str, message: str) -> dict:
    return {"type": "error", "id": job_id, "code": code, "message": message}


def handle_frame(frame: dict, config: WorkerConfig, widths: list | None = None) -> dict:
    """Answer one decoded client frame."""
    kind = frame.get("type")
    if kind == "hello":
        return config.capabilities()
    job_id = frame.get("id")
    if kind != "job":
        return _error(job_id, "malformed", f"unknown frame type {kind!r}")
    try:
        circuit = from_document(frame["circuit"])
        observable = str(frame["observable"])
        shots = int(frame.get("shots", 0))
        seed = int(frame.get("seed", 0))
    except (KeyError, TypeError, ValueError, CircuitError) as exc:
        return _error(job_id, "malformed", str(exc))
    if widths is not None:
        widths.append(circuit.n_qubits)
    if circuit.n_qubits > config.max_qubits:
        return _error(job_id, "capacity_exceeded",
                      f"{circuit.n_qubits} qubits > max_qubits={config.max_qubits}")
    if circuit.has_measurements and not config.supports_midmeas:
        return _error(job_id, "capacity_exceeded", "mid-circuit measurement not supported")
    start = time.perf_counter()
    try:
        value = estimate_signed_expectation(RunSpec(circuit, observable, shots, seed))
    except (CircuitError, SimulationError, ValueError) as exc:
        return _error(job_id, "simulation_failed", str(exc))
    if config.latency:
        time.sleep(config.latency)
    wall_ms = int(round((time.perf_counter() - start) * 1000))
    return {"type": "result", "id": job_id, "value": value, "wall_ms": wall_ms}


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server: WorkerServer = self.server  # type: ignore[assignment]
        while True:
            try:
                line = self.rfile.readline(MAX_FRAME)
            except OSError:
                return
            if not line:
                return
            if not line.strip():
                continue
            try:
                frame = json.loads(line)
                if not isinstance(frame, dict):
                    raise ValueError("frame is not an object")
            except ValueError as exc:
                reply = _error(None, "malformed", str(exc))
            else:
                with server.slots:
                    reply = handle_frame(frame, server.config, server.received_widths)
            try:
                self.wfile.write((json.dumps(reply) + "\n").encode())
                self.wfile.flush()
            except OSError:
                return


class WorkerServer(socketserver.ThreadingTCPServer):
    """Threaded worker. ``received_widths`` records the width of every job frame."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], config: WorkerConfig = WorkerConfig()):
        super().__init__(address, _Handler)
        self.config = config
        self.received_widths: list[int] = []
        self.slots = threading.BoundedSemaphore(max(1, config.parallelism))

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> WorkerServer:
        """Serve on a background thread (for tests and demos)."""
        threading.Thread(target=self.serve_forever, daemon=True).start()
        return self


def serve_worker(listen: str | None = None, config: WorkerConfig = WorkerConfig()) -> None:
    """Blocking service loop."""
    with WorkerServer(parse_endpoint(listen), config) as server:
        server.serve_forever()


class RemoteClient:
    """One persistent connection to a worker."""

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.address = parse_endpoint(endpoint)
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._file = None

    def _connect(self):
        if self._sock is None:
            try:
                self._sock = socket.create_connection(self.address, timeout=self.timeout)
            except OSError as exc:
                raise RemoteError(f"cannot reach {self.address[0]}:{self.address[1]}: {exc}") from exc
            self._file = self._sock.makefile("rwb")

    def close(self):
        if self._sock is not None:
            try:
                self._file.close()
                self._sock.close()
            finally:
                self._sock = self._file = None

    def request(self, frame: dict) -> dict:
        self._connect()
        try:
            self._file.write((json.dumps(frame) + "\n").encode())
            self._file.flush()
            line = self._file.readline(MAX_FRAME)
        except OSError as exc:
            self.close()
            raise RemoteError(f"connection lost: {exc}") from exc
        if not line:
            self.close()
            raise RemoteError("connection closed by worker")
        return json.loads(line)

    def hello(self) -> dict:
        return self.request({"type": "hello"})

    def run(self, job) -> tuple[float, int]:
        """Execute a ``VariantJob`` remotely; returns ``(value, wall_ms)``."""
        reply = self.request({"type": "job", "id": job.job_id, "circuit": to_document(job.circuit),
                              "observable": job.observable, "shots": job.shots, "seed": job.seed})
        if reply.get("type") == "error":
            raise RemoteError(f"job {job.job_id}: {reply.get('code')}: {reply.get('message', '')}",
                              reply.get("code", "error"))
        if reply.get("type") != "result" or reply.get("id") != job.job_id:
            raise RemoteError(f"job {job.job_id}: unexpected reply {reply!r}", "protocol")
        return float(reply["value"]), int(reply["wall_ms"])

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
