import json
import socket

import pytest

from qcut.circuit import Circuit, gate, to_document
from qcut.cutting import CutPoint, apply_cuts, enumerate_variants
from qcut.execution import run_job
from qcut.generators import generate_hea
from qcut.remote import (
    DEFAULT_PORT,
    PORT_ENV,
    RemoteClient,
    RemoteError,
    WorkerConfig,
    WorkerServer,
    default_port,
    parse_endpoint,
)


@pytest.fixture
def server():
    s = WorkerServer(("127.0.0.1", 0), WorkerConfig(id="ona", max_qubits=5)).start()
    yield s
    s.shutdown()
    s.server_close()


def raw_exchange(endpoint, payload: bytes) -> dict:
    host, port = parse_endpoint(endpoint)
    with socket.create_connection((host, port), timeout=10) as sock:
        sock.sendall(payload)
        return json.loads(sock.makefile("rb").readline())


def test_handshake_advertises_capabilities():
    s = WorkerServer(("127.0.0.1", 0)).start()
    try:
        with RemoteClient(s.endpoint) as client:
            caps = client.hello()
        assert caps["type"] == "capabilities"
        assert caps["max_qubits"] == 26 and caps["supports_midmeas"] is True
    finally:
        s.shutdown()
        s.server_close()


def test_remote_equals_local_bit_for_bit(server):
    c = generate_hea(6, 1, seed=2)
    cz = [g.id for g in c.gates if len(g.qubits) == 2]
    plan = apply_cuts(c, [CutPoint.gate_cut(cz[2]), CutPoint.gate_cut(cz[5])])
    jobs = list(enumerate_variants(plan, "Z" * 6, 1024, 9))
    with RemoteClient(server.endpoint) as client:
        for job in jobs[:40]:
            value, wall_ms = client.run(job)
            assert value == run_job(job)
            assert wall_ms >= 0


def test_capacity_exceeded(server):
    frame = {"type": "job", "id": "big", "circuit": to_document(generate_hea(6, 1)),
             "observable": "Z" * 6, "shots": 0, "seed": 0}
    reply = raw_exchange(server.endpoint, (json.dumps(frame) + "\n").encode())
    assert reply == {"type": "error", "id": "big", "code": "capacity_exceeded", "message": reply["message"]}
    assert server.received_widths == [6]


def test_client_raises_on_error_frame(server):
    from qcut.cutting import VariantJob

    job = VariantJob("w", generate_hea(6, 1), "Z" * 6, 0, 0)
    with RemoteClient(server.endpoint) as client, pytest.raises(RemoteError) as info:
        client.run(job)
    assert info.value.code == "capacity_exceeded"


@pytest.mark.parametrize("payload, job_id", [
    (b"not json\n", None),
    (b'[1, 2]\n', None),
    (b'{"type": "job", "id": "m1"}\n', "m1"),
    (b'{"type": "job", "id": "m2", "circuit": {"qubits": 1, "gates": [["zz", [0]]]}, "observable": "Z"}\n', "m2"),
    (b'{"type": "dance", "id": "m3"}\n', "m3"),
])
def test_malformed_frames(server, payload, job_id):
    reply = raw_exchange(server.endpoint, payload)
    assert reply["type"] == "error" and reply["code"] == "malformed" and reply["id"] == job_id


def test_connection_survives_errors(server):
    good = {"type": "job", "id": "g", "circuit": to_document(Circuit.from_gates(1, [gate("x", [0])])),
            "observable": "Z", "shots": 0, "seed": 0}
    host, port = parse_endpoint(server.endpoint)
    with socket.create_connection((host, port), timeout=10) as sock:
        f = sock.makefile("rwb")
        f.write(b"garbage\n" + (json.dumps(good) + "\n").encode())
        f.flush()
        assert json.loads(f.readline())["code"] == "malformed"
        reply = json.loads(f.readline())
        assert reply["type"] == "result" and reply["value"] == -1.0


def test_result_frame_shape(server):
    good = {"type": "job", "id": "g", "circuit": to_document(Circuit.from_gates(1, [gate("x", [0])])),
            "observable": "Z", "shots": 0, "seed": 0}
    reply = raw_exchange(server.endpoint, (json.dumps(good) + "\n").encode())
    assert set(reply) == {"type", "id", "value", "wall_ms"}
    assert reply["id"] == "g" and reply["value"] == -1.0 and isinstance(reply["wall_ms"], int)


def test_default_port_from_env(monkeypatch):
    monkeypatch.delenv(PORT_ENV, raising=False)
    assert default_port() == DEFAULT_PORT
    monkeypatch.setenv(PORT_ENV, "9123")
    assert default_port() == 9123
    assert parse_endpoint(None) == ("127.0.0.1", 9123)
    assert parse_endpoint("example:80") == ("example", 80)
    assert parse_endpoint(":81") == ("127.0.0.1", 81)


def test_unreachable_raises_remote_error():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    with pytest.raises(RemoteError):
        RemoteClient(f"127.0.0.1:{port}", timeout=2).hello()
