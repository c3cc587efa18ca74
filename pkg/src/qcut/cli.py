"""``qcut`` command line: run, findcut, bench, worker.

Exit codes: 0 ok, 2 configuration error, 3 infeasible cut constraints,
4 execution failure. Failures print one JSON object to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

from .bench import hea_plan, rc_plan, rows_to_csv, sweep
from .circuit import Circuit, CircuitError, parse_circuit, pauli_string
from .cutting import CutError, ReconstructionError, apply_cuts, cut_points_from_json, enumerate_variants, reconstruct
from .execution import (BackendDescriptor, ExecutionError, UnroutableJobError, load_backends,
                        local_backend, submit)
from .findcut import Constraints, InfeasibleError, search
from .generators import generate_hea, generate_rc
from .partition import PartitionError
from .remote import RemoteError, WorkerConfig, parse_endpoint, serve_worker
from .simulator import SimulationError

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_EXEC = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _ints(text: str, count: int | None, what: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated integers, got {text!r}") from None
    if count is not None and len(values) != count:
        raise ConfigError(f"{what}: expected {count} integers, got {text!r}")
    return values


def generate(spec: str, seed: int) -> Circuit:
    """Build a circuit from ``hea:n,L`` or ``rc:rows,cols,depth``."""
    kind, sep, args = spec.partition(":")
    kind = kind.strip().lower()
    if not sep:
        raise ConfigError(f"generator spec must look like hea:n,L or rc:r,c,d, got {spec!r}")
    try:
        if kind == "hea":
            return generate_hea(*_ints(args, 2, "hea"), seed=seed)
        if kind == "rc":
            return generate_rc(*_ints(args, 3, "rc"), seed=seed)
    except (CircuitError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown generator {kind!r} (expected hea or rc)")


def _json_arg(text: str):
    """Inline JSON, or a path to a JSON file."""
    path = Path(text)
    if not text.lstrip().startswith(("[", "{")) and path.is_file():
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None


def load_circuit(args) -> Circuit:
    if bool(args.gen) == bool(args.input):
        raise ConfigError("give exactly one of --gen or --input")
    if args.gen:
        return generate(args.gen, args.seed)
    try:
        return parse_circuit(Path(args.input).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {args.input}: {exc}") from None


def _backends(args) -> list[BackendDescriptor]:
    if args.backends:
        try:
            return load_backends(Path(args.backends).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.backends}: {exc}") from None
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return [local_backend(args.workers)]


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---- subcommands --------------------------------------------------------------------


def cmd_run(args) -> int:
    circuit = load_circuit(args)
    obs = pauli_string(args.obs or "Z" * circuit.n_qubits, circuit.n_qubits)
    if args.cuts is not None and args.findcut is not None:
        raise ConfigError("give at most one of --cuts and --findcut")
    if args.shots < 0:
        raise ConfigError("--shots must be >= 0")
    backends = _backends(args)
    search_info = None
    if args.findcut is not None:
        result = search(circuit, Constraints.parse(args.findcut), args.seed)
        plan = result.plan
        search_info = {"method": result.best.method, "mode": result.best.mode.value,
                       "loss": result.best.loss}
    else:
        cuts = cut_points_from_json(_json_arg(args.cuts)) if args.cuts is not None else []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            plan = apply_cuts(circuit, cuts)
    jobs = list(enumerate_variants(plan, obs, args.shots, args.seed))
    report = submit(jobs, backends)
    value = reconstruct(plan, report.results)

    out = _out_dir(args)
    result = {
        "circuit": circuit.name, "qubits": circuit.n_qubits, "observable": obs,
        "shots": args.shots, "seed": args.seed,
        "cuts": [c.to_dict() for c in plan.cuts], "n_cuts": len(plan.cuts),
        "fragment_widths": plan.fragment_widths, "n_jobs": len(jobs),
        "expectation": value, "search": search_info,
    }
    _dump(out / "result.json", result)
    _dump(out / "timing.json", {"makespan_s": report.makespan_s, "backends": report.stats_dict(),
                                "queue": report.queue})
    with open(out / "jobs.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["job_id", "assignment", "fragment", "width", "backend", "wall_ms", "value"])
        for job in jobs:
            r = report.results[job.job_id]
            writer.writerow([job.job_id, job.assignment, job.fragment, job.width, r.backend,
                             f"{r.wall_ms:.3f}", repr(r.value)])
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_findcut(args) -> int:
    circuit = load_circuit(args)
    constraints = Constraints.parse(args.findcut or "")
    result = search(circuit, constraints, args.seed)
    out = _out_dir(args)
    best = result.best
    plan = {"circuit": circuit.name, "qubits": circuit.n_qubits, "mode": best.mode.value,
            "method": best.method, "components": best.components, "n_cuts": best.n_cuts,
            "cuts": [c.to_dict() for c in best.cuts], "fragment_widths": result.plan.fragment_widths,
            "loss": best.loss, "n_jobs": result.plan.n_jobs}
    _dump(out / "plan.json", plan)
    (out / "candidates.csv").write_text(result.report_csv())
    summary = {"circuit": circuit.name, "qubits": circuit.n_qubits,
               "max_qubits": constraints.max_qubits, "method": best.method, "mode": best.mode.value,
               "cuts": best.n_cuts, "max_fragment_qubits": best.max_fragment_qubits,
               "search_s": round(result.wall_time, 6)}
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary), lineterminator="\n")
        writer.writeheader()
        writer.writerow(summary)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_bench(args) -> int:
    workers = _ints(args.workers, None, "--workers")
    rows = []
    if args.suite == "hea":
        for n in _ints(args.qubits, None, "--qubits"):
            plan = hea_plan(n, args.layers, args.cuts, args.seed)
            rows += sweep(plan, "HEA", workers, args.shots, args.seed, args.max_jobs)
    else:
        r, c, d = _ints(args.grid, 3, "--grid")
        plan = rc_plan(r, c, d, args.max_qubits, args.seed)
        rows += sweep(plan, "RC", workers, args.shots, args.seed, args.max_jobs)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_worker(args) -> int:
    config = WorkerConfig(args.id, args.max_qubits, not args.no_midmeas, args.parallelism, args.latency)
    host, port = parse_endpoint(args.listen)
    print(json.dumps({"listening": f"{host}:{port}", **config.capabilities()}), flush=True)
    serve_worker(f"{host}:{port}", config)
    return EXIT_OK


# ---- parser ----------------------------------------------------------------------------


def _circuit_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gen", help="generator spec: hea:n,L or rc:rows,cols,depth")
    p.add_argument("--input", help="circuit JSON document")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="qcut_out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcut", description="Distributed circuit cutting.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cut, execute and reconstruct an expectation value")
    _circuit_args(run)
    run.add_argument("--cuts", help="JSON cut list (inline or file)")
    run.add_argument("--findcut", help="constraints k=v,... for automatic cut search")
    run.add_argument("--obs", help="Pauli string, qubit 0 first (default all Z)")
    run.add_argument("--shots", type=int, default=1024, help="shots per job; 0 = exact")
    run.add_argument("--backends", help="JSON file with backend descriptors")
    run.add_argument("--workers", type=int, default=1, help="local worker processes")
    run.set_defaults(func=cmd_run)

    fc = sub.add_parser("findcut", help="search cut locations and write the candidate report")
    _circuit_args(fc)
    fc.add_argument("--findcut", default="", help="constraints k=v,...")
    fc.set_defaults(func=cmd_findcut)

    bench = sub.add_parser("bench", help="makespan versus local worker count")
    bench.add_argument("--suite", choices=["hea", "rc"], default="hea")
    bench.add_argument("--qubits", default="12", help="HEA qubit counts, comma-separated")
    bench.add_argument("--layers", type=int, default=1)
    bench.add_argument("--cuts", type=int, default=2, help="HEA ring cuts per layer")
    bench.add_argument("--grid", default="4,4,8", help="RC rows,cols,depth")
    bench.add_argument("--max-qubits", type=int, default=10, help="RC findcut bound")
    bench.add_argument("--workers", default="1,2,4,8")
    bench.add_argument("--shots", type=int, default=1024)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--max-jobs", type=int, default=512, help="variants timed per sweep")
    bench.add_argument("--out", help="CSV path (also printed)")
    bench.set_defaults(func=cmd_bench)

    worker = sub.add_parser("worker", help="serve jobs over TCP")
    worker.add_argument("--listen", help="host:port (default port from QCUT_WORKER_PORT)")
    worker.add_argument("--id", default="worker")
    worker.add_argument("--max-qubits", type=int, default=26)
    worker.add_argument("--no-midmeas", action="store_true")
    worker.add_argument("--parallelism", type=int, default=1)
    worker.add_argument("--latency", type=float, default=0.0)
    worker.set_defaults(func=cmd_worker)
    return parser


def _fail(code: int, kind: str, exc: BaseException) -> int:
    payload = {"error": kind, "message": str(exc)}
    for attr in ("binding", "job_id", "job_ids"):
        if hasattr(exc, attr):
            value = getattr(exc, attr)
            payload[attr] = value[:20] if isinstance(value, list) else value
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except InfeasibleError as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", exc)
    except UnroutableJobError as exc:
        return _fail(EXIT_EXEC, "unroutable", exc)
    except (ExecutionError, RemoteError, SimulationError, ReconstructionError) as exc:
        return _fail(EXIT_EXEC, "execution", exc)
    except (ConfigError, CircuitError, CutError, PartitionError, ValueError, OSError) as exc:
        return _fail(EXIT_CONFIG, "config", exc)


if __name__ == "__main__":
    sys.exit(main())
