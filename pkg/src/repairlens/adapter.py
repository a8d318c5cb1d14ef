"""External repair processes: a line-delimited JSON protocol over stdio.

One request per line: {"constraints": [dc-text, ...], "table": {schema, rows}}.
One response per line: {"table": {schema, rows}} or {"error": text}.
Processes are long-running with a single in-flight call each; a pool of
processes serves concurrent callers. Running this module as a script serves
the built-in repairer over the same protocol (the self-adapter).
"""

from __future__ import annotations

import queue
import subprocess
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import wire
from .dc_lang import DenialConstraint, format_dc, parse_dc
from .errors import BlackBoxError, ContractError, RepairLensError
from .repair_engine import reference_repair
from .table_model import Table


@dataclass(frozen=True)
class AdapterConfig:
    """How to launch and talk to an external repairer."""

    command: tuple[str, ...]
    timeout: float = 30.0
    pool_size: int = 1

    def __post_init__(self):
        object.__setattr__(self, "command", tuple(self.command))
        if not self.command:
            raise ValueError("adapter command must not be empty")
        if self.timeout <= 0:
            raise ValueError("adapter timeout must be positive")
        if self.pool_size < 1:
            raise ValueError("adapter pool size must be >= 1")


def load_adapter_registry(path: Path) -> dict[str, AdapterConfig]:
    """Read a registry file mapping adapter names to configs."""
    doc = wire.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError("adapter registry must be an object of name -> config")
    registry = {}
    for name, cfg in doc.items():
        if not isinstance(cfg, dict) or "command" not in cfg:
            raise ValueError(f"adapter {name!r} needs a 'command' list")
        registry[name] = AdapterConfig(
            command=tuple(cfg["command"]),
            timeout=float(cfg.get("timeout", 30.0)),
            pool_size=int(cfg.get("pool_size", 1)),
        )
    return registry


class _AdapterProcess:
    """One external process; reads are pumped by a daemon thread so calls can
    time out without blocking."""

    def __init__(self, config: AdapterConfig):
        self.config = config
        try:
            self.proc = subprocess.Popen(
                config.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise BlackBoxError(f"cannot launch adapter {config.command[0]!r}: {exc}") from exc
        self.lines: queue.Queue[str] = queue.Queue()
        self._pump = threading.Thread(target=self._read_stdout, daemon=True)
        self._pump.start()

    def _read_stdout(self) -> None:
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            self.lines.put(line)

    def _fail(self, what: str) -> BlackBoxError:
        self.kill()
        stderr = ""
        if self.proc.stderr is not None:
            try:
                stderr = self.proc.stderr.read() or ""
            except (OSError, ValueError):
                stderr = ""
        detail = stderr.strip()[-2000:]
        suffix = f"; stderr: {detail}" if detail else ""
        return BlackBoxError(f"adapter {self.config.command[0]!r} {what}{suffix}")

    def call(self, request_line: str) -> str:
        try:
            assert self.proc.stdin is not None
            self.proc.stdin.write(request_line + "\n")
            self.proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise self._fail(f"rejected input ({exc})") from exc
        # short poll intervals so a dead process is noticed right away
        # instead of after the full timeout
        deadline = time.monotonic() + self.config.timeout
        while True:
            try:
                return self.lines.get(timeout=0.05)
            except queue.Empty:
                pass
            if self.proc.poll() is not None:
                try:
                    return self.lines.get_nowait()  # a final answer may have raced the exit
                except queue.Empty:
                    raise self._fail(f"exited with code {self.proc.returncode}") from None
            if time.monotonic() >= deadline:
                raise self._fail(f"timed out after {self.config.timeout}s") from None

    def kill(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                pass


class ExternalRepairAlgorithm:
    """RepairAlgorithm backed by a pool of external adapter processes.

    Each process serves one call at a time; callers block for a free process.
    A failed process is discarded and replaced lazily.
    """

    def __init__(self, config: AdapterConfig):
        self.config = config
        self._idle: queue.Queue[_AdapterProcess] = queue.Queue()
        self._lock = threading.Lock()
        self._spawned = 0
        self._verified = False

    def _acquire(self) -> _AdapterProcess:
        try:
            return self._idle.get_nowait()
        except queue.Empty:
            pass
        with self._lock:
            if self._spawned < self.config.pool_size:
                self._spawned += 1
                return _AdapterProcess(self.config)
        return self._idle.get()

    def _discard(self, proc: _AdapterProcess) -> None:
        proc.kill()
        with self._lock:
            self._spawned -= 1

    def __call__(self, constraints: Sequence[DenialConstraint], table: Table) -> Table:
        request = wire.dumps(
            {
                "constraints": [format_dc(dc) for dc in constraints],
                "table": wire.encode_table(table),
            }
        )
        proc = self._acquire()
        try:
            line = proc.call(request)
        except BlackBoxError:
            self._discard(proc)
            raise
        self._idle.put(proc)
        try:
            doc = wire.loads(line)
        except ValueError as exc:
            raise ContractError(f"adapter wrote malformed output: {exc}") from exc
        if not isinstance(doc, dict):
            raise ContractError("adapter response must be an object")
        if "error" in doc:
            raise BlackBoxError(f"adapter reported: {doc['error']}")
        if "table" not in doc:
            raise ContractError("adapter response missing 'table'")
        try:
            out = wire.decode_table(doc["table"])
        except (ValueError, RepairLensError) as exc:
            raise ContractError(f"adapter returned an invalid table: {exc}") from exc
        if out.schema != table.schema or out.n_rows != table.n_rows:
            raise ContractError("adapter changed the table shape")
        return out

    def verify(self) -> None:
        """Registration probe: the empty constraint set must be the identity,
        and a repeated call must give an identical answer."""
        if self._verified:
            return
        probe = Table(
            ("Team", "City"),
            (("A", "x"), ("A", "y"), ("B", "z")),
        )
        c1 = parse_dc("C1: !(t1.Team = t2.Team & t1.City != t2.City)")
        if self((), probe) != probe:
            raise ContractError("adapter is not the identity on an empty constraint set")
        first = self((c1,), probe)
        second = self((c1,), probe)
        if first != second:
            raise ContractError("adapter gave two different answers for one input")
        self._verified = True

    def close(self) -> None:
        while True:
            try:
                self._idle.get_nowait().kill()
            except queue.Empty:
                break

    def __enter__(self) -> "ExternalRepairAlgorithm":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve_stdio(stdin=None, stdout=None) -> None:
    """Answer adapter-protocol requests with the built-in repairer until EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            doc = wire.loads(line)
            constraints = [parse_dc(text) for text in doc["constraints"]]
            table = wire.decode_table(doc["table"])
            repaired = reference_repair(constraints, table)
            response = {"table": wire.encode_table(repaired)}
        except (RepairLensError, ValueError, KeyError, TypeError) as exc:
            response = {"error": f"{type(exc).__name__}: {exc}"}
        stdout.write(wire.dumps(response) + "\n")
        stdout.flush()


if __name__ == "__main__":
    serve_stdio()
