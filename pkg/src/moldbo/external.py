"""Line protocol for evaluating objectives hosted in a child process.

The parent writes one request line per evaluation to the child's standard
input and reads exactly one response line from its standard output:

    request:  {"version": 1, "values": [0, 1, 0.25]}
    response: {"value": -3.5}

The child must flush after each response.  A missing response within the
timeout, a malformed response, or a dead child each raise a distinct error.
"""
from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass

PROTOCOL_VERSION = 1


class ExternalError(RuntimeError):
    """Base class for external-objective failures."""


class ExternalTimeoutError(ExternalError):
    """Child produced no response line within the timeout."""


class ProtocolError(ExternalError):
    """Child response was not a valid protocol line."""


class ProcessDiedError(ExternalError):
    """Child exited or closed its output before responding."""


@dataclass(frozen=True)
class ExternalObjective:
    """Description of a child-process objective."""

    command: tuple[str, ...]
    timeout: float = 60.0
    protocol_version: int = PROTOCOL_VERSION

    @staticmethod
    def from_command(command, timeout: float = 60.0) -> "ExternalObjective":
        if isinstance(command, str):
            command = tuple(command.split())
        return ExternalObjective(tuple(command), timeout)


class ExternalProcess:
    """A running child evaluating one request at a time."""

    def __init__(self, objective: ExternalObjective):
        self.objective = objective
        self._proc = subprocess.Popen(
            list(objective.command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )

    def alive(self) -> bool:
        return self._proc.poll() is None

    def evaluate(self, values) -> float:
        """One request/response round trip; kills the child on timeout."""
        if not self.alive():
            raise ProcessDiedError(
                f"child exited with {self._proc.returncode} before request "
                f"for values {list(values)!r}"
            )
        request = json.dumps(
            {
                "version": self.objective.protocol_version,
                "values": [v if isinstance(v, int) else float(v) for v in values],
            }
        )
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProcessDiedError(
                f"child pipe closed while sending values {list(values)!r}"
            ) from exc

        line = self._read_line(values)
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable response line {line!r}") from exc
        if not isinstance(payload, dict) or "value" not in payload:
            raise ProtocolError(f"response missing 'value': {line!r}")
        value = payload["value"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ProtocolError(f"non-numeric value in response: {line!r}")
        return float(value)

    def _read_line(self, values) -> str:
        result: queue.Queue = queue.Queue()

        def reader():
            try:
                result.put(self._proc.stdout.readline())
            except Exception as exc:  # pipe errors surface as a dead child
                result.put(exc)

        thread = threading.Thread(target=reader, daemon=True)
        thread.start()
        try:
            line = result.get(timeout=self.objective.timeout)
        except queue.Empty:
            self._proc.kill()
            raise ExternalTimeoutError(
                f"no response within {self.objective.timeout}s for values "
                f"{list(values)!r}"
            ) from None
        if isinstance(line, Exception) or line == "":
            raise ProcessDiedError(
                f"child closed its output while evaluating values {list(values)!r}"
            )
        return line

    def close(self) -> None:
        if self.alive():
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def evaluate_external(ext: ExternalObjective, values) -> float:
    """Spawn, evaluate one configuration, and shut down."""
    with ExternalProcess(ext) as proc:
        return proc.evaluate(values)
