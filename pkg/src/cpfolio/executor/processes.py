"""Clocks and solver process handles for real and virtual time.

Under the virtual clock a solver is run to completion up front with
``CPFOLIO_VIRTUAL_CLOCK=1`` in its environment. Instead of sleeping it
prints ``% t=<seconds>`` markers; every following line is released to the
supervisor at launch time plus that offset. A final ``% stall`` line means
the solver would keep running silently until killed.
"""

from __future__ import annotations

import os
import queue
import re
import subprocess
import threading
import time
from typing import Sequence

VIRTUAL_ENV_VAR = "CPFOLIO_VIRTUAL_CLOCK"

_MARKER = re.compile(r"%\s*t=([0-9]*\.?[0-9]+)\s*\Z")
_STALL = "% stall"


class VirtualClock:
    def __init__(self, tick_ms: int = 100):
        self.tick_ms = tick_ms
        self.now_ms = 0

    def advance(self) -> int:
        self.now_ms += self.tick_ms
        return self.now_ms


class RealClock:
    def __init__(self, tick_ms: int = 100):
        self.tick_ms = tick_ms
        self.now_ms = 0
        self._origin = time.monotonic()

    def advance(self) -> int:
        self.now_ms += self.tick_ms
        delay = self._origin + self.now_ms / 1000 - time.monotonic()
        if delay > 0:
            time.sleep(delay)
        return self.now_ms


class VirtualProcess:
    """Solver output replayed on the virtual timeline."""

    def __init__(
        self,
        argv: Sequence[str],
        launch_ms: int,
        cwd: str | None = None,
        env: dict | None = None,
        wall_timeout: float = 60.0,
    ):
        env = dict(os.environ if env is None else env)
        env[VIRTUAL_ENV_VAR] = "1"
        try:
            done = subprocess.run(
                list(argv),
                cwd=cwd,
                env=env,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                timeout=wall_timeout,
            )
            out, self.returncode = done.stdout, done.returncode
        except subprocess.TimeoutExpired as exc:
            out = exc.stdout or ""
            if isinstance(out, bytes):
                out = out.decode(errors="replace")
            self.returncode = None
        self.launch_ms = launch_ms
        self.stalls = self.returncode is None
        offset = 0
        self._lines: list[tuple[int, str]] = []
        for line in out.splitlines():
            match = _MARKER.match(line.strip())
            if match:
                offset = max(offset, int(round(float(match.group(1)) * 1000)))
            elif line.strip() == _STALL:
                self.stalls = True
            else:
                self._lines.append((launch_ms + offset, line))
        self.exit_ms = launch_ms + offset
        self._pos = 0
        self.killed = False

    def read(self, now_ms: int) -> list[str]:
        if self.killed:
            return []
        out = []
        while self._pos < len(self._lines) and self._lines[self._pos][0] <= now_ms:
            out.append(self._lines[self._pos][1])
            self._pos += 1
        return out

    def finished(self, now_ms: int) -> bool:
        if self.killed:
            return True
        return not self.stalls and now_ms >= self.exit_ms and self._pos == len(self._lines)

    def kill(self, grace: float = 1.0) -> None:
        self.killed = True


class RealProcess:
    """A live subprocess whose stdout is drained by a reader thread."""

    def __init__(
        self,
        argv: Sequence[str],
        launch_ms: int,
        cwd: str | None = None,
        env: dict | None = None,
    ):
        self.launch_ms = launch_ms
        self._proc = subprocess.Popen(
            list(argv),
            cwd=cwd,
            env=env,
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self._queue: queue.Queue[str] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self.killed = False

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._queue.put(line)
        self._proc.stdout.close()

    @property
    def returncode(self) -> int | None:
        return self._proc.poll()

    def read(self, now_ms: int) -> list[str]:
        out = []
        while True:
            try:
                out.append(self._queue.get_nowait())
            except queue.Empty:
                return out

    def finished(self, now_ms: int) -> bool:
        if self.killed:
            return True
        return self._proc.poll() is not None and not self._reader.is_alive() and self._queue.empty()

    def kill(self, grace: float = 1.0) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(grace)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        self._reader.join(timeout=grace)
        self.killed = True
