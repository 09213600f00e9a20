"""Portfolio configuration: solver specs and run parameters.

Config files are INI style::

    [portfolio]
    timeout = 1200
    cores = 8
    kb = kb/

    [solver gecode]
    cmd = {python} -m cpfolio.mock_solver gecode.mock {problem} --bound {bound}
    check = false
    trusted_completion = true

Relative paths (``kb``, solver working directory) resolve against the
directory holding the config file. A ``#`` after whitespace starts a comment.
"""

from __future__ import annotations

import configparser
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverSpec:
    """How to invoke one constituent solver.

    ``cmd`` tokens may use ``{problem}`` (required, exactly once), ``{bound}``
    and ``{python}``. When no bound is available, a token holding ``{bound}``
    is dropped together with a directly preceding flag token.
    """

    id: str
    cmd: tuple[str, ...]
    check: bool = False
    trusted_completion: bool = True
    cwd: str | None = None

    def __post_init__(self):
        if sum(tok.count("{problem}") for tok in self.cmd) != 1:
            raise ConfigError(f"solver {self.id!r}: command must contain {{problem}} exactly once")

    @property
    def takes_bound(self) -> bool:
        return any("{bound}" in tok for tok in self.cmd)

    def argv(self, problem_path: str, bound: int | None = None) -> list[str]:
        out: list[str] = []
        for tok in self.cmd:
            if "{bound}" in tok and bound is None:
                if tok == "{bound}" and out and out[-1].startswith("-") and len(out) > 1:
                    out.pop()
                continue
            out.append(
                tok.replace("{problem}", problem_path)
                .replace("{bound}", "" if bound is None else str(bound))
                .replace("{python}", sys.executable)
            )
        return out


@dataclass
class ExecConfig:
    timeout: float = 1200.0
    cores: int = 8
    k: int = 70
    restart_threshold: float = 5.0
    restart_policy: str = "all"
    presolve: tuple[tuple[str, ...], float] | None = None
    solvers: dict[str, SolverSpec] = field(default_factory=dict)
    kb: str | None = None
    virtual_clock: bool = False
    no_selection: bool = False
    tick_ms: int = 100
    kill_grace: float = 1.0

    def validate(self) -> None:
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        if self.cores < 1:
            raise ConfigError("cores must be at least 1")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not 0 < self.restart_threshold < self.timeout:
            raise ConfigError("restart threshold must lie in (0, timeout)")
        if self.restart_policy not in ("all", "any"):
            raise ConfigError(f"unknown restart policy {self.restart_policy!r}")
        if self.tick_ms <= 0:
            raise ConfigError("tick must be positive")
        if self.presolve is not None:
            ids, t_pre = self.presolve
            if not ids or not 0 < t_pre < self.timeout:
                raise ConfigError("presolve needs solver ids and 0 < seconds < timeout")
            unknown = [s for s in ids if self.solvers and s not in self.solvers]
            if unknown:
                raise ConfigError(f"presolve names unknown solvers {unknown}")


_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def _flag(value: str, where: str) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ConfigError(f"{where}: expected true/false, got {value!r}")


def parse_presolve(text: str) -> tuple[tuple[str, ...], float]:
    """``"a,b:60"`` -> ``(("a", "b"), 60.0)``."""
    ids, sep, seconds = text.rpartition(":")
    if not sep:
        raise ConfigError(f"presolve must look like <ids>:<seconds>, got {text!r}")
    try:
        t_pre = float(seconds)
    except ValueError:
        raise ConfigError(f"bad presolve seconds {seconds!r}") from None
    names = tuple(s.strip() for s in ids.split(",") if s.strip())
    if len(set(names)) != len(names):
        raise ConfigError("presolve solver list has duplicates")
    return names, t_pre


_PORTFOLIO_KEYS = {
    "timeout": ("timeout", float),
    "cores": ("cores", int),
    "knn": ("k", int),
    "k": ("k", int),
    "restart_threshold": ("restart_threshold", float),
    "restart_policy": ("restart_policy", str),
}


def load_config(path: str | Path, base: ExecConfig | None = None) -> ExecConfig:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    root = path.resolve().parent
    cfg = base or ExecConfig()

    solvers: dict[str, SolverSpec] = {}
    for section in parser.sections():
        kind, _, name = section.partition(" ")
        body = parser[section]
        where = f"{path} [{section}]"
        if kind == "portfolio" and not name:
            for key, value in body.items():
                if key in _PORTFOLIO_KEYS:
                    attr, conv = _PORTFOLIO_KEYS[key]
                    try:
                        setattr(cfg, attr, conv(value))
                    except ValueError:
                        raise ConfigError(f"{where}: bad value for {key}: {value!r}") from None
                elif key == "kb":
                    cfg.kb = str(root / value)
                elif key == "presolve":
                    cfg.presolve = parse_presolve(value)
                elif key == "virtual_clock":
                    cfg.virtual_clock = _flag(value, where)
                elif key == "no_selection":
                    cfg.no_selection = _flag(value, where)
                else:
                    raise ConfigError(f"{where}: unknown key {key!r}")
        elif kind == "solver" and name:
            name = name.strip()
            if name in solvers:
                raise ConfigError(f"{where}: duplicate solver id {name!r}")
            if "cmd" not in body:
                raise ConfigError(f"{where}: missing cmd")
            extra = set(body) - {"cmd", "check", "trusted_completion", "cwd"}
            if extra:
                raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
            solvers[name] = SolverSpec(
                name,
                tuple(shlex.split(body["cmd"])),
                check=_flag(body.get("check", "false"), where),
                trusted_completion=_flag(body.get("trusted_completion", "true"), where),
                cwd=str(root / body.get("cwd", ".")),
            )
        else:
            raise ConfigError(f"{where}: unknown section")
    if not solvers:
        raise ConfigError(f"{path}: no [solver <id>] sections")
    cfg.solvers = solvers
    return cfg


def solver_ids(specs: dict[str, SolverSpec]) -> list[str]:
    return sorted(specs)


def make_spec(id: str, cmd: str | Sequence[str], **kwargs) -> SolverSpec:
    tokens = tuple(shlex.split(cmd)) if isinstance(cmd, str) else tuple(cmd)
    return SolverSpec(id, tokens, **kwargs)
