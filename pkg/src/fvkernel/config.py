"""Run configuration: an INI document with [bath], [system], [grid] and [run].

Example::

    [bath]
    family = fermi
    energies = 1.0, 2.0
    g = 0, 0.1; -0.1, 0
    beta = 1.0

    [grid]
    t0 = 0
    tf = 2
    n = 400

    [run]
    seed = 42

Matrices are written row by row, rows separated by ``;``.  Setting
``random = true`` in [bath] draws a seeded random bath of ``num_modes``
modes instead of reading ``energies`` and ``g``.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .dynamics import SystemSpec, TimeGrid
from .errors import FVKernelError, ValidationError
from .fock import BathSpec, LinearBoseBathSpec, Statistics, random_bath

__all__ = ["COMMANDS", "DEFAULT_TOLERANCES", "RunConfig", "ConfigError",
           "parse_config", "load_config"]

COMMANDS = ("kernels", "corr", "g4check", "pairing", "dynamics", "scaling")

DEFAULT_TOLERANCES = {
    "kernels": {"identity": 1e-12},
    "corr": {"absdiff": 1e-11},
    "g4check": {"g4": 1e-10},
    "pairing": {"rel_trace": 1e-10, "rel_counter": 1e-10},
    "dynamics": {"trace": 1e-8, "hermitian": 1e-8},
    "scaling": {"slope_min": 5.0, "slope_max": 7.0},
}

_KEYS = {
    "bath": {"family", "num_modes", "energies", "g", "beta", "n_max", "random",
             "omega", "c", "m"},
    "system": {"epsilon", "delta", "rho0"},
    "grid": {"t0", "tf", "n"},
    "run": {"command", "seed", "samples", "lambdas", "memory", "method", "d",
            "extrapolate"} | {f"tol_{name}" for tols in DEFAULT_TOLERANCES.values()
                              for name in tols},
}


class ConfigError(FVKernelError, ValueError):
    """Malformed or invalid configuration document."""


@dataclass
class RunConfig:
    command: str
    bath: Optional[Union[BathSpec, LinearBoseBathSpec]] = None
    system: Optional[SystemSpec] = None
    grid: Optional[TimeGrid] = None
    seed: int = 42
    output_dir: Path = Path(".")
    tolerances: dict = field(default_factory=dict)
    samples: int = 20
    lambdas: tuple = (0.05, 0.1, 0.2)
    memory: Optional[int] = None
    method: Optional[str] = None
    d: Optional[str] = None
    extrapolate: bool = True
    random_bath: bool = False
    num_modes: Optional[int] = None
    bath_options: dict = field(default_factory=dict)

    def make_bath(self, rng: np.random.Generator):
        """The configured bath, or a fresh seeded random one."""
        if not self.random_bath:
            return self.bath
        return random_bath(rng, self.num_modes, **self.bath_options)


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return lineno
    return None


class _Reader:
    """Typed access to one section, tagging errors with key and line."""

    def __init__(self, text, parser, section):
        self.text = text
        self.section = section
        self.items = dict(parser.items(section)) if parser.has_section(section) else {}

    def fail(self, key, msg):
        line = _line_of(self.text, self.section, key)
        where = f" (line {line})" if line else ""
        raise ConfigError(f"{self.section}.{key}{where}: {msg}")

    def has(self, key):
        return key in self.items

    def get(self, key, conv, default=None, required=False):
        if key not in self.items:
            if required:
                raise ConfigError(f"{self.section}.{key}: required key is missing")
            return default
        raw = self.items[key]
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            self.fail(key, f"cannot parse {raw!r}: {exc}")


def _floats(raw: str) -> np.ndarray:
    return np.array([float(x) for x in raw.replace(",", " ").split()])


def _matrix(raw: str, dtype=float) -> np.ndarray:
    rows = [r for r in raw.split(";") if r.strip()]
    parsed = [[dtype(x.replace(" ", "")) for x in r.split(",")] for r in rows]
    if len({len(r) for r in parsed}) > 1:
        raise ValueError("rows have unequal length")
    return np.array(parsed, dtype=dtype)


def _bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _positive_int(raw: str) -> int:
    v = int(raw)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _parse_document(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: content before the first [section]") from exc
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"line {lineno}: cannot parse {line.strip()!r}") from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.message}") from exc
    for section in parser.sections():
        if section not in _KEYS:
            line = next((i for i, l in enumerate(text.splitlines(), 1)
                         if l.strip() == f"[{section}]"), None)
            raise ConfigError(f"line {line}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _KEYS[section]:
                line = _line_of(text, section, key)
                raise ConfigError(f"line {line}: unknown key {key!r} in [{section}]")
    return parser


def _read_bath(r: _Reader, cfg: RunConfig):
    family = r.get("family", str, "fermi").strip().lower()
    if family == "bose_linear":
        beta = r.get("beta", float, required=True)
        omega = r.get("omega", _floats, required=True)
        M = omega.size
        c = r.get("c", _floats, np.ones(M))
        m = r.get("m", _floats, np.ones(M))
        try:
            cfg.bath = LinearBoseBathSpec(omega, c, m, beta)
        except ValidationError as exc:
            r.fail("omega", str(exc))
        return
    try:
        stats = Statistics(family)
    except ValueError:
        r.fail("family", "expected fermi, bose_bilinear or bose_linear")
    n_max = r.get("n_max", _positive_int)
    if r.get("random", _bool, False):
        cfg.random_bath = True
        cfg.num_modes = r.get("num_modes", _positive_int, required=True)
        cfg.bath_options = {"statistics": stats, "n_max": n_max,
                            "beta": r.get("beta", float)}
        return
    E = r.get("energies", _floats, required=True)
    g = r.get("g", _matrix, required=True)
    if r.has("num_modes") and r.get("num_modes", _positive_int) != E.size:
        r.fail("num_modes", f"does not match {E.size} energies")
    beta = r.get("beta", float, required=True)
    try:
        cfg.bath = BathSpec(E, g, beta, stats, n_max)
    except ValidationError as exc:
        msg = str(exc)
        key = "g" if msg.startswith("g") else "beta" if "beta" in msg else "energies"
        r.fail(key, msg)


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Parse and validate a configuration document.

    Parameters
    ----------
    text : str
        INI document.
    command : str, optional
        Command from the command line; must agree with ``run.command`` if
        both are given.
    """
    parser = _parse_document(text)
    run = _Reader(text, parser, "run")
    cmd_cfg = run.get("command", lambda s: s.strip())
    if command is None:
        command = cmd_cfg
    elif cmd_cfg is not None and cmd_cfg != command:
        run.fail("command", f"config says {cmd_cfg!r} but {command!r} was requested")
    if command not in COMMANDS:
        raise ConfigError(f"run.command: unknown command {command!r}; "
                          f"expected one of {', '.join(COMMANDS)}")
    cfg = RunConfig(command=command)
    cfg.seed = run.get("seed", int, 42)
    if cfg.seed < 0:
        run.fail("seed", "must be non-negative")
    cfg.samples = run.get("samples", _positive_int, cfg.samples)
    cfg.lambdas = tuple(run.get("lambdas", _floats, np.array(cfg.lambdas)))
    cfg.memory = run.get("memory", _positive_int)
    cfg.method = run.get("method", lambda s: s.strip())
    if cfg.method not in (None, "pathsum", "gaussian"):
        run.fail("method", "expected pathsum or gaussian")
    cfg.d = run.get("d", lambda s: s.strip())
    cfg.extrapolate = run.get("extrapolate", _bool, True)
    cfg.tolerances = dict(DEFAULT_TOLERANCES[command])
    for key in run.items:
        if key.startswith("tol_"):
            name = key[4:]
            if name not in cfg.tolerances:
                run.fail(key, f"not a tolerance of the {command} command")
            cfg.tolerances[name] = run.get(key, float)

    if parser.has_section("bath"):
        _read_bath(_Reader(text, parser, "bath"), cfg)
    else:
        raise ConfigError("[bath]: section is required")

    if parser.has_section("grid"):
        gr = _Reader(text, parser, "grid")
        try:
            cfg.grid = TimeGrid(gr.get("t0", float, 0.0), gr.get("tf", float, required=True),
                                gr.get("n", _positive_int, required=True))
        except ValidationError as exc:
            gr.fail("tf", str(exc))
    elif command in ("kernels", "dynamics", "scaling"):
        raise ConfigError("[grid]: section is required for " + command)

    if parser.has_section("system"):
        sr = _Reader(text, parser, "system")
        rho0 = sr.get("rho0", lambda s: _matrix(s, complex), np.diag([1.0, 0.0]))
        try:
            cfg.system = SystemSpec(sr.get("epsilon", float, 0.0),
                                    sr.get("delta", float, 1.0), rho0)
        except ValidationError as exc:
            sr.fail("rho0", str(exc))
    elif command in ("dynamics", "scaling"):
        raise ConfigError("[system]: section is required for " + command)

    if isinstance(cfg.bath, LinearBoseBathSpec) and command != "kernels":
        raise ConfigError("bath.family: bose_linear is only supported by the kernels command")
    stats = cfg.bath_options["statistics"] if cfg.random_bath else getattr(
        cfg.bath, "statistics", None)
    if command == "pairing" and stats is not Statistics.FERMI:
        raise ConfigError("bath.family: pairing requires a fermi bath")
    return cfg


def load_config(path, command: Optional[str] = None) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), command)
