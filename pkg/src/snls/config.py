"""Run configuration: a sectioned ``key = value`` text file with ``#`` comments.

Every block is optional; omitted keys take the defaults below (interval
[0, 1], defocusing, eps = 0, m = inf, Stratonovich noise switched off).
"""

from __future__ import annotations

import ast
import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dynamics import DEFOCUSING, FOCUSING, EquationSpec
from .grid import Grid1D, make_grid
from .noise import NoiseModel, build_noise
from .profiles import gaussian, ground_state, plane_wave
from .spectral import ComplexField


class ConfigError(ValueError):
    """Unreadable file or a value that fails validation."""


SECTIONS = ("grid", "equation", "noise", "time", "ensemble", "output", "initial", "experiment")
FORMATS = ("csv", "bin", "both")


@dataclass(frozen=True)
class NoiseConfig:
    enabled: bool = False
    modes: int = 16
    gamma0: float = 1.0
    s: float = 3.0
    seed: int = 0
    convention: str = "stratonovich"
    correction: bool = True


@dataclass(frozen=True)
class InitialConfig:
    profile: str = "gaussian"
    mass: float = 1.0
    width: float = 1.0
    center: float = 0.0
    velocity: float = 0.0
    alpha: float = 1.0
    amplitude: float = 1.0
    mode: int = 0


@dataclass(frozen=True)
class RunConfig:
    L: float = 16.0
    n: int = 256
    equation: EquationSpec = EquationSpec()
    noise: NoiseConfig = NoiseConfig()
    t_start: float = 0.0
    t_end: float = 1.0
    dt: float = 1e-3
    stride: int = 1
    paths: int = 16
    rho: tuple = (2.0,)
    directory: str = "out"
    formats: str = "csv"
    initial: InitialConfig = InitialConfig()
    experiment: dict = field(default_factory=dict)
    sections: frozenset = frozenset()

    def grid(self) -> Grid1D:
        return make_grid(self.L, self.n)

    def spec(self) -> EquationSpec:
        return self.equation.with_(
            noise_on=self.noise.enabled,
            convention=self.noise.convention,
            ito_correction_on=self.noise.correction,
        )

    def noise_model(self, grid: Grid1D | None = None, seed: int | None = None) -> NoiseModel:
        nc = self.noise
        return build_noise(nc.modes, nc.gamma0, nc.s, grid or self.grid(),
                           seed=nc.seed if seed is None else seed)

    def initial_field(self, grid: Grid1D | None = None) -> ComplexField:
        grid = grid or self.grid()
        ic = self.initial
        if ic.profile == "gaussian":
            return gaussian(grid, ic.mass, ic.width, ic.center, ic.velocity)
        if ic.profile == "ground_state":
            return ground_state(grid, alpha=ic.alpha)
        if ic.profile == "plane_wave":
            return plane_wave(grid, ic.amplitude, ic.mode)
        raise ConfigError(f"unknown initial profile {ic.profile!r}")

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, noise=replace(self.noise, seed=seed))


def _float(v: str) -> float:
    v = v.strip().lower()
    if v in ("inf", "infinity", "+inf"):
        return math.inf
    return float(v)


def _bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _sign(v: str) -> int:
    v = v.strip().lower()
    table = {"defocusing": DEFOCUSING, "+1": DEFOCUSING, "1": DEFOCUSING,
             "focusing": FOCUSING, "-1": FOCUSING}
    if v not in table:
        raise ValueError(f"sign must be defocusing or focusing, got {v!r}")
    return table[v]


def _floats(v: str) -> tuple:
    return tuple(_float(p) for p in v.replace(",", " ").split())


def _literal(v: str):
    v = v.strip()
    if v.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return ast.literal_eval(v)
    except (ValueError, SyntaxError):
        return v


_KEYS = {
    "grid": {"L": _float, "n": int},
    "equation": {"sign": _sign, "c": _float, "epsilon": _float, "m": _float, "A": _float,
                 "theta_power": _float},
    "noise": {"enabled": _bool, "modes": int, "gamma0": _float, "s": _float, "seed": int,
              "convention": str, "correction": _bool},
    "time": {"t_start": _float, "t_end": _float, "dt": _float, "stride": int},
    "ensemble": {"paths": int, "rho": _floats},
    "output": {"directory": str, "formats": str},
    "initial": {"profile": str, "mass": _float, "width": _float, "center": _float,
                "velocity": _float, "alpha": _float, "amplitude": _float, "mode": int},
}


def _section(parser, name) -> dict:
    if not parser.has_section(name):
        return {}
    allowed = _KEYS[name]
    lower = {k.lower(): k for k in allowed}
    out = {}
    for key, raw in parser.items(name):
        if key not in lower:
            raise ConfigError(f"[{name}] unknown key {key!r}; allowed: {', '.join(allowed)}")
        real = lower[key]
        try:
            out[real] = allowed[real](raw)
        except ValueError as exc:
            raise ConfigError(f"[{name}] {real} = {raw!r}: {exc}") from None
    return out


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown}; allowed: {', '.join(SECTIONS)}")

    g = _section(parser, "grid")
    eq = _section(parser, "equation")
    nz = _section(parser, "noise")
    tm = _section(parser, "time")
    en = _section(parser, "ensemble")
    out = _section(parser, "output")
    ini = _section(parser, "initial")
    exp = ({k: _literal(v) for k, v in parser.items("experiment")}
           if parser.has_section("experiment") else {})

    try:
        cfg = RunConfig(
            L=g.get("L", 16.0),
            n=g.get("n", 256),
            equation=EquationSpec(**eq),
            noise=NoiseConfig(**nz),
            t_start=tm.get("t_start", 0.0),
            t_end=tm.get("t_end", 1.0),
            dt=tm.get("dt", 1e-3),
            stride=tm.get("stride", 1),
            paths=en.get("paths", 16),
            rho=en.get("rho", (2.0,)),
            directory=out.get("directory", "out"),
            formats=out.get("formats", "csv"),
            initial=InitialConfig(**ini),
            experiment=exp,
            sections=frozenset(parser.sections()),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Re-run the preconditions of every module the config feeds."""
    try:
        grid = cfg.grid()
        cfg.spec()
        if cfg.noise.convention not in ("stratonovich", "ito"):
            raise ValueError("convention must be stratonovich or ito")
        if cfg.noise.enabled or "noise" in cfg.sections:
            cfg.noise_model(grid)
        if not cfg.t_end > cfg.t_start:
            raise ValueError("t_end must exceed t_start")
        if not cfg.dt > 0:
            raise ValueError("dt must be positive")
        if cfg.stride < 1:
            raise ValueError("stride must be >= 1")
        if cfg.paths < 1:
            raise ValueError("paths must be >= 1")
        if not cfg.rho or any(r < 1 for r in cfg.rho):
            raise ValueError("every rho must be >= 1")
        if cfg.formats not in FORMATS:
            raise ValueError(f"formats must be one of {FORMATS}")
        cfg.initial_field(grid)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(p)!r}: {exc.strerror or exc}") from None
    return parse_config(text)
