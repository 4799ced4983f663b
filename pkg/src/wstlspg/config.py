"""Experiment configuration read from INI-style files.

Example::

    [grid]
    n_cells = 200
    x_min = 0
    x_max = 100
    [time]
    dt = 0.1
    n_steps = 256
    scheme = BDF1
    [params]
    mu1_range = 2.0, 4.1
    mu2_range = 0.013, 0.02
    counts = 20, 5
    test = 4.0714, 0.0185
    [windows]
    l_w = 25.6
    l_s = 0.1
    [energies]
    e_s = 0.999
    e_t = 0.99
    [gnat]
    z_t = 8
    z_s = 40
    [solver]
    tol = 1e-6

List-valued keys (window lengths, energies, sample budgets) define the sweep
grid; single-run commands use their first entry. Unknown sections or keys
are rejected.
"""

import configparser
from dataclasses import dataclass, field, fields

from .burgers_fom import MU1_RANGE, MU2_RANGE, SpatialGrid
from .solver import GaussNewtonConfig
from .windows import scheme_by_name


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in _floats(text))


@dataclass
class GridSection:
    n_cells: int = 200
    x_min: float = 0.0
    x_max: float = 100.0


@dataclass
class TimeSection:
    dt: float = 0.1
    n_steps: int = 256
    scheme: str = "BDF1"


@dataclass
class ParamsSection:
    mu1_range: tuple = MU1_RANGE
    mu2_range: tuple = MU2_RANGE
    counts: tuple = (20, 5)
    test: tuple = (4.0714, 0.0185)


@dataclass
class WindowsSection:
    l_w: tuple = (25.6,)
    l_s: tuple = (0.1,)


@dataclass
class EnergiesSection:
    e_s: tuple = (0.999,)
    e_t: tuple = (0.99,)
    e_rs: tuple = (0.999,)
    e_rt: tuple = (0.99,)


@dataclass
class GnatSection:
    enabled: bool = False
    z_t: tuple = (8,)
    z_s: tuple = (40,)
    residual_subwindows: int = 1


@dataclass
class SolverSection:
    tol: float = 1e-6
    max_iters: int = 50
    line_search: str = "unit_step"
    allow_nonconverged: bool = False
    repetitions: int = 5


_PARSERS = {
    "mu1_range": _floats, "mu2_range": _floats, "counts": _ints, "test": _floats,
    "l_w": _floats, "l_s": _floats, "e_s": _floats, "e_t": _floats, "e_rs": _floats,
    "e_rt": _floats, "z_t": _ints, "z_s": _ints,
}


@dataclass
class Config:
    grid: GridSection = field(default_factory=GridSection)
    time: TimeSection = field(default_factory=TimeSection)
    params: ParamsSection = field(default_factory=ParamsSection)
    windows: WindowsSection = field(default_factory=WindowsSection)
    energies: EnergiesSection = field(default_factory=EnergiesSection)
    gnat: GnatSection = field(default_factory=GnatSection)
    solver: SolverSection = field(default_factory=SolverSection)

    @property
    def spatial_grid(self):
        return SpatialGrid(self.grid.n_cells, self.grid.x_min, self.grid.x_max)

    @property
    def scheme(self):
        return scheme_by_name(self.time.scheme)

    @property
    def gauss_newton(self):
        s = self.solver
        return GaussNewtonConfig(tol=s.tol, max_iters=s.max_iters, line_search=s.line_search,
                                 allow_nonconverged=s.allow_nonconverged)

    def energy_pairs(self):
        return _pairs(self.energies.e_s, self.energies.e_t, "e_s/e_t")

    def residual_energy_pairs(self):
        return _pairs(self.energies.e_rs, self.energies.e_rt, "e_rs/e_rt")


def _pairs(a, b, what):
    if len(a) == len(b):
        return list(zip(a, b))
    if len(a) == 1 or len(b) == 1:
        n = max(len(a), len(b))
        return list(zip(a * n if len(a) == 1 else a, b * n if len(b) == 1 else b))
    raise ValueError(f"{what} lists have incompatible lengths {len(a)} and {len(b)}")


def _convert(name, default, text):
    if name in _PARSERS:
        return _PARSERS[name](text)
    if isinstance(default, bool):
        low = text.strip().lower()
        if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
            raise ValueError(f"{name}: expected a boolean, got {text!r}")
        return low in ("true", "yes", "1", "on")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text.strip()


def parse_config(text):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    parser.read_string(text)
    cfg = Config()
    sections = {f.name: f for f in fields(Config)}
    for name in parser.sections():
        if name not in sections:
            raise ValueError(f"unknown config section [{name}]")
        section = getattr(cfg, name)
        known = {f.name for f in fields(section)}
        for key, value in parser.items(name):
            if key not in known:
                raise ValueError(f"unknown key {key!r} in section [{name}]")
            setattr(section, key, _convert(key, getattr(section, key), value))
    _validate(cfg)
    return cfg


def _validate(cfg):
    if len(cfg.params.test) != 2 or len(cfg.params.counts) != 2:
        raise ValueError("params.test and params.counts need two entries")
    for key in ("mu1_range", "mu2_range"):
        if len(getattr(cfg.params, key)) != 2:
            raise ValueError(f"params.{key} needs two entries")
    for e in cfg.energies.e_s + cfg.energies.e_t + cfg.energies.e_rs + cfg.energies.e_rt:
        if not 0.0 < e <= 1.0:
            raise ValueError(f"energy fractions must lie in (0, 1], got {e}")
    scheme_by_name(cfg.time.scheme)
    GaussNewtonConfig(tol=cfg.solver.tol, max_iters=cfg.solver.max_iters,
                      line_search=cfg.solver.line_search)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
