"""Run configuration: TOML file -> validated, defaulted RunConfig.

Example::

    [problem]
    equation = "ch"          # "ch" or "ac"
    form = "standard"        # or "rescaled"
    eps = 0.01
    potential = "double_well"
    B = 1.0

    [mesh]
    domain = [-1.0, 1.0, -1.0, 1.0]
    nx = 32

    [time]
    dt = 1e-4
    t_end = 1e-2

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field

import tomli

from .errors import ConfigError

BUILTINS = ("four_circles", "three_circles", "step", "sine_ramp", "random")


@dataclass
class ProblemConfig:
    equation: str = "ch"
    form: str = "standard"
    eps: float = 1.0
    potential: str = "double_well"
    theta: float | None = None
    theta_c: float | None = None
    B: float = 1.0
    mobility: float = 1.0
    clamp_delta: float = 1e-8


@dataclass
class MeshConfig:
    domain: tuple = (0.0, 1.0, 0.0, 1.0)
    nx: int = 16
    ny: int | None = None
    degree: int = 1
    quad_degree: int = 6


@dataclass
class TimeConfig:
    dt: float = 1e-3
    t_end: float = 1e-2
    scheme: str = "bdf1"
    method: int = 2
    bdf2_bootstrap: bool = False
    solver: str = "auto"
    strict: bool = False


@dataclass
class InitialConfig:
    builtin: str | None = None
    expression: str | None = None
    value: float | None = None
    seed: int = 0
    amplitude: float = 0.1
    offset: float = 0.0
    project: bool = True


@dataclass
class OutputConfig:
    csv: str | None = None
    vtk_prefix: str | None = None
    vtk_every: int = 0
    manifest: str | None = None
    log_projected: bool = True
    wall_clock: bool = False


@dataclass
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def n_steps(self):
        return int(math.floor(self.time.t_end / self.time.dt + 0.5))

    def to_dict(self):
        d = asdict(self)
        d["mesh"]["domain"] = list(d["mesh"]["domain"])
        return d


_SECTIONS = {
    "problem": ProblemConfig,
    "mesh": MeshConfig,
    "time": TimeConfig,
    "initial": InitialConfig,
    "output": OutputConfig,
}


def _line_of(text, section, key):
    """1-based line of ``key = ...`` inside ``[section]``, if present."""
    if text is None:
        return None
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return i
    return None


def config_from_dict(raw, text=None):
    """Validate a parsed mapping and return a RunConfig."""
    cfg = RunConfig()

    def err(msg, section, key):
        raise ConfigError(msg, key=f"{section}.{key}", line=_line_of(text, section, key))

    for sec, body in raw.items():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", key=sec)
        if not isinstance(body, dict):
            raise ConfigError("expected a table", key=sec)
        target = getattr(cfg, sec)
        for k, v in body.items():
            if not hasattr(target, k):
                err("unknown key", sec, k)
            setattr(target, k, v)

    p, m, t, ini, out = cfg.problem, cfg.mesh, cfg.time, cfg.initial, cfg.output

    def num(sec, obj, key, positive=False, nonneg=False, integer=False, optional=False):
        v = getattr(obj, key)
        if v is None and optional:
            return
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            err(f"expected a number, got {v!r}", sec, key)
        if integer:
            if int(v) != v:
                err(f"expected an integer, got {v!r}", sec, key)
            v = int(v)
        else:
            v = float(v)
        if not math.isfinite(v):
            err(f"must be finite, got {v!r}", sec, key)
        if positive and not v > 0:
            err(f"must be positive, got {v!r}", sec, key)
        if nonneg and v < 0:
            err(f"must be nonnegative, got {v!r}", sec, key)
        setattr(obj, key, v)

    def choice(sec, obj, key, options):
        v = getattr(obj, key)
        if not isinstance(v, str) or v.lower() not in options:
            err(f"must be one of {', '.join(options)}; got {v!r}", sec, key)
        setattr(obj, key, v.lower())

    def flag(sec, obj, key):
        if not isinstance(getattr(obj, key), bool):
            err(f"expected true or false, got {getattr(obj, key)!r}", sec, key)

    choice("problem", p, "equation", ("ch", "ac"))
    choice("problem", p, "form", ("standard", "rescaled"))
    num("problem", p, "eps", positive=True)
    choice("problem", p, "potential", ("double_well", "flory_huggins"))
    num("problem", p, "B", nonneg=True)
    num("problem", p, "mobility", nonneg=True)
    num("problem", p, "clamp_delta", positive=True)
    num("problem", p, "theta", optional=True)
    num("problem", p, "theta_c", optional=True)
    if p.potential == "flory_huggins" and (p.theta is None or p.theta_c is None):
        err("Flory-Huggins needs theta and theta_c", "problem", "theta")
    if p.potential == "double_well" and not p.B > 0:
        err(f"must be positive for the double well, got {p.B!r}", "problem", "B")

    dom = m.domain
    if not isinstance(dom, (list, tuple)) or len(dom) != 4 or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in dom
    ):
        err(f"expected [x0, x1, y0, y1], got {dom!r}", "mesh", "domain")
    m.domain = tuple(float(v) for v in dom)
    if not (m.domain[1] > m.domain[0] and m.domain[3] > m.domain[2]):
        err(f"degenerate rectangle {list(m.domain)}", "mesh", "domain")
    num("mesh", m, "nx", positive=True, integer=True)
    if m.ny is None:
        m.ny = m.nx
    num("mesh", m, "ny", positive=True, integer=True)
    num("mesh", m, "degree", integer=True)
    if m.degree not in (1, 2):
        err(f"must be 1 or 2, got {m.degree}", "mesh", "degree")
    num("mesh", m, "quad_degree", integer=True)
    if not 2 * m.degree <= m.quad_degree <= 6:
        err(f"must lie in [{2 * m.degree}, 6] for degree {m.degree}, got {m.quad_degree}", "mesh", "quad_degree")

    num("time", t, "dt", positive=True)
    num("time", t, "t_end", positive=True)
    choice("time", t, "scheme", ("bdf1", "cn", "bdf2"))
    num("time", t, "method", integer=True)
    if t.method not in (1, 2, 3):
        err(f"must be 1, 2 or 3, got {t.method}", "time", "method")
    if p.equation == "ch" and t.scheme == "cn":
        err("the Crank-Nicolson scheme is only available for ac", "time", "scheme")
    choice("time", t, "solver", ("auto", "direct", "cg", "krylov", "recycled"))
    flag("time", t, "bdf2_bootstrap")
    flag("time", t, "strict")

    given = [k for k in ("builtin", "expression", "value") if getattr(ini, k) is not None]
    if len(given) > 1:
        err(f"give only one of builtin, expression, value (got {', '.join(given)})", "initial", given[1])
    if not given:
        ini.builtin = "random"
    if ini.builtin is not None:
        choice("initial", ini, "builtin", BUILTINS)
    if ini.expression is not None and not isinstance(ini.expression, str):
        err("expected a string", "initial", "expression")
    num("initial", ini, "value", optional=True)
    num("initial", ini, "seed", integer=True, nonneg=True)
    num("initial", ini, "amplitude", nonneg=True)
    num("initial", ini, "offset")
    flag("initial", ini, "project")

    num("output", out, "vtk_every", integer=True, nonneg=True)
    flag("output", out, "log_projected")
    flag("output", out, "wall_clock")
    for k in ("csv", "vtk_prefix", "manifest"):
        v = getattr(out, k)
        if v is not None and not isinstance(v, str):
            err("expected a path string", "output", k)
    return cfg


def parse_config(text):
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"parse error: {exc}", line=int(m.group(1)) if m else None) from None
    return config_from_dict(raw, text)


def load_config(path):
    """Read, parse and validate a TOML run configuration."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
