"""Run configuration files.

A run configuration is an INI file (read with :mod:`configparser`).  Angles
are in radians and lengths in meters.  Numeric values may be plain literals
or small arithmetic expressions in ``pi`` (``-pi/2 - 0.8``); nothing else is
evaluated.  Sections and keys::

    [sphere]      R_o, mu_r
    [initial]     u_s, v_s, u_o, v_o, psi         (all default to 0)
    [final]       u_s, v_s, u_o, v_o, psi         (required)
    [tolerances]  eps_n, eps_r, eps_p, eps_s
    [time]        t_f, mode (constant|smooth), T, a, T_s
    [integrator]  rtol, atol, max_step            (max_step may be "auto")
    [planner]     max_iters, R_q_init, v_shift, variant, pi4_exclusion_band,
                  check_feasibility, alpha_form
    [tuning]      zeta_q, zeta_u, R_q, R_u, psi_u (only used by ``simulate``)

:meth:`RunConfig.to_text` writes every field back with ``repr`` floats, so
``load_config_text(cfg.to_text()) == cfg``.
"""
from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .kinematics import DEFAULT_VARIANT, VARIANTS
from .planner import PlannerParams, Tolerances, TuningState
from .reachability import ALPHA_FORMS, DEFAULT_ALPHA_FORM, GoalSpec
from .timescale import MODES, TimeScaleSpec

STATE_KEYS = ("u_s", "v_s", "u_o", "v_o", "psi")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi}


def parse_number(text: str) -> float:
    """Evaluate a float literal or an arithmetic expression in ``pi``.

    Raises
    ------
    ValueError
        For anything other than numbers, ``pi``, ``+ - * / **`` and parentheses.
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"not a number: {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ValueError(f"not a number: {text!r}")

    try:
        value = ev(tree)
    except (ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"cannot evaluate {text!r}: {exc}") from None
    if isinstance(value, complex) or not math.isfinite(value):
        raise ValueError(f"not finite: {text!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Everything needed for one planning or simulation run."""

    R_o: float = 0.5
    mu_r: float = 4.0
    initial: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    final: tuple = (3.0, 3.2, -math.pi / 2 - 0.8, 0.8, 0.8)
    tolerances: Tolerances = field(default_factory=Tolerances)
    t_f: float = 15.0
    timescale: TimeScaleSpec = field(default_factory=TimeScaleSpec)
    rtol: float = 1e-8
    atol: float = 1e-8
    max_step: float | None = None
    R_q_init: float = 0.005
    v_shift: bool = False
    variant: str = DEFAULT_VARIANT
    pi4_exclusion_band: float = 1e-3
    check_feasibility: bool = True
    alpha_form: str = DEFAULT_ALPHA_FORM
    tuning: TuningState | None = None

    @property
    def goal(self) -> GoalSpec:
        return GoalSpec.from_tuple(self.final, self.initial)

    def planner_params(self) -> PlannerParams:
        return PlannerParams(R_o=self.R_o, mu_r=self.mu_r, t_f=self.t_f, timescale=self.timescale,
                             tolerances=self.tolerances, variant=self.variant, v_shift=self.v_shift,
                             R_q_init=self.R_q_init, pi4_band=self.pi4_exclusion_band, rtol=self.rtol,
                             atol=self.atol, max_step=self.max_step,
                             check_feasibility=self.check_feasibility, alpha_form=self.alpha_form)

    def integrator(self) -> dict:
        return dict(rtol=self.rtol, atol=self.atol, max_step=self.max_step)

    def with_timescale(self, mode=None, T=None, a=None, T_s=None, t_f=None) -> "RunConfig":
        """Copy with some time-scale fields overridden (``None`` keeps the value)."""
        ts = self.timescale
        new = TimeScaleSpec(mode=mode or ts.mode, T_const=ts.T_const if T is None else T,
                            a=ts.a if a is None else a, T_s=ts.T_s if T_s is None else T_s)
        return replace(self, timescale=new, t_f=self.t_f if t_f is None else t_f)

    def to_text(self) -> str:
        """Serialize as an INI document that loads back to an equal config."""
        tol, ts = self.tolerances, self.timescale
        lines = ["[sphere]", f"R_o = {self.R_o!r}", f"mu_r = {self.mu_r!r}", ""]
        for name, vals in (("initial", self.initial), ("final", self.final)):
            lines.append(f"[{name}]")
            lines += [f"{k} = {float(v)!r}" for k, v in zip(STATE_KEYS, vals)]
            lines.append("")
        lines += ["[tolerances]", f"eps_n = {tol.eps_n!r}", f"eps_r = {tol.eps_r!r}",
                  f"eps_p = {tol.eps_p!r}", f"eps_s = {tol.eps_s!r}", "",
                  "[time]", f"t_f = {self.t_f!r}", f"mode = {ts.mode}", f"T = {ts.T_const!r}",
                  f"a = {ts.a!r}", f"T_s = {ts.T_s!r}", "",
                  "[integrator]", f"rtol = {self.rtol!r}", f"atol = {self.atol!r}",
                  f"max_step = {'auto' if self.max_step is None else repr(self.max_step)}", "",
                  "[planner]", f"max_iters = {tol.max_iters}", f"R_q_init = {self.R_q_init!r}",
                  f"v_shift = {str(self.v_shift).lower()}", f"variant = {self.variant}",
                  f"pi4_exclusion_band = {self.pi4_exclusion_band!r}",
                  f"check_feasibility = {str(self.check_feasibility).lower()}",
                  f"alpha_form = {self.alpha_form}", ""]
        if self.tuning is not None:
            tn = self.tuning
            lines += ["[tuning]", f"zeta_q = {tn.zeta_q!r}", f"zeta_u = {tn.zeta_u!r}", f"R_q = {tn.R_q!r}",
                      f"R_u = {tn.R_u!r}", f"psi_u = {tn.psi_u!r}", ""]
        return "\n".join(lines)


_SCHEMA = {
    "sphere": {"R_o", "mu_r"},
    "initial": set(STATE_KEYS),
    "final": set(STATE_KEYS),
    "tolerances": {"eps_n", "eps_r", "eps_p", "eps_s"},
    "time": {"t_f", "mode", "T", "a", "T_s"},
    "integrator": {"rtol", "atol", "max_step"},
    "planner": {"max_iters", "R_q_init", "v_shift", "variant", "pi4_exclusion_band", "check_feasibility",
                "alpha_form"},
    "tuning": {"zeta_q", "zeta_u", "R_q", "R_u", "psi_u"},
}


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` to the 1-based line on which it is defined."""
    out, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out[(section, None)] = no
        elif section is not None:
            for sep in ("=", ":"):
                if sep in line:
                    out[(section, line.split(sep, 1)[0].strip())] = no
                    break
    return out


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, lines: dict, source: str):
        self.cp, self.lines, self.source = cp, lines, source

    def where(self, section, key=None) -> str:
        no = self.lines.get((section, key)) or self.lines.get((section, None))
        loc = f"{self.source}:{no}" if no else self.source
        return f"{loc}: [{section}] {key}" if key else f"{loc}: [{section}]"

    def raw(self, section, key):
        if self.cp.has_section(section) and self.cp.has_option(section, key):
            return self.cp.get(section, key)
        return None

    def num(self, section, key, default, positive=False, nonneg=False):
        raw = self.raw(section, key)
        if raw is None:
            if default is None:
                raise ConfigError(f"{self.where(section)}: missing required field '{key}'")
            return default
        try:
            val = parse_number(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.where(section, key)}: {exc}") from None
        if positive and not val > 0:
            raise ConfigError(f"{self.where(section, key)}: must be positive, got {raw!r}")
        if nonneg and val < 0:
            raise ConfigError(f"{self.where(section, key)}: must be non-negative, got {raw!r}")
        return val

    def integer(self, section, key, default):
        raw = self.raw(section, key)
        if raw is None:
            return default
        try:
            val = int(raw.strip())
        except ValueError:
            raise ConfigError(f"{self.where(section, key)}: not an integer: {raw!r}") from None
        if val <= 0:
            raise ConfigError(f"{self.where(section, key)}: must be positive, got {raw!r}")
        return val

    def boolean(self, section, key, default):
        raw = self.raw(section, key)
        if raw is None:
            return default
        val = raw.strip().lower()
        if val in ("1", "yes", "true", "on"):
            return True
        if val in ("0", "no", "false", "off"):
            return False
        raise ConfigError(f"{self.where(section, key)}: not a boolean: {raw!r}")

    def choice(self, section, key, default, choices):
        raw = self.raw(section, key)
        if raw is None:
            return default
        val = raw.strip()
        if val not in choices:
            raise ConfigError(f"{self.where(section, key)}: must be one of {', '.join(choices)}, got {raw!r}")
        return val


def load_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        With the source, line, section and key of the offending entry.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (R_o, T_s)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {' '.join(str(exc).split())}") from None
    lines = _line_index(text)
    rd = _Reader(cp, lines, source)
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{rd.where(section)}: unknown section")
        for key in cp.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{rd.where(section, key)}: unknown field")
    if not cp.has_section("final"):
        raise ConfigError(f"{source}: missing required section [final]")

    d = RunConfig()
    initial = tuple(rd.num("initial", k, 0.0) for k in STATE_KEYS)
    final = tuple(rd.num("final", k, None) for k in STATE_KEYS)
    tol = Tolerances(eps_n=rd.num("tolerances", "eps_n", d.tolerances.eps_n, positive=True),
                     eps_r=rd.num("tolerances", "eps_r", d.tolerances.eps_r, positive=True),
                     eps_p=rd.num("tolerances", "eps_p", d.tolerances.eps_p, positive=True),
                     eps_s=rd.num("tolerances", "eps_s", d.tolerances.eps_s, positive=True),
                     max_iters=rd.integer("planner", "max_iters", d.tolerances.max_iters))
    mode = rd.choice("time", "mode", "constant", MODES)
    T = rd.num("time", "T", 1.0)
    if T == 0:
        raise ConfigError(f"{rd.where('time', 'T')}: must be non-zero")
    ts = TimeScaleSpec(mode=mode, T_const=T, a=rd.num("time", "a", d.timescale.a, positive=True),
                       T_s=rd.num("time", "T_s", d.timescale.T_s, positive=True))
    raw_step = rd.raw("integrator", "max_step")
    if raw_step is None or raw_step.strip().lower() == "auto":
        max_step = None
    else:
        max_step = rd.num("integrator", "max_step", None, positive=True)
    tuning = None
    if cp.has_section("tuning"):
        tuning = TuningState(zeta_q=rd.num("tuning", "zeta_q", 0.0), zeta_u=rd.num("tuning", "zeta_u", 0.0),
                             R_q=rd.num("tuning", "R_q", d.R_q_init), R_u=rd.num("tuning", "R_u", 0.0),
                             psi_u=rd.num("tuning", "psi_u", 0.0))
    cfg = RunConfig(
        R_o=rd.num("sphere", "R_o", d.R_o, positive=True),
        mu_r=rd.num("sphere", "mu_r", d.mu_r, positive=True),
        initial=initial, final=final, tolerances=tol,
        t_f=rd.num("time", "t_f", d.t_f, positive=True), timescale=ts,
        rtol=rd.num("integrator", "rtol", d.rtol, positive=True),
        atol=rd.num("integrator", "atol", d.atol, positive=True), max_step=max_step,
        R_q_init=rd.num("planner", "R_q_init", d.R_q_init),
        v_shift=rd.boolean("planner", "v_shift", False),
        variant=rd.choice("planner", "variant", DEFAULT_VARIANT, VARIANTS),
        pi4_exclusion_band=rd.num("planner", "pi4_exclusion_band", d.pi4_exclusion_band, nonneg=True),
        check_feasibility=rd.boolean("planner", "check_feasibility", True),
        alpha_form=rd.choice("planner", "alpha_form", DEFAULT_ALPHA_FORM, ALPHA_FORMS),
        tuning=tuning)
    if cfg.final[:2] == cfg.initial[:2]:
        raise ConfigError(f"{rd.where('final', 'u_s')}: final plane position equals the initial one")
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return load_config_text(text, source=str(path))


def config_fields() -> list[str]:
    """Names of the :class:`RunConfig` fields (for documentation and tests)."""
    return [f.name for f in fields(RunConfig)]
