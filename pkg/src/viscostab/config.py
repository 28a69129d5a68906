"""Flat ``section.key = value`` configuration files.

One key per line, ``#`` starts a comment. Floats are written with
``repr`` so that parsing a written file reproduces the configuration
exactly. Only ``model.kind`` is required; every other key has a default.

Example::

    model.kind = giesekus
    model.alpha = 0.5
    grid.nx = 32
    run.t_end = 5.0
    boundary.table.left = 0:300, 1:300
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from . import constitutive as cm
from .sim import Perturbation, SimConfig
from .steady_state import EDGES, BoundarySpec, Grid2D

_SCALARS = {
    "grid.nx": int,
    "grid.ny": int,
    "grid.lx": float,
    "grid.ly": float,
    "model.kind": str,
    "model.mu": float,
    "model.rho": float,
    "model.a": float,
    "model.alpha": float,
    "model.b": float,
    "model.p": float,
    "thermal.c_v": float,
    "thermal.kappa": float,
    "thermal.theta_ref": float,
    "boundary.profile": str,
    "boundary.low": float,
    "boundary.high": float,
    "boundary.amplitude": float,
    "run.dt": float,
    "run.t_end": float,
    "run.output_every": int,
    "run.allow_clipping": bool,
    "perturbation.velocity": float,
    "perturbation.mode": str,
    "perturbation.conformation": float,
    "perturbation.temperature": float,
    "functionals.m": "floats",
    "functionals.mn": "pairs",
}
for _law in ("nu", "nu1"):
    _SCALARS[f"model.{_law}.kind"] = str
    for _k in ("value", "base", "amplitude", "rate", "theta_ref"):
        _SCALARS[f"model.{_law}.{_k}"] = float
for _e in EDGES:
    _SCALARS[f"boundary.table.{_e}"] = "pairs"

REQUIRED = ("model.kind",)


def _convert(key: str, raw: str, kind):
    if kind is bool:
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got '{raw}'")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind == "floats":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if kind == "pairs":
        out = []
        for item in raw.split(","):
            if not item.strip():
                continue
            a, b = item.split(":")
            out.append((float(a), float(b)))
        return tuple(out)
    return raw


def parse_text(text: str, source: str = "<config>") -> SimConfig:
    """Parse configuration text; raise :class:`~viscostab.constitutive.ConfigError` listing every problem."""
    values: dict[str, object] = {}
    errors: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _SCALARS:
            errors.append(f"{key}: unknown key ({source}:{lineno})")
            continue
        if key in values:
            errors.append(f"{key}: duplicate key ({source}:{lineno})")
            continue
        try:
            values[key] = _convert(key, raw, _SCALARS[key])
        except ValueError as exc:
            errors.append(f"{key}: {exc}")
    for key in REQUIRED:
        if key not in values and not any(e.startswith(f"{key}:") for e in errors):
            errors.append(f"{key}: missing required key")
    return build(values, errors)


def _section(values: dict, prefix: str) -> dict:
    n = len(prefix) + 1
    return {k[n:]: v for k, v in values.items() if k.startswith(prefix + ".") and "." not in k[n:]}


def build(values: dict, errors: list[str] | None = None) -> SimConfig:
    """Assemble a validated :class:`SimConfig` from a flat key dictionary.

    ``errors`` carries problems found earlier (e.g. while parsing) so that
    the final :class:`~viscostab.constitutive.ConfigError` lists everything.
    """
    errors = list(errors or [])

    def attempt(label, factory):
        try:
            return factory()
        except cm.ConfigError as exc:
            errors.extend(f"{label}: {v}" for v in exc.violations)
        except ValueError as exc:
            errors.append(f"{label}: {exc}")
        return None

    grid = attempt("grid", lambda: Grid2D(**_section(values, "grid")))
    laws = {}
    for law in ("nu", "nu1"):
        laws[law] = cm.ViscosityLaw(**_section(values, f"model.{law}"))
    model_keys = _section(values, "model")
    if "kind" not in model_keys:
        model_keys["kind"] = cm.ModelKind.OLDROYD_B
    model = attempt("model", lambda: cm.ModelSpec(**model_keys, **laws))
    thermal = attempt("thermal", lambda: cm.ThermalSpec(**_section(values, "thermal")))
    bsec = _section(values, "boundary")
    tables = tuple((e, values[f"boundary.table.{e}"]) for e in EDGES if f"boundary.table.{e}" in values)
    boundary = BoundarySpec(**bsec, tables=tables)
    pert = Perturbation(**_section(values, "perturbation"))
    run = _section(values, "run")
    extra = {}
    if "functionals.m" in values:
        extra["m_values"] = values["functionals.m"]
    if "functionals.mn" in values:
        extra["mn_pairs"] = values["functionals.mn"]
    if grid is None or model is None or thermal is None:
        # the time-step bound needs all three; report the remaining checks
        if grid is not None:
            errors.extend(f"boundary: {v}" for v in boundary.violations(grid))
        errors.extend(pert.violations())
        raise cm.ConfigError(errors)
    cfg = SimConfig(grid=grid, model=model, thermal=thermal, boundary=boundary, perturbation=pert, **run, **extra)
    errors.extend(cfg.violations())
    if errors:
        raise cm.ConfigError(errors)
    return cfg


def parse_config(path: str | Path) -> SimConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    return parse_text(path.read_text(), str(path))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_flat(cfg: SimConfig) -> dict[str, str]:
    """Every key with its value rendered as text."""
    out: dict[str, str] = {}
    for f in fields(cfg.grid):
        out[f"grid.{f.name}"] = _fmt(getattr(cfg.grid, f.name))
    m = cfg.model
    out["model.kind"] = m.kind.value
    for k in ("mu", "rho", "a", "alpha", "b", "p"):
        out[f"model.{k}"] = _fmt(float(getattr(m, k)))
    for law in ("nu", "nu1"):
        obj = getattr(m, law)
        for f in fields(obj):
            val = getattr(obj, f.name)
            out[f"model.{law}.{f.name}"] = _fmt(val if isinstance(val, str) else float(val))
    for f in fields(cfg.thermal):
        out[f"thermal.{f.name}"] = _fmt(float(getattr(cfg.thermal, f.name)))
    b = cfg.boundary
    out["boundary.profile"] = b.profile
    for k in ("low", "high", "amplitude"):
        out[f"boundary.{k}"] = _fmt(float(getattr(b, k)))
    for edge, pairs in b.tables:
        out[f"boundary.table.{edge}"] = ", ".join(f"{float(s)!r}:{float(t)!r}" for s, t in pairs)
    out["run.dt"] = _fmt(float(cfg.dt))
    out["run.t_end"] = _fmt(float(cfg.t_end))
    out["run.output_every"] = str(cfg.output_every)
    out["run.allow_clipping"] = _fmt(cfg.allow_clipping)
    p = cfg.perturbation
    out["perturbation.velocity"] = _fmt(float(p.velocity))
    out["perturbation.mode"] = p.mode
    out["perturbation.conformation"] = _fmt(float(p.conformation))
    out["perturbation.temperature"] = _fmt(float(p.temperature))
    out["functionals.m"] = ", ".join(repr(float(x)) for x in cfg.m_values)
    out["functionals.mn"] = ", ".join(f"{float(a)!r}:{float(c)!r}" for a, c in cfg.mn_pairs)
    return out


def write_config(cfg: SimConfig, path: str | Path | None = None) -> str:
    """Render ``cfg`` (optionally also writing it to ``path``)."""
    text = "".join(f"{k} = {v}\n" for k, v in to_flat(cfg).items())
    if path is not None:
        Path(path).write_text(text)
    return text
