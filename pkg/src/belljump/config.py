"""Sectioned key=value run configuration.

Grammar: `[section]` headers, one `key = value` per line, `#` or `;`
comments (full-line or trailing), blank lines ignored.  Nesting is by
dotted keys (`trace.decimation = 10` inside `[run]`, or equivalently a
`[run.trace]` header).  Complex values are written as `re, im` pairs,
lists as comma-separated entries.  Unknown sections or keys, duplicate
keys, and malformed values are ParseErrors carrying line (and column)
positions; range and consistency violations are ValidationErrors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ParseError, ValidationError
from .params import PhysParams, canonical_a, make_params


@dataclass(frozen=True)
class ModelConfig:
    r_cut: float = 1.0
    r_min: float | None = None
    subleading: bool = False
    s_minus: complex = 0j
    s_plus: complex = 0j
    frozen: bool = False


@dataclass(frozen=True)
class TrackConfig:
    kind: str = "constant"  # constant | balanced | grid | file
    c_minus: complex = 1.0 + 0j
    c_plus: complex = 1j
    psi0: complex = 0j
    p0_init: float | None = None
    t_start: float = 0.0
    t_end: float = 1.0
    n: int = 33
    file: str | None = None
    times: tuple[float, ...] = ()
    c_minus_grid: tuple[complex, ...] = ()
    c_plus_grid: tuple[complex, ...] = ()
    psi0_grid: tuple[complex, ...] = ()


@dataclass(frozen=True)
class RunBlock:
    seed: int | None = None
    tol: float = 1e-8
    n_paths: int = 1000
    t0: float = 0.0
    theta0: float = math.pi / 2
    phi0: float = 0.0
    r0: float | None = None
    r_seed: float | None = None
    t_end: float | None = None
    decimation: int = 1
    probe_radius: float | None = None
    time_grid_n: int = 101
    snapshot_time: float | None = None
    output: str | None = None


@dataclass(frozen=True)
class RunConfig:
    params: PhysParams
    model: ModelConfig = field(default_factory=ModelConfig)
    track: TrackConfig = field(default_factory=TrackConfig)
    run: RunBlock = field(default_factory=RunBlock)


# ---------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------

def _float(raw, line, col):
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"expected a number, got {raw!r}", line, col) from None


def _int(raw, line, col):
    try:
        return int(raw, 0)
    except ValueError:
        raise ParseError(f"expected an integer, got {raw!r}", line, col) from None


def _bool(raw, line, col):
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ParseError(f"expected a boolean, got {raw!r}", line, col)


def _complex(raw, line, col):
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ParseError(
            f"expected a complex value as 're, im', got {raw!r}", line, col
        )
    return complex(_float(parts[0], line, col), _float(parts[1], line, col))


def _float_list(raw, line, col):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    return tuple(_float(p, line, col) for p in parts)


def _complex_list(raw, line, col):
    flat = _float_list(raw, line, col)
    if len(flat) % 2:
        raise ParseError(
            "complex list needs an even count of numbers (re, im pairs)",
            line,
            col,
        )
    return tuple(
        complex(flat[i], flat[i + 1]) for i in range(0, len(flat), 2)
    )


def _complex_scalar(raw, line, col):
    # a bare real is fine where the model allows a complex entry
    if "," in raw:
        return _complex(raw, line, col)
    return complex(_float(raw, line, col), 0.0)


def _str(raw, line, col):
    return raw.strip()


# (section, key) -> parser; params keys are collected separately because
# PhysParams is assembled through make_params
_PARAMS_KEYS = {
    "q": _float,
    "g": _complex_scalar,
    "a1": _float,
    "a2": _float,
    "a3": _float,
    "a4": _float,
    "m_tilde": _float,
    "kappa_tilde": _float,
}

_SCHEMA = {
    ("model", "r_cut"): _float,
    ("model", "r_min"): _float,
    ("model", "subleading"): _bool,
    ("model", "s_minus"): _complex,
    ("model", "s_plus"): _complex,
    ("model", "frozen"): _bool,
    ("track", "kind"): _str,
    ("track", "c_minus"): _complex,
    ("track", "c_plus"): _complex,
    ("track", "psi0"): _complex,
    ("track", "p0_init"): _float,
    ("track", "t_start"): _float,
    ("track", "t_end"): _float,
    ("track", "n"): _int,
    ("track", "file"): _str,
    ("track", "times"): _float_list,
    ("track", "c_minus_grid"): _complex_list,
    ("track", "c_plus_grid"): _complex_list,
    ("track", "psi0_grid"): _complex_list,
    ("run", "seed"): _int,
    ("run", "tol"): _float,
    ("run", "n_paths"): _int,
    ("run", "t0"): _float,
    ("run", "theta0"): _float,
    ("run", "phi0"): _float,
    ("run", "r0"): _float,
    ("run", "r_seed"): _float,
    ("run", "t_end"): _float,
    ("run", "decimation"): _int,
    ("run", "probe_radius"): _float,
    ("run", "time_grid_n"): _int,
    ("run", "snapshot_time"): _float,
    ("run", "output"): _str,
}

# nested spellings accepted by the grammar, normalized to flat fields
_ALIASES = {
    "run.trace.decimation": ("run", "decimation"),
    "run.trace.output": ("run", "output"),
}

_TRACK_KINDS = ("constant", "balanced", "grid", "file")


def _scan(text: str):
    """Yield (section, key, raw value, line, column) triples."""
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        # strip trailing comment, then whitespace
        body = raw
        for mark in ("#", ";"):
            cut = body.find(mark)
            if cut >= 0:
                body = body[:cut]
        line = body.strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", lineno, 1)
            section = line[1:-1].strip().lower()
            if not section:
                raise ParseError("empty section header", lineno, 1)
            continue
        if "=" not in line:
            raise ParseError(
                f"expected 'key = value', got {line!r}", lineno, 1
            )
        key, _, value = line.partition("=")
        col = raw.index("=") + 2
        key = key.strip().lower()
        if not key:
            raise ParseError("missing key before '='", lineno, 1)
        if section is None:
            raise ParseError(
                f"key {key!r} appears before any [section] header", lineno, 1
            )
        # dotted keys nest under the current section; a dotted section
        # header is the same thing spelled the other way round
        full = f"{section}.{key}"
        parts = full.split(".")
        yield ".".join(parts[:-1]), parts[-1], value.strip(), lineno, col


def parse_config(text: str) -> RunConfig:
    params_raw: dict[str, float] = {}
    blocks: dict[str, dict[str, object]] = {"model": {}, "track": {}, "run": {}}
    seen: set[tuple[str, str]] = set()

    for section, key, value, lineno, col in _scan(text):
        if f"{section}.{key}" in _ALIASES:
            section, key = _ALIASES[f"{section}.{key}"]
        if (section, key) in seen:
            raise ParseError(f"duplicate key {section}.{key}", lineno, col)
        seen.add((section, key))
        if section == "params":
            if key not in _PARAMS_KEYS:
                raise ParseError(f"unknown key params.{key}", lineno, col)
            params_raw[key] = _PARAMS_KEYS[key](value, lineno, col)
        elif (section, key) in _SCHEMA:
            blocks[section][key] = _SCHEMA[(section, key)](value, lineno, col)
        else:
            raise ParseError(f"unknown key {section}.{key}", lineno, col)

    if "q" not in params_raw:
        raise ValidationError("config must set params.q")
    q = params_raw["q"]
    have_a = [k for k in ("a1", "a2", "a3", "a4") if k in params_raw]
    if have_a and len(have_a) != 4:
        raise ValidationError("set all of a1..a4 or none")
    try:
        if have_a:
            a = tuple(params_raw[k] for k in ("a1", "a2", "a3", "a4"))
        else:
            a = canonical_a(q)
        params = make_params(
            q,
            params_raw.get("g", 1.0),
            *a,
            m_tilde=params_raw.get("m_tilde", 0.5),
            kappa_tilde=params_raw.get("kappa_tilde", 1.0),
        )
    except ValueError as exc:
        raise ValidationError(f"bad [params] block: {exc}") from exc

    model = ModelConfig(**blocks["model"])
    track = TrackConfig(**blocks["track"])
    run = RunBlock(**blocks["run"])
    _validate(model, track, run)
    return RunConfig(params=params, model=model, track=track, run=run)


def _validate(model: ModelConfig, track: TrackConfig, run: RunBlock) -> None:
    if model.r_cut <= 0.0:
        raise ValidationError("model.r_cut must be positive")
    if model.r_min is not None and not 0.0 < model.r_min < 0.5 * model.r_cut:
        raise ValidationError("model.r_min must lie in (0, r_cut/2)")
    if track.kind not in _TRACK_KINDS:
        raise ValidationError(
            f"track.kind must be one of {', '.join(_TRACK_KINDS)}"
        )
    if track.kind == "balanced" and track.p0_init is None:
        raise ValidationError("balanced track needs track.p0_init")
    if track.kind == "file":
        if track.file is None:
            raise ValidationError("file track needs track.file")
        if not Path(track.file).exists():
            raise ValidationError(f"track file not found: {track.file}")
    if track.kind == "grid":
        m = len(track.times)
        if m == 0:
            raise ValidationError("grid track needs track.times")
        if not (
            len(track.c_minus_grid)
            == len(track.c_plus_grid)
            == len(track.psi0_grid)
            == m
        ):
            raise ValidationError(
                "grid track arrays must all have len(track.times) entries"
            )
    if track.kind != "grid" and track.t_end <= track.t_start:
        raise ValidationError("track.t_end must exceed track.t_start")
    if run.tol <= 0.0:
        raise ValidationError("run.tol must be positive")
    if run.n_paths < 0:
        raise ValidationError("run.n_paths must be nonnegative")
    if run.decimation < 1:
        raise ValidationError("run.decimation must be at least 1")
    if run.time_grid_n < 2:
        raise ValidationError("run.time_grid_n must be at least 2")


# ---------------------------------------------------------------------
# serialization (round-trips through parse_config)
# ---------------------------------------------------------------------

def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, complex):
        return f"{value.real!r}, {value.imag!r}"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, tuple):
        out = []
        for v in value:
            if isinstance(v, complex):
                out.append(f"{v.real!r}, {v.imag!r}")
            else:
                out.append(repr(float(v)))
        return ", ".join(out)
    return str(value)


def serialize(config: RunConfig) -> str:
    p = config.params
    lines = [
        "[params]",
        f"q = {p.q!r}",
        f"g = {_format(p.g)}",
        f"a1 = {p.a1!r}",
        f"a2 = {p.a2!r}",
        f"a3 = {p.a3!r}",
        f"a4 = {p.a4!r}",
        f"m_tilde = {p.m_tilde!r}",
        f"kappa_tilde = {p.kappa_tilde!r}",
    ]
    for name, block in (
        ("model", config.model),
        ("track", config.track),
        ("run", config.run),
    ):
        lines.append("")
        lines.append(f"[{name}]")
        for f in fields(block):
            value = getattr(block, f.name)
            if value is None or (isinstance(value, tuple) and not value):
                continue
            lines.append(f"{f.name} = {_format(value)}")
    return "\n".join(lines) + "\n"
