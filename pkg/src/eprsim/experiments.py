"""Experiment configuration, sweep orchestration and CSV output.

Config files are plain ``key = value`` text, one field of
:class:`ExperimentConfig` per line, ``#`` starts a comment. Lists are comma
separated and ``none`` clears an optional field.
"""
from __future__ import annotations

import dataclasses
import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import analytic
from .analytic import ChshSetting
from .coincidence import (
    WindowConfig,
    counts,
    pair_events,
    visibility_scan_multi,
    window_sweep,
)
from .simcore import SourceConfig, format_float, run_experiment, write_events_csv

MODES = ("analytic-surface", "simulate", "window-sweep", "visibility-scan")
OUTPUT_DIR_ENV = "EPRSIM_OUTPUT_DIR"

WINDOW_SWEEP_HEADER = "tau,S_emp,S_err,n_pairs,frac_illegitimate"
VISIBILITY_HEADER = "w0,visibility,n_min,n_max"
SURFACE_HEADER = "w,v,SS"
SUMMARY_HEADER = "zl,zr,tau,N_pp,N_pm,N_mp,N_mm,E"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "analytic-surface"
    # source
    rate: float = 1e4
    pulse_length: float = 1e-6
    duration: float = 10.0
    efficiency: float = 1.0
    seed: int = 0
    single_variant: Optional[int] = None
    # windows; None means the logarithmic default grid
    taus: Optional[tuple[float, ...]] = None
    n_tau: int = 9
    tau_min_factor: float = 1e-2
    tau_max_factor: float = 1e2
    # angles
    zl: float = 0.0
    zr: float = 0.0
    w: float = 0.0
    v: float = 3 * math.pi / 8
    grid_w: Optional[int] = None
    grid_v: Optional[int] = None
    y: float = 1.0
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {self.mode!r}")
        if self.taus is not None:
            object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
            if not self.taus:
                raise ConfigError("taus must not be empty")
            for t in self.taus:
                if not (math.isfinite(t) and t > 0):
                    raise ConfigError(f"window widths must be positive, got {t!r}")
        for name in ("n_tau", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("grid_w", "grid_v"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0 < self.tau_min_factor <= self.tau_max_factor:
            raise ConfigError("need 0 < tau_min_factor <= tau_max_factor")
        if not (math.isfinite(self.y) and self.y > 0):
            raise ConfigError(f"y must be positive, got {self.y!r}")
        try:
            self.source()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def source(self) -> SourceConfig:
        return SourceConfig(
            self.rate, self.pulse_length, self.duration,
            self.efficiency, self.seed, self.single_variant,
        )

    def tau_grid(self) -> list[float]:
        if self.taus is not None:
            return sorted(self.taus)
        factors = np.logspace(
            math.log10(self.tau_min_factor), math.log10(self.tau_max_factor), self.n_tau
        )
        return [float(f * self.pulse_length) for f in factors]

    def grid_sizes(self) -> tuple[int, int]:
        # analytic surfaces are cheap, simulated scans are not
        default = (64, 64) if self.mode == "analytic-surface" else (16, 16)
        return (self.grid_w or default[0], self.grid_v or default[1])

    def settings(self) -> ChshSetting:
        return ChshSetting.from_wv(self.w, self.v)

    def output_path(self) -> Path:
        if self.out:
            return Path(self.out)
        base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
        return base / f"{self.mode}.csv"


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(config: ExperimentConfig) -> str:
    lines = [f"{f.name} = {_format_value(getattr(config, f.name))}" for f in fields(config)]
    return "\n".join(lines) + "\n"


_FIELD_TYPES = {
    "mode": str, "out": str,
    "seed": int, "single_variant": int, "n_tau": int, "grid_w": int, "grid_v": int, "workers": int,
    "taus": tuple,
}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    kind = _FIELD_TYPES.get(name, float)
    if raw.lower() == "none":
        return None
    try:
        if kind is tuple:
            return tuple(float(part) for part in raw.split(",") if part.strip())
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_updates(text: str) -> dict:
    known = {f.name for f in fields(ExperimentConfig)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _coerce(key, raw)
    return updates


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    return dataclasses.replace(base or ExperimentConfig(), **parse_updates(text))


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


@contextmanager
def atomic_writer(path: Path):
    """Write to a temporary sibling and rename on success; no partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}_{suffix}{path.suffix or '.csv'}")


def _angle_grid(n: int) -> np.ndarray:
    return np.arange(n) * (np.pi / n)  # uniform over [0, pi)


def cmd_analytic_surface(config: ExperimentConfig) -> Path:
    """Write ``w,v,SS`` rows of the CHSH surface over [0, pi) x [0, pi)."""
    nw, nv = config.grid_sizes()
    w, v = _angle_grid(nw), _angle_grid(nv)
    surface = analytic.ss_surface(w, v, config.y)
    path = config.output_path()
    with atomic_writer(path) as fh:
        fh.write(SURFACE_HEADER + "\n")
        for i, wi in enumerate(w.tolist()):
            for j, vj in enumerate(v.tolist()):
                fh.write(f"{format_float(wi)},{format_float(vj)},{format_float(surface[i, j])}\n")
    return path


def cmd_simulate(config: ExperimentConfig) -> tuple[Path, Path]:
    """Raw event dump plus a one-line coincidence summary at a single window."""
    taus = config.taus if config.taus is not None else (config.pulse_length,)
    if len(taus) != 1:
        raise ConfigError("simulate mode takes exactly one window width")
    tau = taus[0]
    left, right = run_experiment(config.source(), config.zl, config.zr)
    stats = counts(pair_events(left, right, WindowConfig(tau)))
    events_path = config.output_path()
    summary_path = _sibling(events_path, "summary")
    with atomic_writer(events_path) as fh:
        write_events_csv(fh, left, right)
    E = "undefined" if stats.E is None else format_float(stats.E)
    with atomic_writer(summary_path) as fh:
        fh.write(SUMMARY_HEADER + "\n")
        fh.write(
            f"{format_float(config.zl)},{format_float(config.zr)},{format_float(tau)},"
            f"{stats.n_pp},{stats.n_pm},{stats.n_mp},{stats.n_mm},{E}\n"
        )
    return events_path, summary_path


def _opt(x) -> str:
    return "undefined" if x is None else format_float(x)


def cmd_window_sweep(config: ExperimentConfig) -> Path:
    """CHSH versus window width at the settings generated from (w, v)."""
    points = window_sweep(config.source(), config.settings(), config.tau_grid(), config.workers)
    path = config.output_path()
    with atomic_writer(path) as fh:
        fh.write(WINDOW_SWEEP_HEADER + "\n")
        for p in points:
            fh.write(
                f"{format_float(p.tau)},{_opt(p.S)},{_opt(p.S_err)},"
                f"{p.n_pairs},{format_float(p.frac_illegitimate)}\n"
            )
    return path


def cmd_visibility_scan(config: ExperimentConfig) -> list[Path]:
    """One ``w0,visibility,n_min,n_max`` file per window, plus an index file.

    Minima of the visibility column mark the absolute orientations where the
    fringe washes out.
    """
    nw, nd = config.grid_sizes()
    taus = config.tau_grid()
    curves = visibility_scan_multi(
        config.source(), _angle_grid(nw), _angle_grid(nd), taus, config.workers
    )
    base = config.output_path()
    paths = []
    for k, tau in enumerate(taus):
        path = _sibling(base, f"tau{k:02d}")
        with atomic_writer(path) as fh:
            fh.write(VISIBILITY_HEADER + "\n")
            for pt in curves[tau]:
                fh.write(f"{format_float(pt.w0)},{format_float(pt.visibility)},{pt.n_min},{pt.n_max}\n")
        paths.append(path)
    index = _sibling(base, "index")
    with atomic_writer(index) as fh:
        fh.write("index,tau,file\n")
        for k, (tau, path) in enumerate(zip(taus, paths)):
            fh.write(f"{k},{format_float(tau)},{path.name}\n")
    return paths + [index]


COMMANDS = {
    "analytic-surface": cmd_analytic_surface,
    "simulate": cmd_simulate,
    "window-sweep": cmd_window_sweep,
    "visibility-scan": cmd_visibility_scan,
}


def run(config: ExperimentConfig) -> list[Path]:
    result = COMMANDS[config.mode](config)
    if isinstance(result, Path):
        return [result]
    return list(result)
