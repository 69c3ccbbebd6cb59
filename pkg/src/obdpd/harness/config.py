"""Experiment configuration: a flat TOML file with units in the key names.

Unknown keys are rejected so that a typo cannot silently fall back to a
default. ``ExperimentConfig.to_toml`` and ``ExperimentConfig.from_toml`` round-trip
losslessly.
"""

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgument
from ..scene import Scene, SearchGrid, StationGeometry, as_position
from ..signal import SignalSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ESTIMATORS = ("dpd", "obdpd")
CHANNEL_MODELS = ("random", "unit")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    station_x_km: tuple = (2.5, -2.5, -2.5, 2.5)
    station_y_km: tuple = (2.5, 2.5, -2.5, -2.5)
    num_elements: int = 4
    element_spacing_m: float = 0.15
    carrier_wavelength_m: float = 0.3
    broadside_target_x_km: float = 0.0
    broadside_target_y_km: float = 0.0
    propagation_speed_m_per_s: float = 3e8
    sampling_period_s: float = 1e-5

    emitter_x_km: float = 1.0
    emitter_y_km: float = 0.5

    num_samples: int = 16
    snr_db: float = 0.0
    source_power: float = 1.0
    channel_model: str = "random"

    grid_x_min_km: float = -2.5
    grid_x_max_km: float = 2.5
    grid_y_min_km: float = -2.5
    grid_y_max_km: float = 2.5
    grid_nx: int = 101
    grid_ny: int = 101
    grid_refine_levels: int = 0

    num_trials: int = 250
    seed: int = 2021
    estimators: str = "both"
    sweep_snr_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0)
    sweep_num_samples: tuple = (16, 32, 64, 128)
    output_dir: str = "results"

    def __post_init__(self):
        try:
            self._coerce()
            self._validate()
        except InvalidArgument as exc:
            raise ConfigError(str(exc)) from exc

    def _coerce(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            try:
                if f.type is int or f.type == "int":
                    if isinstance(v, bool) or int(v) != v:
                        raise ConfigError(f"{f.name} must be an integer, got {v!r}")
                    v = int(v)
                elif f.type is float or f.type == "float":
                    if isinstance(v, bool):
                        raise ConfigError(f"{f.name} must be a number, got {v!r}")
                    v = float(v)
                elif f.type is str or f.type == "str":
                    if not isinstance(v, str):
                        raise ConfigError(f"{f.name} must be a string, got {v!r}")
                elif f.name == "sweep_num_samples":
                    v = tuple(int(x) for x in v)
                else:
                    v = tuple(float(x) for x in v)
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"{f.name}: cannot interpret {v!r}") from exc
            object.__setattr__(self, f.name, v)

    def _validate(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            vals = v if isinstance(v, tuple) else (v,)
            if any(isinstance(x, float) and not np.isfinite(x) for x in vals):
                raise ConfigError(f"{f.name} must be finite")
        if len(self.station_x_km) != len(self.station_y_km):
            raise ConfigError("station_x_km and station_y_km differ in length")
        if len(self.station_x_km) < 2:
            raise ConfigError("at least two stations are required")
        if self.num_trials < 1:
            raise ConfigError("num_trials must be >= 1")
        if self.channel_model not in CHANNEL_MODELS:
            raise ConfigError(f"channel_model must be one of {CHANNEL_MODELS}")
        if self.estimators not in ESTIMATORS + ("both",):
            raise ConfigError("estimators must be 'dpd', 'obdpd' or 'both'")
        if self.grid_refine_levels < 0:
            raise ConfigError("grid_refine_levels must be >= 0")
        for n in (self.num_samples,) + self.sweep_num_samples:
            if n < 1 or n & (n - 1):
                raise ConfigError(f"sample counts must be powers of two, got {n}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        scene = self.scene()
        self.signal_spec()
        self.grid()
        p = as_position(self.emitter_position)
        if any(np.array_equal(p, g.location) for g in scene.stations):
            raise ConfigError("emitter coincides with a station")

    # --- derived objects ---------------------------------------------------

    @property
    def emitter_position(self):
        return np.array([self.emitter_x_km, self.emitter_y_km])

    @property
    def selected_estimators(self):
        return ESTIMATORS if self.estimators == "both" else (self.estimators,)

    def scene(self):
        target = (self.broadside_target_x_km, self.broadside_target_y_km)
        stations = [
            StationGeometry.facing((x, y), target, num_elements=self.num_elements,
                                   element_spacing=self.element_spacing_m,
                                   carrier_wavelength=self.carrier_wavelength_m)
            for x, y in zip(self.station_x_km, self.station_y_km)
        ]
        return Scene(stations, self.propagation_speed_m_per_s, self.sampling_period_s)

    def signal_spec(self):
        return SignalSpec(self.num_samples, self.source_power, self.snr_db)

    def grid(self):
        return SearchGrid(self.grid_x_min_km, self.grid_x_max_km, self.grid_y_min_km,
                          self.grid_y_max_km, self.grid_nx, self.grid_ny)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    # --- serialisation -----------------------------------------------------

    def to_toml(self):
        lines = ["# obdpd experiment configuration"]
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {_toml_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_toml(cls, text):
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_toml(text)

    def sha256(self):
        """Digest of every setting except ``output_dir``, which does not affect results."""
        text = self.replace(output_dir="").to_toml()
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _toml_value(v):
    if isinstance(v, tuple):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


PRESETS = {
    # heat maps at 0 dB, N = 16
    "fig1": ExperimentConfig(),
    # RMS miss distance vs SNR at N = 32
    "fig2a": ExperimentConfig(num_samples=32, grid_refine_levels=2),
    # RMS miss distance vs N at 0 dB
    "fig2b": ExperimentConfig(num_samples=32, grid_refine_levels=2),
    # equal per-station scale (b = 1, common noise), large N
    "scenario_h": ExperimentConfig(channel_model="unit", num_samples=2 ** 14,
                                   grid_nx=51, grid_ny=51, num_trials=50),
}
