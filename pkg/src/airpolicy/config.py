"""Pipeline configuration: one JSON document, fully validated up front.

Unknown keys anywhere in the document are rejected so typos fail before any
work starts or any output is created. Dotted --set overrides are applied to
the raw document and the result is re-validated as a whole.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .dataset import MeasureKind, PollutantKind, DEFAULT_MAX_LEVEL
from .errors import ConfigError, DomainError
from .evaluation import SplitSpec
from .ingest import DEFAULT_COLUMN_MAP
from .models import HYPER_DEFAULTS, KINDS, ModelSpec


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return d[key]


@dataclass(frozen=True)
class CityConfig:
    name: str
    policy_csv: str
    density_csv: str | None = None
    grids_dir: str | None = None
    center: tuple[float, float] = (0.0, 0.0)
    box_half_width: float = 0.25
    column_map: dict[MeasureKind, str] = field(default_factory=lambda: dict(DEFAULT_COLUMN_MAP))
    date_column: str = "date"

    @classmethod
    def from_dict(cls, d: dict, where: str) -> "CityConfig":
        _check_keys(d, {"name", "policy_csv", "density_csv", "grids_dir",
                        "center", "box_half_width", "column_map", "date_column"}, where)
        name = _require(d, "name", where)
        policy_csv = _require(d, "policy_csv", where)
        density_csv = d.get("density_csv")
        grids_dir = d.get("grids_dir")
        if (density_csv is None) == (grids_dir is None):
            raise ConfigError(
                f"{where}: exactly one of density_csv or grids_dir is required"
            )
        center = d.get("center", [0.0, 0.0])
        if not (isinstance(center, (list, tuple)) and len(center) == 2):
            raise ConfigError(f"{where}: center must be [lon, lat]")
        column_map = dict(DEFAULT_COLUMN_MAP)
        for key, col in d.get("column_map", {}).items():
            try:
                column_map[MeasureKind(key)] = str(col)
            except ValueError:
                raise ConfigError(f"{where}: unknown measure {key!r} in column_map")
        return cls(
            name=str(name),
            policy_csv=str(policy_csv),
            density_csv=None if density_csv is None else str(density_csv),
            grids_dir=None if grids_dir is None else str(grids_dir),
            center=(float(center[0]), float(center[1])),
            box_half_width=float(d.get("box_half_width", 0.25)),
            column_map=column_map,
            date_column=str(d.get("date_column", "date")),
        )


@dataclass(frozen=True)
class PipelineConfig:
    year: int
    cities: tuple[CityConfig, ...]
    pollutants: tuple[PollutantKind, ...]
    model_kinds: tuple[str, ...]
    model_overrides: dict[str, dict]
    split: SplitSpec
    scaling_mode: str = "none"
    measure_max_levels: dict[MeasureKind, int] = field(default_factory=dict)
    dtw_cost: str = "absolute"
    dtw_normalize: bool = True
    dtw_window: int | None = None
    aggregation_mode: str = "per_grid"
    predict_kind: str = "rfr"
    out_dir: str = "out"
    seed: int = 0

    def model_specs(self) -> list[ModelSpec]:
        specs = []
        for kind in self.model_kinds:
            over = dict(self.model_overrides.get(kind, {}))
            seed = over.pop("seed", None)
            specs.append(ModelSpec(kind=kind, hyperparameters=over, seed=seed))
        return specs

    def echo(self) -> dict:
        """Plain-dict form of the validated config, for report embedding."""
        return {
            "year": self.year,
            "cities": [
                {
                    "name": c.name,
                    "policy_csv": c.policy_csv,
                    "density_csv": c.density_csv,
                    "grids_dir": c.grids_dir,
                    "center": list(c.center),
                    "box_half_width": c.box_half_width,
                    "date_column": c.date_column,
                    "column_map": {m.value: col for m, col in sorted(
                        c.column_map.items(), key=lambda kv: kv[0].value)},
                }
                for c in self.cities
            ],
            "pollutants": [p.value for p in self.pollutants],
            "models": {
                "kinds": list(self.model_kinds),
                "overrides": {k: dict(v) for k, v in sorted(self.model_overrides.items())},
            },
            "split": self.split.to_dict(),
            "scaling_mode": self.scaling_mode,
            "measure_max_levels": {m.value: v for m, v in sorted(
                self.measure_max_levels.items(), key=lambda kv: kv[0].value)},
            "dtw": {"cost": self.dtw_cost, "normalize": self.dtw_normalize,
                    "window": self.dtw_window},
            "aggregation_mode": self.aggregation_mode,
            "predict": {"kind": self.predict_kind},
            "out_dir": self.out_dir,
            "seed": self.seed,
        }


_TOP_KEYS = {
    "year", "cities", "pollutants", "models", "split", "scaling_mode",
    "measure_max_levels", "dtw", "aggregation_mode", "predict", "out_dir", "seed",
}


def config_from_dict(d: dict) -> PipelineConfig:
    if not isinstance(d, dict):
        raise ConfigError("config root must be an object")
    _check_keys(d, _TOP_KEYS, "config")
    year = _require(d, "year", "config")
    if not isinstance(year, int):
        raise ConfigError("year must be an integer")
    cities_raw = _require(d, "cities", "config")
    if not isinstance(cities_raw, list) or not cities_raw:
        raise ConfigError("cities must be a non-empty list")
    cities = tuple(
        CityConfig.from_dict(c, f"cities[{i}]") for i, c in enumerate(cities_raw)
    )
    names = [c.name for c in cities]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate city names")

    pollutants_raw = d.get("pollutants", [p.value for p in PollutantKind])
    try:
        pollutants = tuple(PollutantKind(p) for p in pollutants_raw)
    except ValueError as exc:
        raise ConfigError(f"unknown pollutant in config: {exc}")
    if not pollutants:
        raise ConfigError("pollutants must be non-empty")

    models_raw = d.get("models", {})
    _check_keys(models_raw, {"kinds", "overrides"}, "models")
    kinds_raw = models_raw.get("kinds", list(KINDS))
    for k in kinds_raw:
        if k not in KINDS:
            raise ConfigError(f"unknown model kind {k!r}; expected one of {KINDS}")
    overrides_raw = models_raw.get("overrides", {})
    overrides: dict[str, dict] = {}
    for k, over in overrides_raw.items():
        if k not in KINDS:
            raise ConfigError(f"override for unknown model kind {k!r}")
        if not isinstance(over, dict):
            raise ConfigError(f"models.overrides.{k} must be an object")
        allowed = set(HYPER_DEFAULTS[k]) | {"seed"}
        if k == "mgbr":
            allowed.add("estimators")
        _check_keys(over, allowed, f"models.overrides.{k}")
        overrides[k] = dict(over)

    split_raw = d.get("split", {})
    _check_keys(split_raw, {"mode", "test_fraction", "seed"}, "split")
    try:
        split = SplitSpec(
            mode=split_raw.get("mode", "chronological"),
            test_fraction=float(split_raw.get("test_fraction", 0.2)),
            seed=int(split_raw.get("seed", 0)),
        )
    except DomainError as exc:
        raise ConfigError(f"split: {exc}")

    scaling_mode = d.get("scaling_mode", "none")
    if scaling_mode not in ("none", "min_max", "z_score"):
        raise ConfigError(f"unknown scaling_mode {scaling_mode!r}")

    max_levels: dict[MeasureKind, int] = {}
    for key, v in d.get("measure_max_levels", {}).items():
        try:
            measure = MeasureKind(key)
        except ValueError:
            raise ConfigError(f"unknown measure {key!r} in measure_max_levels")
        if not isinstance(v, int) or v < 1:
            raise ConfigError(f"measure_max_levels.{key} must be a positive integer")
        max_levels[measure] = v

    dtw_raw = d.get("dtw", {})
    _check_keys(dtw_raw, {"cost", "normalize", "window"}, "dtw")
    dtw_cost = dtw_raw.get("cost", "absolute")
    if dtw_cost not in ("absolute", "squared"):
        raise ConfigError(f"unknown dtw cost {dtw_cost!r}")
    dtw_window = dtw_raw.get("window")
    if dtw_window is not None and (not isinstance(dtw_window, int) or dtw_window < 0):
        raise ConfigError("dtw.window must be a non-negative integer or null")

    aggregation_mode = d.get("aggregation_mode", "per_grid")
    if aggregation_mode not in ("per_grid", "pooled_pixels"):
        raise ConfigError(f"unknown aggregation_mode {aggregation_mode!r}")

    predict_raw = d.get("predict", {})
    _check_keys(predict_raw, {"kind"}, "predict")
    predict_kind = predict_raw.get("kind", "rfr")
    if predict_kind not in KINDS:
        raise ConfigError(f"unknown predict kind {predict_kind!r}")

    return PipelineConfig(
        year=year,
        cities=cities,
        pollutants=pollutants,
        model_kinds=tuple(kinds_raw),
        model_overrides=overrides,
        split=split,
        scaling_mode=scaling_mode,
        measure_max_levels=max_levels,
        dtw_cost=dtw_cost,
        dtw_normalize=bool(dtw_raw.get("normalize", True)),
        dtw_window=dtw_window,
        aggregation_mode=aggregation_mode,
        predict_kind=predict_kind,
        out_dir=str(d.get("out_dir", "out")),
        seed=int(d.get("seed", 0)),
    )


def parse_set_override(text: str) -> tuple[list[str], object]:
    """Parse one K=V override; the key is a dotted path, V parses as JSON or stays a string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, _, raw = text.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply dotted --set overrides to a raw config document."""
    for text in overrides:
        path, value = parse_set_override(text)
        node = doc
        for part in path[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = {}
                node[part] = nxt
            if not isinstance(nxt, dict):
                raise ConfigError(
                    f"override path {'.'.join(path)} crosses a non-object value"
                )
            node = nxt
        node[path[-1]] = value
    return doc


def load_config(path: str, overrides: list[str] | None = None,
                out_dir: str | None = None, seed: int | None = None) -> PipelineConfig:
    """Read, override, and validate a config file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    doc = apply_overrides(doc, overrides or [])
    if out_dir is not None:
        doc["out_dir"] = out_dir
    if seed is not None:
        doc["seed"] = seed
    return config_from_dict(doc)


def default_max_levels(config: PipelineConfig) -> dict[MeasureKind, int]:
    levels = {m: DEFAULT_MAX_LEVEL for m in MeasureKind}
    levels.update(config.measure_max_levels)
    return levels
