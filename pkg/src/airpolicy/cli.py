"""Command-line pipeline: ingest, screen, benchmark, synth, predict.

Every command validates its configuration and inputs fully before writing
anything, so a config error never leaves partial outputs. Exit codes:
0 success, 1 some cells failed but the run completed, 2 config or input
error. The output directory comes from --out, else the AIRPOLICY_OUT
environment variable, else the config.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import os
import sys

import numpy as np

from . import evaluation, models, report, similarity, synth
from .config import PipelineConfig, default_max_levels, load_config
from .dataset import (
    MEASURES,
    CityDataset,
    PollutantKind,
    read_city_csv,
    write_city_csv,
)
from .errors import AirPolicyError, ConfigError
from .ingest import (
    aggregate_periods,
    aggregate_stat_periods,
    build_city_dataset,
    parse_density_csv,
    parse_policy_csv,
    read_grid,
)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def _resolve_out(args, config: PipelineConfig | None = None, default: str = "out") -> str:
    if getattr(args, "out", None):
        return args.out
    env = os.environ.get("AIRPOLICY_OUT", "").strip()
    if env:
        return env
    if config is not None:
        return config.out_dir
    return default


def _load(args) -> PipelineConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    config = load_config(args.config, overrides=args.set or [],
                         out_dir=None, seed=args.seed)
    out = _resolve_out(args, config)
    if out != config.out_dir:
        config = load_config(args.config, overrides=args.set or [],
                             out_dir=out, seed=args.seed)
    return config


def _city_csv_path(out_dir: str, name: str) -> str:
    return os.path.join(out_dir, "cities", f"{name}.csv")


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def _collect_grids(grids_dir: str, year: int):
    by_pollutant = {}
    for p in PollutantKind:
        pdir = os.path.join(grids_dir, p.value)
        if not os.path.isdir(pdir):
            continue
        entries = []
        for fname in sorted(os.listdir(pdir)):
            if fname.endswith(".meta.json") or not fname.endswith(".csv"):
                continue
            stem = fname[:-4]
            try:
                date = dt.date.fromisoformat(stem)
            except ValueError:
                raise ConfigError(
                    f"grid file name {fname!r} in {pdir} is not an ISO date"
                )
            entries.append((date, read_grid(os.path.join(pdir, fname))))
        if entries:
            by_pollutant[p] = entries
    return by_pollutant


def cmd_ingest(args) -> int:
    config = _load(args)
    # Validate all inputs before creating any output.
    for city in config.cities:
        if not os.path.isfile(city.policy_csv):
            raise ConfigError(f"policy file not found: {city.policy_csv}")
        if city.density_csv is not None and not os.path.isfile(city.density_csv):
            raise ConfigError(f"density file not found: {city.density_csv}")
        if city.grids_dir is not None and not os.path.isdir(city.grids_dir):
            raise ConfigError(f"grid directory not found: {city.grids_dir}")
    max_levels = default_max_levels(config)
    os.makedirs(os.path.join(config.out_dir, "cities"), exist_ok=True)
    for city in config.cities:
        policy = parse_policy_csv(city.policy_csv, city.column_map, city.date_column)
        densities = {}
        if city.density_csv is not None:
            per_date = parse_density_csv(city.density_csv)
            for p, entries in per_date.items():
                densities[p] = aggregate_stat_periods(entries, config.year)
        else:
            for p, entries in _collect_grids(city.grids_dir, config.year).items():
                densities[p] = aggregate_periods(entries, config.year,
                                                 config.aggregation_mode)
        ds = build_city_dataset(
            city.name, config.year, policy, densities,
            max_levels=max_levels, center=city.center,
            box_half_width=city.box_half_width,
        )
        write_city_csv(ds, _city_csv_path(config.out_dir, city.name))
        n_measures = sum(1 for r in ds.records if r.has_all_measures())
        cover = " ".join(
            f"{p.value}={sum(1 for r in ds.records if p in r.pollutant_stats)}"
            for p in config.pollutants
        )
        print(f"{city.name}: {len(ds)} periods, complete-measure periods "
              f"{n_measures}, {cover}")
    return EXIT_OK


def _read_cities(config: PipelineConfig) -> list[CityDataset]:
    sets = []
    for city in config.cities:
        path = _city_csv_path(config.out_dir, city.name)
        if not os.path.isfile(path):
            raise ConfigError(
                f"city file not found: {path} (run the ingest command first)"
            )
        sets.append(read_city_csv(path))
    return sets


# ---------------------------------------------------------------------------
# screen
# ---------------------------------------------------------------------------

def cmd_screen(args) -> int:
    config = _load(args)
    city_sets = _read_cities(config)
    all_cells = []
    for p in config.pollutants:
        all_cells.extend(similarity.screen_all(
            city_sets, p,
            cost=config.dtw_cost,
            normalize=config.dtw_normalize,
            window=config.dtw_window,
        ))
    similarity.write_screen_csv(all_cells, os.path.join(config.out_dir, "screen.csv"))
    report.write_figure(report.figure_r2(all_cells), config.out_dir)
    report.write_figure(report.figure_dtw(all_cells), config.out_dir)
    summary = report.render_screen_summary(all_cells)
    with open(os.path.join(config.out_dir, "screen_summary.txt"), "w") as fh:
        fh.write(summary)
    print(summary, end="")
    failed = sum(1 for c in all_cells if c.error)
    return EXIT_PARTIAL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def _last_complete_input(ds_list: list[CityDataset], pollutant: PollutantKind):
    """Latest (over cities in order) record with all 10 features present."""
    found = None
    for ds in ds_list:
        for rec in ds.records:
            if rec.has_all_measures() and rec.has_pollutant(pollutant):
                found = (ds.city_name, rec)
    if found is None:
        return None
    city, rec = found
    mean, std = rec.pollutant_stats[pollutant]
    x = [rec.measures[m] for m in MEASURES] + [mean, std]
    return city, rec.period_index, np.array(x, dtype=np.float64)


def _forecast(model: models.TrainedModel, x: np.ndarray) -> np.ndarray:
    """Next-period (mean, std) in original units.

    Models fitted under a scaling mode expect transformed inputs and emit
    transformed targets; the fitted spec travels with the model file.
    """
    if model.scaling.fitted:
        pred = model.predict(model.scaling.transform_inputs(x))
        return model.scaling.invert_targets(pred)[0]
    return model.predict(x)[0]


def cmd_benchmark(args) -> int:
    config = _load(args)
    city_sets = _read_cities(config)
    specs = config.model_specs()
    eval_report, trained = evaluation.run_benchmark(
        city_sets, list(config.pollutants), specs, config.split,
        scaling_mode=config.scaling_mode, jobs=args.jobs,
    )
    evaluation.write_report_csv(eval_report, os.path.join(config.out_dir, "report.csv"))
    evaluation.write_report_json(eval_report, os.path.join(config.out_dir, "report.json"),
                                 config_echo=config.echo())
    models_dir = os.path.join(config.out_dir, "models")
    os.makedirs(models_dir, exist_ok=True)
    for (pollutant, kind) in sorted(trained, key=lambda pk: (pk[0].value, pk[1])):
        models.save_model(
            trained[(pollutant, kind)],
            os.path.join(models_dir, f"{pollutant.value}_{kind}.json"),
        )
    fig_a, fig_b = report.figure_rmse(eval_report)
    report.write_figure(fig_a, config.out_dir)
    report.write_figure(fig_b, config.out_dir)
    print(report.render_benchmark_summary(eval_report), end="")
    # Forecast demo: current density and next-period prediction per pollutant.
    for pollutant in config.pollutants:
        model = trained.get((pollutant, config.predict_kind))
        if model is None:
            continue
        last = _last_complete_input(city_sets, pollutant)
        if last is None:
            continue
        city, period, x = last
        pred = _forecast(model, x)
        print(f"{pollutant.value} ({city}, period {period}): "
              f"mean {x[-2]:.4e} mol/m2 -> next-period forecast "
              f"{pred[0]:.4e} mol/m2 (std {pred[1]:.4e})")
    return EXIT_PARTIAL if eval_report.n_failed else EXIT_OK


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def cmd_predict(args) -> int:
    config = _load(args)
    city_sets = _read_cities(config)
    rows = []
    for pollutant in config.pollutants:
        path = os.path.join(config.out_dir, "models",
                            f"{pollutant.value}_{config.predict_kind}.json")
        if not os.path.isfile(path):
            raise ConfigError(
                f"model file not found: {path} (run the benchmark command first)"
            )
        model = models.load_model(path)
        last = _last_complete_input(city_sets, pollutant)
        if last is None:
            raise ConfigError(
                f"no complete period found for {pollutant.value}"
            )
        city, period, x = last
        pred = _forecast(model, x)
        rows.append((pollutant.value, config.predict_kind, city, period,
                     x[-2], x[-1], pred[0], pred[1]))
        print(f"{pollutant.value} ({city}, period {period}): "
              f"mean {x[-2]:.4e} mol/m2 -> next-period forecast "
              f"{pred[0]:.4e} mol/m2 (std {pred[1]:.4e})")
    with open(os.path.join(config.out_dir, "forecast.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pollutant", "kind", "city", "period",
                         "current_mean", "current_std",
                         "forecast_mean", "forecast_std"])
        for row in rows:
            writer.writerow([row[0], row[1], row[2], str(row[3]),
                             repr(float(row[4])), repr(float(row[5])),
                             repr(float(row[6])), repr(float(row[7]))])
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    out = _resolve_out(args, None, default="synth")
    result = synth.generate(
        out_dir=out,
        profile=args.profile,
        seed=args.seed if args.seed is not None else 0,
        noise=args.noise,
        emit_grids=args.emit_grids,
    )
    print(f"wrote {len(result.city_dirs)} synthetic cities under {result.out_dir}")
    print(f"config: {result.config_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airpolicy",
        description="Policy-measure vs pollutant screening and forecasting pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--out", help="output directory (overrides config and env)")
        p.add_argument("--seed", type=int, default=None, help="override the global seed")
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
        p.add_argument("--set", action="append", metavar="K=V",
                       help="dotted config override, e.g. split.test_fraction=0.3")

    p_ingest = sub.add_parser("ingest", help="build per-city period datasets")
    add_common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_screen = sub.add_parser("screen", help="correlation and alignment screening")
    add_common(p_screen)
    p_screen.set_defaults(func=cmd_screen)

    p_bench = sub.add_parser("benchmark", help="train and score all learners")
    add_common(p_bench)
    p_bench.set_defaults(func=cmd_benchmark)

    p_pred = sub.add_parser("predict", help="forecast the next period from saved models")
    add_common(p_pred)
    p_pred.set_defaults(func=cmd_predict)

    p_synth = sub.add_parser("synth", help="generate synthetic city inputs")
    add_common(p_synth)
    p_synth.add_argument("--profile", choices=["linear", "null"], default="linear")
    p_synth.add_argument("--noise", type=float, default=0.01,
                         help="relative noise level for the linear profile")
    p_synth.add_argument("--emit-grids", action="store_true",
                         help="also write per-period density grid files")
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AirPolicyError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
