"""Seeded Monte Carlo harness: runs the numerical sweeps as reproducible CSV
series, plus config-file loading for the CLI.

One trial is one channel realization, evaluated across the whole sweep grid
so per-trial comparisons are paired.  Trials fan out to a process pool and
merge in trial order, so results are byte-identical for a fixed
(spec, master_seed) regardless of worker count.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import algorithms as alg
from .channel import draw_channels
from .errors import DomainError, InvalidConfigError, SeebeamError
from .model import SystemConfig, dbm_to_w, jain_index

CSV_SCHEMA = "seebeam-sweep-csv v1"

EXPERIMENTS = ("convergence", "see_vs_t", "fairness", "outage", "aux_rate", "harvest")
TSBAJ_ALGOS = ("sdp", "zfbf", "mrt-zfbf")
ALL_ALGOS = TSBAJ_ALGOS + tuple(f"srm-{a}" for a in TSBAJ_ALGOS)


class ConfigParseError(SeebeamError, ValueError):
    """Config file could not be parsed or validated; message carries context."""


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: experiment id, base scenario, sweep grid and trial plan."""

    experiment: str
    config: SystemConfig
    grid: tuple[float, ...]
    trials: int
    master_seed: int
    algorithms: tuple[str, ...]
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidConfigError(
                f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not self.grid:
            raise InvalidConfigError("sweep grid must be nonempty")
        diffs = np.diff(self.grid)
        if len(self.grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise InvalidConfigError("sweep grid must be strictly monotone")
        if self.trials < 1:
            raise InvalidConfigError("trials must be >= 1")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")
        bad = set(self.algorithms) - set(ALL_ALGOS)
        if bad:
            raise InvalidConfigError(f"unknown algorithms: {sorted(bad)}")


_DEFAULT_GRIDS = {
    "convergence": (0.0,),
    "see_vs_t": (0.0,),
    "fairness": tuple(np.round(np.linspace(0.1, 0.9, 9), 10)),
    "outage": tuple(float(d) for d in (35.0, 37.0, 39.0, 41.0, 43.0)),   # dBm
    "aux_rate": tuple(float(r) for r in
                      (10e3, 30e3, 50e3, 70e3, 90e3, 110e3, 130e3)),     # nats/s
    "harvest": tuple(float(d) for d in (-15.0, -10.0, -5.0, 0.0)),       # dBm
}

_DEFAULT_TRIALS = {"convergence": 1, "see_vs_t": 1, "fairness": 50,
                   "outage": 500, "aux_rate": 200, "harvest": 200}


def default_spec(experiment: str, config: SystemConfig | None = None, *,
                 trials: int | None = None, master_seed: int = 0,
                 algorithms: tuple[str, ...] | None = None,
                 workers: int = 1) -> ExperimentSpec:
    if experiment not in EXPERIMENTS:
        raise InvalidConfigError(
            f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    if algorithms is None:
        algorithms = (("sdp",) if experiment == "fairness" else
                      TSBAJ_ALGOS if experiment in ("convergence", "see_vs_t", "outage")
                      else ALL_ALGOS)
    return ExperimentSpec(
        experiment=experiment,
        config=config or SystemConfig(),
        grid=_DEFAULT_GRIDS[experiment],
        trials=trials if trials is not None else _DEFAULT_TRIALS[experiment],
        master_seed=master_seed,
        algorithms=tuple(algorithms),
        workers=workers,
    )


@dataclass(frozen=True)
class SweepResult:
    spec: ExperimentSpec
    trial_rows: tuple[dict, ...]      # raw per-trial rows, replayable by seed
    aggregate_rows: tuple[dict, ...]  # one row per (grid point, algorithm, statistic)

    def aggregate(self, grid_value, algorithm, statistic) -> float:
        for row in self.aggregate_rows:
            if (row["grid_value"] == grid_value and row["algorithm"] == algorithm
                    and row["statistic"] == statistic):
                return row["value"]
        raise KeyError((grid_value, algorithm, statistic))


# ---------------------------------------------------------------------------
# per-trial jobs (module-level so they pickle into worker processes)


def _trial_seed(master_seed: int, trial: int):
    return (master_seed, trial)


def _fairness_config(base: SystemConfig, phi1: float) -> SystemConfig:
    d = base.lue_dist_m[:2] if len(base.lue_dist_m) >= 2 else (16.0, 19.0)
    return base.with_(n_lue=2, psr_ratios=(phi1, 1.0 - phi1), lue_dist_m=d)


def _rows_for_trace(algorithm, trial, seed, out):
    rows = []
    for step, pt in enumerate(out.trace):
        for metric, value in (("t", pt.t), ("f", pt.f_t), ("ptot", pt.total_power_w),
                              ("see", pt.see), ("asee", pt.asee)):
            rows.append(dict(grid_value=float(step), algorithm=algorithm,
                             trial=trial, seed=seed, metric=metric, value=value))
    return rows


def _job_convergence(spec: ExperimentSpec, trial: int) -> list[dict]:
    seed = _trial_seed(spec.master_seed, trial)
    channels = draw_channels(spec.config, seed)
    rows = []
    for algo in spec.algorithms:
        out = alg.TSBAJ[algo](channels, spec.config)
        if spec.experiment == "convergence":
            rows.extend(_rows_for_trace(algo, trial, seed, out))
        else:   # see_vs_t: the grid SEE curve keyed by t
            for pt in out.trace:
                rows.append(dict(grid_value=pt.t, algorithm=algo, trial=trial,
                                 seed=seed, metric="see", value=pt.see))
        rows.append(dict(grid_value=-1.0, algorithm=algo, trial=trial, seed=seed,
                         metric="trace_len", value=float(len(out.trace))))
        rows.append(dict(grid_value=-1.0, algorithm=algo, trial=trial, seed=seed,
                         metric="see_star", value=out.see_star))
    return rows


def _job_fairness(spec: ExperimentSpec, trial: int) -> list[dict]:
    seed = _trial_seed(spec.master_seed, trial)
    rows = []
    base = _fairness_config(spec.config, 0.5)
    channels = draw_channels(base, seed)      # distances fixed, draw once
    for phi1 in spec.grid:
        cfg = _fairness_config(spec.config, float(phi1))
        out = alg.sdp_tsbaj(channels, cfg)
        rows.append(dict(grid_value=float(phi1), algorithm="sdp", trial=trial,
                         seed=seed, metric="see", value=out.see_star))
        rows.append(dict(grid_value=float(phi1), algorithm="sdp", trial=trial,
                         seed=seed, metric="outage", value=float(out.outage)))
        rows.append(dict(grid_value=float(phi1), algorithm="sdp", trial=trial,
                         seed=seed, metric="jain", value=jain_index(cfg.psr_ratios)))
    return rows


def _job_outage(spec: ExperimentSpec, trial: int) -> list[dict]:
    seed = _trial_seed(spec.master_seed, trial)
    channels = draw_channels(spec.config, seed)
    # outage = the smallest radiated power over the rate axis exceeds the
    # budget; the full design's power is nondecreasing in the rate (so t = 0
    # suffices), the zero-forcing family needs the ladder and shares one curve
    env = {
        "sdp": alg.budget_envelope(channels, spec.config,
                                   inner=alg.INNER_SOLVERS["sdp"], monotone=True),
        "zfbf": alg.budget_envelope(channels, spec.config,
                                    inner=alg.INNER_SOLVERS["zfbf"], monotone=False),
    }
    env["mrt-zfbf"] = env["zfbf"]
    rows = []
    for p_dbm in spec.grid:
        pmax = dbm_to_w(float(p_dbm))
        for algo in spec.algorithms:
            rows.append(dict(grid_value=float(p_dbm), algorithm=algo, trial=trial,
                             seed=seed, metric="outage",
                             value=float(env[algo] > pmax)))
    for algo in ("sdp", "zfbf"):
        rows.append(dict(grid_value=-1.0, algorithm=algo, trial=trial, seed=seed,
                         metric="f_envelope", value=env[algo]))
    return rows


def _job_sweep(spec: ExperimentSpec, trial: int) -> list[dict]:
    """Shared runner for the aux-rate and harvest sweeps."""
    seed = _trial_seed(spec.master_seed, trial)
    channels = draw_channels(spec.config, seed)
    rows = []
    variants = [a for a in TSBAJ_ALGOS
                if a in spec.algorithms or f"srm-{a}" in spec.algorithms]
    for gv in spec.grid:
        if spec.experiment == "aux_rate":
            cfg = spec.config.with_(r_aux_nats_s=float(gv))
        else:
            cfg = spec.config.with_(p_req_w=dbm_to_w(float(gv)))
        for variant in variants:
            two_stage, baseline = alg.paired_solve(channels, cfg, variant)
            for name, out in ((variant, two_stage), (f"srm-{variant}", baseline)):
                if name not in spec.algorithms:
                    continue
                rows.append(dict(grid_value=float(gv), algorithm=name, trial=trial,
                                 seed=seed, metric="see", value=out.see_star))
                rows.append(dict(grid_value=float(gv), algorithm=name, trial=trial,
                                 seed=seed, metric="outage", value=float(out.outage)))
    return rows


_JOBS = {
    "convergence": _job_convergence,
    "see_vs_t": _job_convergence,
    "fairness": _job_fairness,
    "outage": _job_outage,
    "aux_rate": _job_sweep,
    "harvest": _job_sweep,
}


def _run_job(args):
    spec, trial = args
    return trial, _JOBS[spec.experiment](spec, trial)


# ---------------------------------------------------------------------------
# aggregation


def _aggregate(spec: ExperimentSpec, rows: list[dict]) -> list[dict]:
    keyed: dict[tuple, list[float]] = {}
    for r in rows:
        keyed.setdefault((r["grid_value"], r["algorithm"], r["metric"]), []).append(
            r["value"])
    out = []
    grid_algo = sorted({(g, a) for g, a, _ in keyed})
    for g, a in grid_algo:
        see = keyed.get((g, a, "see"))
        outage = keyed.get((g, a, "outage"))
        live = None
        if see is not None:
            if outage is not None:
                live = [v for v, o in zip(see, outage) if not o]
            else:
                live = list(see)
        stats = []
        if outage is not None:
            freq = float(np.mean(outage))
            stats.append(("outage_frequency", freq))
            stats.append(("outage_count", float(np.sum(outage))))
        if live:
            mean = float(np.mean(live))
            sem = float(np.std(live, ddof=1) / np.sqrt(len(live))) if len(live) > 1 else 0.0
            stats.append(("see_mean", mean))
            stats.append(("see_stderr", sem))
            stats.append(("n_live", float(len(live))))
        for metric in ("jain", "trace_len", "asee", "f_envelope"):
            vals = keyed.get((g, a, metric))
            if vals is not None:
                stats.append((f"{metric}_mean", float(np.mean(vals))))
        for name, value in stats:
            out.append(dict(grid_value=g, algorithm=a, statistic=name, value=value))

    # relative SEE gaps against the full design, from the aggregated means
    by = {(r["grid_value"], r["algorithm"], r["statistic"]): r["value"] for r in out}
    for g, a in grid_algo:
        if a == "sdp":
            continue
        ref = by.get((g, "sdp", "see_mean"))
        val = by.get((g, a, "see_mean"))
        if ref and val is not None and ref > 0:
            out.append(dict(grid_value=g, algorithm=a, statistic="relative_gap",
                            value=(ref - val) / ref))
    return out


def run(spec: ExperimentSpec) -> SweepResult:
    """Execute every trial of the experiment and aggregate deterministically."""
    jobs = [(spec, t) for t in range(spec.trials)]
    results: dict[int, list[dict]] = {}
    if spec.workers > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for trial, rows in pool.map(_run_job, jobs):
                results[trial] = rows
    else:
        for job in jobs:
            trial, rows = _run_job(job)
            results[trial] = rows
    ordered: list[dict] = []
    for t in range(spec.trials):
        ordered.extend(results[t])
    aggregates = _aggregate(spec, ordered)
    for row in aggregates:
        if row["statistic"] == "outage_frequency":
            assert 0.0 <= row["value"] <= 1.0
        if row["statistic"] == "see_stderr":
            assert np.isfinite(row["value"])
    return SweepResult(spec=spec, trial_rows=tuple(ordered),
                       aggregate_rows=tuple(aggregates))


# convenience wrappers matching the experiment names


def run_convergence(spec: ExperimentSpec) -> SweepResult:
    return run(spec)


def run_fairness(spec: ExperimentSpec) -> SweepResult:
    return run(spec)


def run_outage(spec: ExperimentSpec) -> SweepResult:
    return run(spec)


def run_aux_rate(spec: ExperimentSpec) -> SweepResult:
    return run(spec)


def run_harvest(spec: ExperimentSpec) -> SweepResult:
    return run(spec)


# ---------------------------------------------------------------------------
# CSV + config files


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17e}"
    return str(v)


def emit_csv(result: SweepResult, out_dir) -> tuple[Path, Path]:
    """Write `<experiment>_trials.csv` and `<experiment>_aggregate.csv`.

    Deterministic byte-for-byte for a fixed (spec, master_seed): fixed row
    order, fixed float formatting, schema version on the first line.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = result.spec.experiment
    trials_path = out / f"{name}_trials.csv"
    agg_path = out / f"{name}_aggregate.csv"
    with open(trials_path, "w", newline="\n") as fp:
        fp.write(f"# {CSV_SCHEMA}\n")
        fp.write("experiment,grid_value,algorithm,trial,seed,metric,value\n")
        for r in result.trial_rows:
            fp.write(",".join([name, _fmt(r["grid_value"]), r["algorithm"],
                               str(r["trial"]), f"\"{r['seed']}\"", r["metric"],
                               _fmt(r["value"])]) + "\n")
    with open(agg_path, "w", newline="\n") as fp:
        fp.write(f"# {CSV_SCHEMA}\n")
        fp.write("experiment,grid_value,algorithm,statistic,value\n")
        for r in result.aggregate_rows:
            fp.write(",".join([name, _fmt(r["grid_value"]), r["algorithm"],
                               r["statistic"], _fmt(r["value"])]) + "\n")
    return trials_path, agg_path


_DBM_ALIASES = {
    "p_max_dbm": "p_max_w",
    "p_req_dbm": "p_req_w",
    "noise_lue_dbm": "noise_lue_w",
    "noise_eve_dbm": "noise_eve_w",
    "noise_ehn_dbm": "noise_ehn_w",
}
_TUPLE_FIELDS = {"psr_ratios", "lue_dist_m", "eve_dist_m", "ehn_dist_m"}


def _config_from_mapping(data: dict) -> SystemConfig:
    fields = {f.name for f in dataclasses.fields(SystemConfig)}
    kwargs = {}
    for key, value in data.items():
        if key in _DBM_ALIASES:
            kwargs[_DBM_ALIASES[key]] = dbm_to_w(float(value))
        elif key == "noise_dbm":
            w = dbm_to_w(float(value))
            kwargs.update(noise_lue_w=w, noise_eve_w=w, noise_ehn_w=w)
        elif key in fields:
            kwargs[key] = tuple(value) if key in _TUPLE_FIELDS else value
        else:
            raise ConfigParseError(f"unknown config key {key!r}")
    try:
        return SystemConfig(**kwargs)
    except (InvalidConfigError, TypeError) as exc:
        raise ConfigParseError(f"invalid configuration: {exc}") from exc


def load_config(path):
    """Load a YAML file into a SystemConfig, or an ExperimentSpec when the
    file carries an `experiment:` block.  Unknown keys and malformed YAML
    raise ConfigParseError with line information where available."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigParseError(f"malformed config file{where}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigParseError("config file must contain a mapping at top level")
    if "experiment" in data:
        exp = data.pop("experiment")
        if isinstance(exp, str):
            exp = {"id": exp}
        cfg_data = data.pop("config", data if data else {})
        cfg = _config_from_mapping(cfg_data or {})
        kwargs = {}
        for key in ("trials", "master_seed", "workers"):
            if key in exp:
                kwargs[key] = int(exp[key])
        if "algorithms" in exp:
            kwargs["algorithms"] = tuple(exp["algorithms"])
        spec = default_spec(exp.get("id"), cfg, **kwargs)
        if "grid" in exp:
            spec = dataclasses.replace(spec, grid=tuple(float(g) for g in exp["grid"]))
        return spec
    return _config_from_mapping(data)


def save_config(obj, path) -> None:
    """Inverse of load_config; load(save(x)) == x and bytes are stable."""
    if isinstance(obj, ExperimentSpec):
        data = {
            "experiment": {
                "id": obj.experiment,
                "trials": obj.trials,
                "master_seed": obj.master_seed,
                "workers": obj.workers,
                "algorithms": list(obj.algorithms),
                "grid": [float(g) for g in obj.grid],
            },
            "config": _config_to_mapping(obj.config),
        }
    else:
        data = _config_to_mapping(obj)
    Path(path).write_text(yaml.safe_dump(data, sort_keys=True))


def _config_to_mapping(cfg: SystemConfig) -> dict:
    out = {}
    for f in dataclasses.fields(SystemConfig):
        v = getattr(cfg, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out
