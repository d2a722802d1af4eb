"""Multi-seed experiment runner, summary tables and plots.

Layout of an experiment directory::

    runs/<env>_<alg>_s<seed>.csv           per-iteration log (LOG_COLUMNS)
    runs/<env>_<alg>_s<seed>_episodes.csv  every finished episode
    runs/<env>_<alg>_s<seed>.json          full RunRecord
    summary.csv / summary.txt              final return per (env, algorithm)
    plots/<env>_returns.svg + .csv         mean curve with a one-std band
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import N_BINS, SMOOTHING, bin_curve, ewm_smooth
from .trainer import AgentConfig, RunRecord, paper_config, train

__all__ = [
    "ExperimentSpec",
    "ExperimentResult",
    "SUMMARY_COLUMNS",
    "EXIT_OK",
    "EXIT_RUN_FAILED",
    "EXIT_INVALID_CONFIG",
    "run_experiment",
    "summarize",
    "write_summary",
    "read_summary_csv",
    "summary_from_run_files",
    "load_records",
    "curve_stats",
    "emit_plots",
    "ablation_batch_size",
]

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("env", "algorithm", "mean_final_return", "std_final_return", "n_seeds")
EXIT_OK, EXIT_RUN_FAILED, EXIT_INVALID_CONFIG = 0, 1, 2


@dataclass
class ExperimentSpec:
    configs: list
    out_dir: str
    jobs: int = 1

    @classmethod
    def grid(cls, envs, algorithms, seeds, out_dir, jobs: int = 1, **overrides) -> "ExperimentSpec":
        """Cartesian product of envs x algorithms x seeds with the published settings."""
        configs = [paper_config(e, a, seed=s, **overrides)
                   for e, a, s in itertools.product(envs, algorithms, seeds)]
        return cls(configs, str(out_dir), jobs)

    @classmethod
    def from_dict(cls, d: dict, **cli) -> "ExperimentSpec":
        """Build from a JSON-style dict; keyword arguments override file values.

        Accepted keys: ``envs``, ``algorithms``, ``seeds``, ``out_dir``,
        ``jobs`` and ``overrides`` (AgentConfig fields applied to every run).
        """
        d = {**d, **{k: v for k, v in cli.items() if v is not None}}
        unknown = set(d) - {"envs", "algorithms", "seeds", "out_dir", "jobs", "overrides"}
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        return cls.grid(d.get("envs", ["cartpole"]), d.get("algorithms", ["smac"]),
                        d.get("seeds", [0]), d.get("out_dir", "results"), int(d.get("jobs", 1)),
                        **d.get("overrides", {}))

    def validate(self) -> "ExperimentSpec":
        if not self.configs:
            raise ValueError("invalid config: experiment has no runs")
        if self.jobs < 1:
            raise ValueError("invalid config: jobs must be >= 1")
        for cfg in self.configs:
            cfg.validate()
        seen = set()
        for cfg in self.configs:
            key = (cfg.env_id, cfg.optimizer_id, cfg.seed)
            if key in seen:
                raise ValueError(f"invalid config: duplicate seed {cfg.seed} for "
                                 f"{cfg.env_id}/{cfg.optimizer_id}")
            seen.add(key)
        return self


@dataclass
class ExperimentResult:
    records: list
    summary: list = field(default_factory=list)

    @property
    def failed(self) -> list:
        return [r for r in self.records if r.status != "ok"]

    @property
    def exit_code(self) -> int:
        return EXIT_RUN_FAILED if self.failed else EXIT_OK


def run_name(cfg: dict) -> str:
    return f"{cfg['env_id']}_{cfg['optimizer_id']}_s{cfg['seed']}"


def _run_one(args) -> RunRecord:
    cfg, runs_dir = args
    stem = runs_dir / run_name(cfg.to_dict())
    record = train(cfg, log_path=stem.with_suffix(".csv"))
    _write_episodes(stem.with_name(stem.name + "_episodes.csv"), record.episodes)
    payload = record.to_dict()
    payload["final_return"] = record.final_return() if record.episodes else None
    stem.with_suffix(".json").write_text(json.dumps(payload))
    return record


def _write_episodes(path: Path, episodes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("timestep", "return", "length"))
        for t, ret, length in episodes:
            w.writerow((t, repr(float(ret)), length))


def _read_episodes(path: Path) -> list:
    with open(path, newline="") as fh:
        return [(int(r["timestep"]), float(r["return"]), int(r["length"]))
                for r in csv.DictReader(fh)]


def run_experiment(spec: ExperimentSpec, plots: bool = True) -> ExperimentResult:
    """Run every config, persist per-run files, then write the summary.

    Runs are independent, so ``jobs > 1`` only changes wall time.  A failed
    run is kept in the result with ``status='failed'``.
    """
    spec.validate()
    out = Path(spec.out_dir)
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, runs_dir) for cfg in spec.configs]
    if spec.jobs == 1:
        records = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            records = list(pool.map(_run_one, jobs))
    for r in records:
        if r.status != "ok":
            log.error("run %s failed: %s", run_name(r.config), (r.error or "").splitlines()[0])
    summary = summarize(records)
    write_summary(summary, out)
    if plots:
        emit_plots(records, out / "plots")
    return ExperimentResult(records, summary)


# -- summary tables --------------------------------------------------------------


def _aggregate(groups: dict) -> list:
    rows = []
    for (env, alg), finals in sorted(groups.items()):
        arr = np.asarray(finals, dtype=np.float64)
        rows.append({
            "env": env,
            "algorithm": alg,
            "mean_final_return": float(arr.mean()),
            "std_final_return": float(arr.std()),
            "n_seeds": int(arr.size),
        })
    return rows


def summarize(records) -> list:
    """Mean and population std of the final smoothed return per (env, algorithm)."""
    groups: dict = {}
    for r in records:
        if r.status == "ok" and r.episodes:
            groups.setdefault((r.config["env_id"], r.config["optimizer_id"]), []).append(
                r.final_return())
    return _aggregate(groups)


def write_summary(rows, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                        for c in SUMMARY_COLUMNS])
    (out / "summary.txt").write_text(format_summary(rows))


def format_summary(rows) -> str:
    header = ("env", "algorithm", "final return", "seeds")
    body = [(r["env"], r["algorithm"],
             f"{r['mean_final_return']:.1f} ± {r['std_final_return']:.1f}", str(r["n_seeds"]))
            for r in rows]
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(x.ljust(w) for x, w in zip(line, widths)).rstrip()
             for line in [header, *body]]
    return "\n".join(lines) + "\n"


def read_summary_csv(path) -> list:
    with open(path, newline="") as fh:
        return [{
            "env": r["env"],
            "algorithm": r["algorithm"],
            "mean_final_return": float(r["mean_final_return"]),
            "std_final_return": float(r["std_final_return"]),
            "n_seeds": int(r["n_seeds"]),
        } for r in csv.DictReader(fh)]


def summary_from_run_files(out_dir) -> list:
    """Recompute the summary from the per-run episode CSVs alone."""
    runs = Path(out_dir) / "runs"
    groups: dict = {}
    for meta in sorted(runs.glob("*.json")):
        d = json.loads(meta.read_text())
        if d["status"] != "ok":
            continue
        cfg = d["config"]
        episodes = _read_episodes(runs / f"{run_name(cfg)}_episodes.csv")
        if not episodes:
            continue
        _, means = bin_curve([(t, r) for t, r, _ in episodes], N_BINS, cfg["total_timesteps"])
        groups.setdefault((cfg["env_id"], cfg["optimizer_id"]), []).append(
            float(ewm_smooth(means, SMOOTHING)[-1]))
    return _aggregate(groups)


def load_records(out_dir) -> list:
    runs = Path(out_dir) / "runs"
    return [RunRecord.from_dict(json.loads(p.read_text())) for p in sorted(runs.glob("*.json"))]


# -- plots -------------------------------------------------------------------------


def curve_stats(records, kind: str = "returns"):
    """Stack the per-seed binned+smoothed curves; returns ``(timesteps, mean, std)``."""
    curves = []
    for r in records:
        if kind == "returns":
            if not r.episodes:
                continue
            centers, means = r.binned_returns()
        else:
            centers, means = r.binned_logprobs()
        curves.append(ewm_smooth(means, SMOOTHING))
    if not curves:
        raise ValueError("no usable records")
    stack = np.vstack(curves)
    return centers, stack.mean(axis=0), stack.std(axis=0)


def emit_plots(records, out_dir, kinds=("returns", "logprobs")) -> list:
    """One SVG per (env, kind) with a mean line and a one-std band per algorithm.

    The plotted numbers always go to a companion CSV; the SVG is skipped
    with a warning if matplotlib fails.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_env: dict = {}
    for r in records:
        if r.status == "ok":
            by_env.setdefault(r.config["env_id"], {}).setdefault(
                r.config["optimizer_id"], []).append(r)
    written = []
    for env, algs in sorted(by_env.items()):
        for kind in kinds:
            series = {}
            for alg, recs in sorted(algs.items()):
                try:
                    series[alg] = (*curve_stats(recs, kind), len(recs))
                except ValueError:
                    continue
            if not series:
                continue
            stem = out / f"{env}_{kind}"
            with open(stem.with_suffix(".csv"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(("algorithm", "bin", "timestep", "mean", "std", "n_seeds"))
                for alg, (ts, mean, std, n) in series.items():
                    for i in range(len(ts)):
                        w.writerow((alg, i, repr(float(ts[i])), repr(float(mean[i])),
                                    repr(float(std[i])), n))
            written.append(stem.with_suffix(".csv"))
            try:
                _plot_svg(stem.with_suffix(".svg"), env, kind, series)
                written.append(stem.with_suffix(".svg"))
            except Exception as exc:  # noqa: BLE001 - plots are best-effort
                log.warning("could not draw %s: %s", stem, exc)
    return written


def _plot_svg(path: Path, env: str, kind: str, series: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for alg, (ts, mean, std, n) in series.items():
        (line,) = ax.plot(ts, mean, label=f"{alg} (n={n})")
        ax.fill_between(ts, mean - std, mean + std, color=line.get_color(), alpha=0.25)
    ax.set_xlabel("timesteps")
    ax.set_ylabel("mean return" if kind == "returns" else "mean action log-prob")
    ax.set_title(env)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# -- batch-size ablation -------------------------------------------------------------


# Step-size multiplier for B < T.  Those modes take T/B steps per rollout, and
# the full batch-mean step size makes the B=1 policy collapse on Cartpole.
SMALL_BATCH_ETA_SCALE = 0.1


def ablation_batch_size(env_id: str = "cartpole", sizes=(1, 1000), seeds=(0,),
                        total_timesteps: int | None = None, out_dir=None,
                        eta_by_size: dict | None = None, **overrides) -> dict:
    """SMAC with ``B`` samples per Sherman-Morrison step, for each ``B`` in ``sizes``.

    ``B=1`` replays the stored rollout one transition at a time; ``B=T`` is
    the batch-mean update.  Sizes below ``T`` use ``SMALL_BATCH_ETA_SCALE``
    times the preset step size unless ``eta_by_size`` says otherwise.
    Returns per-size records, total actor wall time, final returns, and the
    wall-time ratio of each size to the smallest one.
    """
    base = paper_config(env_id, "smac", **overrides)
    if total_timesteps is not None:
        base.total_timesteps = int(total_timesteps)
    report = {"env": env_id, "sizes": {}}
    for B in sizes:
        if B < 1 or base.T % B:
            raise ValueError(f"batch size {B} must divide T={base.T}")
        eta = (eta_by_size or {}).get(B)
        if eta is None:
            eta = base.eta if B == base.T else base.eta * SMALL_BATCH_ETA_SCALE
        recs = []
        for seed in seeds:
            cfg = AgentConfig.from_dict({
                **base.to_dict(), "seed": seed, "eta": eta,
                "batch_mode": "per_sample" if B == 1 else "batch_mean",
                "actor_batch": None if B in (1, base.T) else B,
            })
            rec = train(cfg)
            if rec.status != "ok":
                raise RuntimeError(f"ablation run B={B} seed={seed} failed:\n{rec.error}")
            recs.append(rec)
        finals = [r.final_return() if r.episodes else float("nan") for r in recs]
        report["sizes"][B] = {
            "eta": eta,
            "records": recs,
            "actor_time": float(sum(r.actor_time for r in recs)),
            "actor_updates": int(sum(lg.n_actor_updates for r in recs for lg in r.logs)),
            "final_returns": finals,
            "mean_final_return": float(np.mean(finals)),
        }
    ref = report["sizes"][min(sizes)]["actor_time"]
    for B, entry in report["sizes"].items():
        entry["time_ratio"] = entry["actor_time"] / ref if ref > 0 else float("nan")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.txt").write_text(format_ablation(report))
        with open(out / "ablation.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("batch_size", "eta", "actor_time_s", "time_ratio", "actor_updates",
                        "mean_final_return"))
            for B, e in sorted(report["sizes"].items()):
                w.writerow((B, repr(e["eta"]), repr(e["actor_time"]), repr(e["time_ratio"]), e["actor_updates"],
                            repr(e["mean_final_return"])))
    return report


def format_ablation(report: dict) -> str:
    lines = [f"batch-size ablation on {report['env']}",
             f"{'B':>6}  {'eta':>8}  {'actor time (s)':>14}  {'ratio':>6}  {'updates':>8}  "
             "final return"]
    for B, e in sorted(report["sizes"].items()):
        finals = ", ".join(f"{f:.1f}" for f in e["final_returns"])
        lines.append(f"{B:>6}  {e['eta']:>8.1e}  {e['actor_time']:>14.2f}  {e['time_ratio']:>6.3f}  "
                     f"{e['actor_updates']:>8}  {e['mean_final_return']:.1f} [{finals}]")
    return "\n".join(lines) + "\n"

