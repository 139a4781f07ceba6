"""Experiment orchestration: config files, workload generation, batch runs, reports.

An experiment is a grid of *cells* (policy x connections x imbalance rate x
funding range). Every cell runs ``files x replications`` simulations and
is aggregated into one JSON file. Seeds:

* workload file ``i``:        ``derive_seed(seed, WORKLOAD, i)``
* binding file ``i``:         ``derive_seed(seed, BINDING, i)``
* topology (fixed):           ``derive_seed(seed, TOPOLOGY)``
* run ``(i, r)``:             ``derive_seed(seed, RUN, i, r)``; funding, amounts,
                              fixed random weights and (when the topology is
                              re-drawn) the graph all derive from it

so every cell sees the same random numbers for the same ``(i, r)``.
"""

from __future__ import annotations

import configparser
import csv
import io
import itertools
import json
import logging
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import rng as _rng
from .engine import run
from .errors import ConfigError, InvalidParams
from .metrics import count_below, fraction_within, report
from .network import Network, fund_uniform, new_random_regular
from .routing import make_policy
from .workload import EndpointBinding, Workload, assign_connections, gen_balanced, gen_skewed

log = logging.getLogger(__name__)

AGGREGATE_FORMAT = "pcn-aggregate v1"
PRESETS = ("fig6-single-connection", "fig6c-imbalance", "fig7-multi-connection", "fig7c-capacity")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    nodes: int = 100
    degree: int = 3
    funding: list[tuple[int, int]] = field(default_factory=lambda: [(50, 150)])
    mc: int | None = None
    fixed_topology: bool = True
    policies: list[str] = field(default_factory=lambda: ["common"])
    weight_lo: int = 90
    weight_hi: int = 110
    kind: str = "balanced"
    rates: list[float] = field(default_factory=lambda: [0.0])
    payments: int = 5000
    amount_lo: int = 5
    amount_hi: int = 15
    connections: list[int] = field(default_factory=lambda: [1])
    files: int = 10
    seed: int = 1
    replications: int = 100
    sample_every: int = 100
    window: int = 100
    amounts: list[int] = field(default_factory=lambda: [10, 20, 30, 40, 50])
    out: str = "out"
    jobs: int | None = None
    write_run_logs: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.replications < 1:
            raise InvalidParams("replications must be at least 1")
        if self.files < 1:
            raise InvalidParams("files must be at least 1")
        if self.nodes < 2 or not 1 <= self.degree < self.nodes or (self.nodes * self.degree) % 2:
            raise InvalidParams(f"no {self.degree}-regular graph on {self.nodes} nodes")
        if self.kind not in ("balanced", "skewed"):
            raise InvalidParams(f"workload kind must be 'balanced' or 'skewed', got {self.kind!r}")
        if self.kind == "balanced":
            if self.payments % self.nodes:
                raise InvalidParams("balanced workloads need payments divisible by nodes")
        else:
            for r in self.rates:
                if not 0 < r <= 0.5:
                    raise InvalidParams(f"imbalance rate {r} outside (0, 0.5]")
        for p in self.policies:
            make_policy(p, mc=1)
        for k in self.connections:
            if not 1 <= k <= self.nodes:
                raise InvalidParams(f"connections {k} outside [1, {self.nodes}]")
        for lo, hi in self.funding:
            if lo < 0 or hi < lo:
                raise InvalidParams(f"bad funding range {lo}-{hi}")
            if self.mc is not None and self.mc < 2 * hi:
                raise InvalidParams(f"MC={self.mc} is below the largest reachable balance {2 * hi}")
        if self.amount_lo < 0 or self.amount_hi < self.amount_lo:
            raise InvalidParams("bad amount range")
        if self.sample_every < 0 or self.window < 1:
            raise InvalidParams("sample_every must be >= 0 and window >= 1")
        return self

    @property
    def workload_rates(self) -> list[float]:
        return self.rates if self.kind == "skewed" else [0.0]

    def cells(self) -> list[dict[str, Any]]:
        out = []
        for policy, k, rate, (lo, hi) in itertools.product(
            self.policies, self.connections, self.workload_rates, self.funding
        ):
            out.append({"policy": policy, "connections": k, "rate": rate,
                        "funding_lo": lo, "funding_hi": hi,
                        "mc": self.mc if self.mc is not None else 2 * hi})
        return out

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d["funding"] = [list(f) for f in self.funding]
        return d


# -- config files --

_KEYS = {
    "experiment": {"name": str, "seed": int, "replications": int, "files": int, "out": str,
                   "jobs": int, "write_run_logs": bool},
    "network": {"nodes": int, "degree": int, "funding": "funding", "mc": int,
                "fixed_topology": bool},
    "routing": {"policies": "strs", "weight_lo": int, "weight_hi": int},
    "workload": {"kind": str, "rates": "floats", "payments": int, "amount_lo": int,
                 "amount_hi": int, "connections": "ints"},
    "metrics": {"sample_every": int, "window": int, "amounts": "ints"},
}


def _parse_value(kind, raw: str):
    raw = raw.strip()
    if kind is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind in (int, str):
        if kind is int and raw.lower() in ("", "none", "auto"):
            return None
        return kind(raw)
    items = [x.strip() for x in raw.split(",") if x.strip()]
    if kind == "ints":
        return [int(x) for x in items]
    if kind == "floats":
        return [float(x) for x in items]
    if kind == "strs":
        return items
    if kind == "funding":
        ranges = []
        for item in items:
            lo, _, hi = item.partition("-")
            ranges.append((int(lo), int(hi or lo)))
        return ranges
    raise AssertionError(kind)


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    values: dict[str, Any] = {}
    for section in parser.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                values[key] = _parse_value(_KEYS[section][key], raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    return ExperimentConfig(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(path.read_text())


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("pcnsim.presets").joinpath(f"{name}.ini").read_text()


def load_preset(name: str) -> ExperimentConfig:
    return parse_config(preset_text(name))


def override(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    """Return a copy with the non-None keyword values replaced."""
    data = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    data.update({k: v for k, v in changes.items() if v is not None})
    return ExperimentConfig(**data)


# -- output helpers --

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    with os.fdopen(fd, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def _rate_tag(rate: float) -> str:
    return f"{rate:.2f}".replace(".", "p")


def workload_path(out: Path, kind: str, rate: float, index: int) -> Path:
    stem = "balanced" if kind == "balanced" else f"skewed_{_rate_tag(rate)}"
    return out / "workloads" / f"wl_{stem}_{index:03d}.txt"


def binding_path(out: Path, k: int, index: int) -> Path:
    return out / "workloads" / f"bind_k{k}_{index:03d}.txt"


def cell_label(cell: dict[str, Any]) -> str:
    return (f"{cell['policy']}_C{cell['connections']}_r{_rate_tag(cell['rate'])}"
            f"_f{cell['funding_lo']}-{cell['funding_hi']}")


# -- generate --

def build_network(cfg: ExperimentConfig, run_seed: int | None = None) -> Network:
    topo_seed = cfg.seed if cfg.fixed_topology or run_seed is None else run_seed
    return new_random_regular(cfg.nodes, cfg.degree, _rng.derive_seed(topo_seed, _rng.TOPOLOGY))


def generate_workload(cfg: ExperimentConfig, rate: float, index: int) -> Workload:
    seed = _rng.derive_seed(cfg.seed, _rng.WORKLOAD, index)
    if cfg.kind == "balanced":
        return gen_balanced(cfg.nodes, cfg.payments // cfg.nodes, cfg.amount_lo, cfg.amount_hi, seed)
    return gen_skewed(cfg.nodes, cfg.payments, rate, cfg.amount_lo, cfg.amount_hi, seed)


def generate_binding(cfg: ExperimentConfig, network: Network, k: int, index: int) -> EndpointBinding:
    return assign_connections(cfg.nodes, k, network, _rng.derive_seed(cfg.seed, _rng.BINDING, index))


def cmd_generate(cfg: ExperimentConfig) -> list[Path]:
    """Write workload and binding files for every rate and connection count."""
    cfg.validate()
    out = Path(cfg.out)
    net = build_network(cfg)
    written = []
    for i in range(cfg.files):
        for rate in cfg.workload_rates:
            path = workload_path(out, cfg.kind, rate, i)
            _atomic_write(path, generate_workload(cfg, rate, i).to_text())
            written.append(path)
        for k in cfg.connections:
            path = binding_path(out, k, i)
            _atomic_write(path, generate_binding(cfg, net, k, i).to_text())
            written.append(path)
    manifest = {"config": cfg.echo(), "files": [str(p.relative_to(out)) for p in written]}
    _atomic_write(out / "workloads" / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
    log.info("wrote %d workload/binding files to %s", len(written), out / "workloads")
    return written


# -- run --

def _run_one(task: tuple) -> dict[str, Any]:
    cfg, cell, index, rep, wl_text, bind_text = task
    run_seed = _rng.derive_seed(cfg.seed, _rng.RUN, index, rep)
    net = build_network(cfg, run_seed)
    fund_uniform(net, cell["funding_lo"], cell["funding_hi"], run_seed)
    workload = Workload.from_text(wl_text).with_amounts(run_seed, cfg.amount_lo, cfg.amount_hi)
    binding = EndpointBinding.from_text(bind_text)
    policy = make_policy(cell["policy"], mc=cell["mc"], seed=run_seed,
                         lo=cfg.weight_lo, hi=cfg.weight_hi)
    echo = {"experiment": cfg.echo(), "cell": cell, "workload_index": index,
            "replication": rep, "run_seed": run_seed}
    runlog = run(net, policy, workload, binding, cfg.sample_every, config=echo)
    rep_ = report(net, runlog, cfg.amounts, cfg.window, 10)
    lo, hi = cell["funding_lo"], cell["funding_hi"]
    summary = {
        "success_ratio": rep_.success_ratio,
        "final_imbalance": rep_.final_imbalance,
        "mean_hops": rep_.mean_hops,
        "fraction_in_initial_range": fraction_within(net, lo, hi),
        "fraction_below_initial": count_below(net, lo) / net.directional_count,
        "count_below_20": count_below(net, 20),
        "imbalance_timeline": rep_.imbalance_timeline,
        "moving_avg_hops": [p for p in rep_.moving_avg_hops
                            if cfg.sample_every and p[0] % cfg.sample_every == 0],
        "histogram": sorted(rep_.histogram.counts.items()),
        "apl_by_amount": rep_.apl_by_amount,
        "diameter_by_amount": rep_.diameter_by_amount,
        "reachability_by_amount": rep_.reachability_by_amount,
    }
    return {
        "cell": cell, "index": index, "rep": rep, "run_seed": run_seed,
        "csv": runlog.to_csv() if cfg.write_run_logs else None,
        "sidecar": runlog.sidecar() | {"metrics": summary},
        "summary": summary,
    }


def _stat(values: Sequence[float | None]) -> dict[str, float | None]:
    arr = np.array([np.nan if v is None else v for v in values], dtype=float)
    if arr.size == 0 or np.isnan(arr).all():
        return {"mean": None, "std": None, "n": 0}
    return {"mean": float(np.nanmean(arr)), "std": float(np.nanstd(arr)),
            "n": int(np.isfinite(arr).sum())}


def _series_stat(series: Iterable[Sequence[tuple]]) -> list[list]:
    by_key: dict[Any, list] = {}
    for s in series:
        for key, value in s:
            by_key.setdefault(key, []).append(value)
    out = []
    for key in sorted(by_key):
        st = _stat(by_key[key])
        out.append([key, st["mean"], st["std"], st["n"]])
    return out


def aggregate(cfg: ExperimentConfig, cell: dict[str, Any], results: list[dict[str, Any]]) -> dict[str, Any]:
    """Means and standard deviations of every metric across the runs of one cell."""
    sums = [r["summary"] for r in results]
    runs = len(sums)
    # histograms: bins missing from a run count as zero
    bins = sorted({b for s in sums for b, _ in s["histogram"]})
    hist = []
    for b in bins:
        counts = [dict(s["histogram"]).get(b, 0) for s in sums]
        st = _stat(counts)
        hist.append([b, st["mean"], st["std"], runs])
    scalars = ("success_ratio", "final_imbalance", "mean_hops", "fraction_in_initial_range",
               "fraction_below_initial", "count_below_20")
    series = ("imbalance_timeline", "moving_avg_hops", "apl_by_amount", "diameter_by_amount",
              "reachability_by_amount")
    return {
        "format": AGGREGATE_FORMAT,
        "label": cell_label(cell),
        "config": cfg.echo(),
        "cell": cell,
        "runs": runs,
        "run_seeds": [[r["index"], r["rep"], r["run_seed"]] for r in results],
        "metrics": {
            **{k: _stat([s[k] for s in sums]) for k in scalars},
            **{k: _series_stat(s[k] for s in sums) for k in series},
            "histogram": hist,
        },
    }


def _input_texts(cfg: ExperimentConfig, out: Path | None) -> dict[tuple, str]:
    """Workload/binding texts keyed by ``("wl", rate, i)`` / ``("bind", k, i)``.

    Read from ``out/workloads`` when ``out`` is given, else generated in memory.
    """
    texts: dict[tuple, str] = {}
    if out is None:
        net = build_network(cfg)
        for i in range(cfg.files):
            for rate in cfg.workload_rates:
                texts[("wl", rate, i)] = generate_workload(cfg, rate, i).to_text()
            for k in cfg.connections:
                texts[("bind", k, i)] = generate_binding(cfg, net, k, i).to_text()
        return texts
    paths = {}
    for i in range(cfg.files):
        for rate in cfg.workload_rates:
            paths[("wl", rate, i)] = workload_path(out, cfg.kind, rate, i)
        for k in cfg.connections:
            paths[("bind", k, i)] = binding_path(out, k, i)
    missing = [str(p) for p in paths.values() if not p.is_file()]
    if missing:
        raise ConfigError(f"missing workload/binding files (run 'generate' first): {missing[:5]}")
    return {key: p.read_text() for key, p in paths.items()}


def simulate(cfg: ExperimentConfig, workload_dir: str | Path | None = None,
             on_result=None) -> dict[str, list[dict[str, Any]]]:
    """Run every (cell, file, replication) and return the per-run results by cell label.

    Workloads come from ``workload_dir`` (as written by :func:`cmd_generate`)
    or are generated in memory. ``on_result`` sees each result as it arrives.
    """
    cfg.validate()
    texts = _input_texts(cfg, Path(workload_dir) if workload_dir is not None else None)
    cells = cfg.cells()
    tasks = [
        (cfg, cell, i, r, texts[("wl", cell["rate"], i)], texts[("bind", cell["connections"], i)])
        for cell in cells for i in range(cfg.files) for r in range(cfg.replications)
    ]
    jobs = cfg.jobs or os.cpu_count() or 1
    log.info("%d cells, %d runs, %d worker(s)", len(cells), len(tasks), jobs)
    results: dict[str, list] = {cell_label(c): [] for c in cells}
    with (Pool(jobs) if jobs > 1 else _InlinePool()) as pool:
        for res in pool.imap(_run_one, tasks, chunksize=4):
            if on_result is not None:
                on_result(res)
            results[cell_label(res["cell"])].append(res)
    return results


def cmd_run(cfg: ExperimentConfig) -> list[Path]:
    """Run every cell of the experiment and write per-run logs plus one aggregate per cell.

    Workload and binding files must already exist (see :func:`cmd_generate`).
    Nothing is written unless every run completes.
    """
    cfg.validate()
    out = Path(cfg.out)
    _input_texts(cfg, out)  # fail on missing inputs before creating anything
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=out, prefix=".staging-"))

    def stage(res):
        if res["csv"] is None:
            return
        stem = f"{cell_label(res['cell'])}_w{res['index']:03d}_r{res['rep']:03d}"
        (staging / "runs").mkdir(exist_ok=True)
        (staging / "runs" / f"{stem}.csv").write_text(res["csv"])
        (staging / "runs" / f"{stem}.json").write_text(
            json.dumps(res["sidecar"], indent=1, sort_keys=True))
        res["csv"] = res["sidecar"] = None

    try:
        results = simulate(cfg, out, on_result=stage)
        written = []
        for cell in cfg.cells():
            agg = aggregate(cfg, cell, results[cell_label(cell)])
            name = f"aggregate_{cell_label(cell)}.json"
            (staging / name).write_text(json.dumps(agg, indent=1, sort_keys=True))
            written.append(out / name)
        # publish only after every run succeeded
        if (staging / "runs").exists():
            (out / "runs").mkdir(parents=True, exist_ok=True)
            for f in sorted((staging / "runs").iterdir()):
                os.replace(f, out / "runs" / f.name)
        for path in written:
            os.replace(staging / path.name, path)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return written


class _InlinePool:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def imap(self, fn, items, chunksize=1):
        return map(fn, items)


# -- report --

def load_aggregate(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"aggregate file {path} not found")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not JSON ({exc})") from exc
    if not isinstance(data, dict) or data.get("format") != AGGREGATE_FORMAT:
        raise ConfigError(f"{path}: not a '{AGGREGATE_FORMAT}' aggregate")
    for key in ("label", "cell", "metrics", "runs"):
        if key not in data:
            raise ConfigError(f"{path}: missing {key!r}")
    return data


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _side_by_side(aggs: list[dict], metric: str, key_name: str) -> str:
    labels = [a["label"] for a in aggs]
    table: dict[Any, dict[str, Any]] = {}
    for a in aggs:
        for key, mean, *_ in a["metrics"][metric]:
            table.setdefault(key, {})[a["label"]] = mean
    rows = [[key, *(table[key].get(lbl) for lbl in labels)] for key in sorted(table)]
    return _csv([key_name, *labels], rows)


def _grid(aggs: list[dict], row_of, metric: str, row_name: str) -> str:
    ks = sorted({a["cell"]["connections"] for a in aggs})
    table: dict[Any, dict[int, Any]] = {}
    for a in aggs:
        table.setdefault(row_of(a), {})[a["cell"]["connections"]] = a["metrics"][metric]["mean"]
    rows = [[r, *(table[r].get(k) for k in ks)] for r in sorted(table)]
    return _csv([row_name, *(f"C{k}" for k in ks)], rows)


def report_tables(aggs: list[dict]) -> dict[str, str]:
    """Comparison tables keyed by file name."""
    if not aggs:
        raise ConfigError("report needs at least one aggregate")
    scalar = ("success_ratio", "final_imbalance", "mean_hops", "fraction_in_initial_range",
              "fraction_below_initial", "count_below_20")
    summary_rows = []
    for a in aggs:
        c, m = a["cell"], a["metrics"]
        summary_rows.append([a["label"], c["policy"], c["connections"], c["rate"],
                             (c["funding_lo"] + c["funding_hi"]) / 2, a["runs"],
                             *(m[k]["mean"] for k in scalar)])
    tables = {
        "summary.csv": _csv(["label", "policy", "connections", "imbalance_rate", "funding_mean",
                             "runs", *scalar], summary_rows),
        "imbalance_timeline.csv": _side_by_side(aggs, "imbalance_timeline", "index"),
        "moving_avg_hops.csv": _side_by_side(aggs, "moving_avg_hops", "index"),
        "apl_by_amount.csv": _side_by_side(aggs, "apl_by_amount", "amount"),
        "diameter_by_amount.csv": _side_by_side(aggs, "diameter_by_amount", "amount"),
        "histogram.csv": _side_by_side(aggs, "histogram", "bin_lo"),
    }
    skewed = [a for a in aggs if a["cell"]["rate"] > 0]
    if skewed:
        by_rate = lambda a: a["cell"]["rate"]  # noqa: E731
        tables["success_by_rate.csv"] = _grid(skewed, by_rate, "success_ratio", "imbalance_rate")
        tables["hops_by_rate.csv"] = _grid(skewed, by_rate, "mean_hops", "imbalance_rate")
    by_mean = lambda a: (a["cell"]["funding_lo"] + a["cell"]["funding_hi"]) / 2  # noqa: E731
    if len({by_mean(a) for a in aggs}) > 1:
        tables["success_by_capacity.csv"] = _grid(aggs, by_mean, "success_ratio", "funding_mean")
    return tables


def cmd_report(paths: Sequence[str | Path], out: str | Path) -> list[Path]:
    aggs = [load_aggregate(p) for p in paths]
    labels = [a["label"] for a in aggs]
    if len(set(labels)) != len(labels):
        raise ConfigError("two aggregates share a label; report them separately")
    written = []
    for name, text in report_tables(aggs).items():
        path = Path(out) / name
        _atomic_write(path, text)
        written.append(path)
    return written


def expected_runs(cfg: ExperimentConfig) -> int:
    return len(cfg.cells()) * cfg.files * cfg.replications


def describe(cfg: ExperimentConfig) -> str:
    cells = cfg.cells()
    return (f"{cfg.name}: {len(cells)} cell(s) x {cfg.files} file(s) x "
            f"{cfg.replications} replication(s) = {expected_runs(cfg)} runs, "
            f"{cfg.nodes} nodes, degree {cfg.degree}, {cfg.payments} payments "
            f"({cfg.kind})")
