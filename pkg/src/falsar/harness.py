"""Multi-trial experiment runner, scaling sweeps, aggregation and CSV output.

A campaign is described by a JSON document::

    {
      "model": "car", "model_params": {},
      "specs": [{"id": "AT1", "formula": "alw_[0,30](gear == 3 -> speed > {rho})",
                 "params": {"rho": [20.6, 20.0]}}],
      "algorithms": ["hc", "mab-ucb"],
      "trials": 30, "budget": 300, "timeout": 600, "seed": 0,
      "scaling": {"channel": "speed", "k": [-2, 0, 1, 3]},
      "output": {"raw": "raw.csv", "summary": "summary.csv"}
    }

Parameterised specs expand to ``AT1_1, AT1_2, ...`` in list order (the
cartesian product when several parameters are given).  Trial ``i`` runs
with seed ``seed + i``; ``seed`` defaults to ``$FALSAR_SEED`` or 0.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import bandit
from .falsify import ALGORITHMS, TIMEOUT, falsify
from .stl import parse
from .systems import ScaledModel, load_model, scale_formula

RAW_COLUMNS = ("spec_id", "scale_k", "algo", "trial", "seed", "success",
               "robustness", "simulations", "seconds")
SUMMARY_COLUMNS = ("spec_id", "scale_k", "algo", "SR", "min_time", "max_time",
                   "avg_time", "delta_SR", "delta_time")
BASELINE = "hc"
SEED_ENV = "FALSAR_SEED"
DEFAULT_TIMEOUT = 600.0

# Published shape of the config file: key -> (type(s), required)
CONFIG_SCHEMA = {
    "model": (str, True),
    "model_params": (dict, False),
    "specs": (list, True),
    "algorithms": (list, False),
    "trials": (int, False),
    "budget": (int, True),
    "timeout": ((int, float), False),
    "seed": (int, False),
    "scaling": (dict, False),
    "optimizer": (str, False),
    "control_points": (int, False),
    "epsilon": ((int, float), False),
    "c": ((int, float), False),
    "output": (dict, False),
}


class ConfigError(ValueError):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class SpecInstance:
    id: str
    formula: str


@dataclass
class ExperimentConfig:
    model: str
    specs: list[SpecInstance]
    budget: int
    model_params: dict = field(default_factory=dict)
    algorithms: tuple[str, ...] = ALGORITHMS
    trials: int = 30
    timeout: float = DEFAULT_TIMEOUT
    seed: int = 0
    scale_channel: str | None = None
    scale_ks: tuple[int, ...] = (0,)
    optimizer: str = "cmaes"
    control_points: int | None = None
    epsilon: float = bandit.DEFAULT_EPSILON
    c: float = bandit.DEFAULT_UCB_C
    raw_path: str | None = None
    summary_path: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.budget < 1:
            raise ConfigError("budget must be at least 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")
        if not self.specs:
            raise ConfigError("no specs given")
        if any(k != 0 for k in self.scale_ks) and self.scale_channel is None:
            raise ConfigError("scaling needs a channel")

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path | None = None) -> "ExperimentConfig":
        _check_schema(data)
        specs = []
        for entry in data["specs"]:
            specs.extend(expand_spec(entry))
        scaling = data.get("scaling") or {}
        out = data.get("output") or {}

        def resolve(p):
            if p is None or base_dir is None or os.path.isabs(p):
                return p
            return str(Path(base_dir) / p)

        return cls(
            model=data["model"],
            specs=specs,
            budget=data["budget"],
            model_params=dict(data.get("model_params") or {}),
            algorithms=tuple(data.get("algorithms", ALGORITHMS)),
            trials=data.get("trials", 30),
            timeout=float(data.get("timeout", DEFAULT_TIMEOUT)),
            seed=data["seed"] if "seed" in data else default_seed(),
            scale_channel=scaling.get("channel"),
            scale_ks=tuple(int(k) for k in scaling.get("k", (0,))),
            optimizer=data.get("optimizer", "cmaes"),
            control_points=data.get("control_points"),
            epsilon=float(data.get("epsilon", bandit.DEFAULT_EPSILON)),
            c=float(data.get("c", bandit.DEFAULT_UCB_C)),
            raw_path=resolve(out.get("raw")),
            summary_path=resolve(out.get("summary")),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data, base_dir=path.parent)


def _check_schema(data):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - set(CONFIG_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for key, (types, required) in CONFIG_SCHEMA.items():
        if key not in data:
            if required:
                raise ConfigError(f"missing config key {key!r}")
            continue
        value = data[key]
        if value is None and not required:
            continue
        if isinstance(value, bool) or not isinstance(value, types):
            raise ConfigError(f"config key {key!r} has the wrong type")


_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def expand_spec(entry: dict) -> list[SpecInstance]:
    """Ground a spec template over its parameter lists."""
    if not isinstance(entry, dict) or "id" not in entry or "formula" not in entry:
        raise ConfigError("each spec needs an 'id' and a 'formula'")
    params = entry.get("params") or {}
    names = list(params)
    for name in names:
        if not isinstance(params[name], list) or not params[name]:
            raise ConfigError(f"spec {entry['id']}: parameter {name!r} needs a non-empty list")
    combos = list(itertools.product(*(params[n] for n in names)))
    out = []
    for i, values in enumerate(combos, start=1):
        binding = dict(zip(names, values))
        text = _PLACEHOLDER.sub(lambda m: _ground(m, binding, entry["id"]), entry["formula"])
        sid = f"{entry['id']}_{i}" if names else entry["id"]
        parse(text)  # fail early on bad templates
        out.append(SpecInstance(sid, text))
    return out


def _ground(m, binding, sid):
    if m.group(1) not in binding:
        raise ConfigError(f"spec {sid}: parameter {m.group(1)!r} has no values")
    return repr(binding[m.group(1)])


# ---------------------------------------------------------------- running
@dataclass(frozen=True)
class Task:
    spec_id: str
    formula: str
    scale_k: int
    algo: str
    trial: int
    seed: int


@dataclass
class TrialResult:
    spec_id: str
    scale_k: int
    algo: str
    trial: int
    seed: int
    success: bool
    robustness: float
    simulations: int
    seconds: float


def tasks(cfg: ExperimentConfig) -> list[Task]:
    """All runs of a campaign, in output order (spec, scale, algorithm, trial)."""
    return [
        Task(s.id, s.formula, k, algo, t, cfg.seed + t)
        for s in cfg.specs
        for k in cfg.scale_ks
        for algo in cfg.algorithms
        for t in range(cfg.trials)
    ]


def run_task(cfg: ExperimentConfig, task: Task) -> TrialResult:
    model = load_model(cfg.model, **cfg.model_params)
    phi = parse(task.formula)
    if task.scale_k != 0:
        model = ScaledModel(model, cfg.scale_channel, task.scale_k)
        phi = scale_formula(phi, cfg.scale_channel, task.scale_k)
    options = dict(optimizer=cfg.optimizer, control_points=cfg.control_points, timeout=cfg.timeout)
    if task.algo != "hc":
        options.update(epsilon=cfg.epsilon, c=cfg.c)
    res = falsify(model, phi, task.algo, cfg.budget, seed=task.seed, **options)
    seconds = cfg.timeout if res.outcome == TIMEOUT else res.seconds
    return TrialResult(task.spec_id, task.scale_k, task.algo, task.trial, task.seed,
                       res.falsified, res.robustness, res.simulations, seconds)


def _run_packed(args):
    return run_task(*args)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[TrialResult]:
    """Run every trial; results come back in task order whatever ``jobs`` is."""
    todo = tasks(cfg)
    if jobs <= 1:
        return [run_task(cfg, t) for t in todo]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_packed, [(cfg, t) for t in todo], chunksize=1))


# ------------------------------------------------------------ aggregation
def delta_pct(m: float, b: float) -> float | None:
    """Symmetric percentage difference of ``m`` against baseline ``b``; None if m + b == 0."""
    if m + b == 0:
        return None
    return (m - b) * 100 / (0.5 * (m + b))


@dataclass
class Summary:
    spec_id: str
    scale_k: int
    algo: str
    trials: int
    SR: int
    min_time: float
    max_time: float
    avg_time: float
    avg_simulations: float
    delta_SR: float | None = None
    delta_time: float | None = None


def aggregate(raw: list[TrialResult], baseline: str = BASELINE) -> list[Summary]:
    if not raw:
        raise ValueError("no results to aggregate")
    groups: dict[tuple, list[TrialResult]] = {}
    for r in raw:
        groups.setdefault((r.spec_id, r.scale_k, r.algo), []).append(r)
    out = []
    for (sid, k, algo), rs in groups.items():
        times = [r.seconds for r in rs]
        out.append(Summary(sid, k, algo, len(rs), sum(r.success for r in rs),
                           min(times), max(times), sum(times) / len(times),
                           sum(r.simulations for r in rs) / len(rs)))
    base = {(s.spec_id, s.scale_k): s for s in out if s.algo == baseline}
    for s in out:
        b = base.get((s.spec_id, s.scale_k))
        if b is None or s is b:
            continue
        s.delta_SR = delta_pct(s.SR, b.SR)
        s.delta_time = delta_pct(s.avg_time, b.avg_time)
    return out


# -------------------------------------------------------------------- csv
def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def format_csv(rows: list, columns=None) -> str:
    if not rows:
        raise ValueError("nothing to write")
    if columns is None:
        columns = RAW_COLUMNS if isinstance(rows[0], TrialResult) else SUMMARY_COLUMNS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in columns])
    return buf.getvalue()


def write_csv(rows: list, path: str | Path, columns=None) -> None:
    text = format_csv(rows, columns)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_raw_csv(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
