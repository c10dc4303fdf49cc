"""Config-driven Monte Carlo benchmarking of the ranking algorithms.

An experiment is described by a JSON-serializable :class:`ExperimentConfig`:
an instance (builtin name or instance file), a list of algorithms, a cluster
spec, tolerance parameters, a trial count, a checkpoint grid of sample
budgets, and a master seed.  :func:`run_experiment` runs every trial of every
algorithm on common random numbers (trial ``i`` of each algorithm sees the
same reward tape), evaluates the anytime ranking at each checkpoint, and
reduces the per-trial metrics to means and standard errors in trial order so
the output is identical no matter how many worker processes computed it.
:func:`emit_report` writes the result table as CSV plus a JSON manifest that
echoes the config, the instance, and a sample-complexity report.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import math
import platform
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__, complexity, fastsim
from .baselines import ranking_from_values
from .bernoulli import ExplorationSchedule
from .engine import ClusterSpec
from .environments import (
    BernoulliInstance,
    BTLInstance,
    Instance,
    PreferenceMatrix,
    borda_scores,
    instance_to_dict,
    load_instance,
)
from .metrics import (
    EvalContext,
    cluster_mistake,
    inversion_decomposition,
    kendall_tau_fraction,
    pac_violation,
)

ALGORITHMS = ("lucb", "ar", "uniform")

_BTL_UNIFORM = re.compile(r"^btl-uniform\(\s*(\d+)\s*,\s*([0-9eE+.-]+)\s*\)$")


def builtin_instance(name: str) -> Instance:
    """Look up a named builtin instance.

    ``"B"`` is the 15-arm Bernoulli instance with means 0.5, 0.45, 0.425,
    ..., 0.125 (arm a >= 2 has mean 1/2 - a/40).  ``"btl-uniform(K, span)"``
    is a K-item Bradley-Terry instance whose scores are equally spaced over
    [0, span].
    """
    if name == "B":
        means = (0.5,) + tuple(0.5 - a / 40 for a in range(2, 16))
        return BernoulliInstance(means=means)
    m = _BTL_UNIFORM.match(name)
    if m:
        k = int(m.group(1))
        span = float(m.group(2))
        if k < 2:
            raise ValueError(f"btl-uniform needs at least 2 items, got {k}")
        if not span > 0.0:
            raise ValueError(f"btl-uniform span must be positive, got {span}")
        scores = tuple(span * i / (k - 1) for i in range(k))
        return BTLInstance(scores=scores)
    raise ValueError(f"unknown builtin instance: {name!r}")


def resolve_instance(ref: str) -> Instance:
    """Resolve an instance reference: builtin name first, then file path."""
    try:
        return builtin_instance(ref)
    except ValueError:
        pass
    if Path(ref).is_file():
        return load_instance(ref)
    raise ValueError(
        f"unknown instance {ref!r}: not a builtin name and not an instance file"
    )


def kernel_means(instance: Instance) -> tuple[float, ...]:
    """The per-arm Bernoulli success probabilities a simulation needs.

    A Borda pull of item i is marginally a Bernoulli draw with success
    probability equal to i's Borda score, so pairwise instances reduce to
    their score vector for simulation purposes.
    """
    if isinstance(instance, BernoulliInstance):
        return instance.means
    if isinstance(instance, BTLInstance):
        return borda_scores(instance.preference_matrix())
    if isinstance(instance, PreferenceMatrix):
        return borda_scores(instance)
    raise TypeError(f"unsupported instance type: {type(instance).__name__}")


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm entry in a config; None fields inherit config values."""

    name: str
    label: Optional[str] = None
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    budget_cap: Optional[int] = None

    def __post_init__(self) -> None:
        if self.name not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.name!r}; expected one of {ALGORITHMS}"
            )

    @property
    def effective_label(self) -> str:
        return self.label if self.label is not None else self.name


@dataclass(frozen=True)
class ExperimentConfig:
    instance: str
    algorithms: tuple[AlgorithmSpec, ...]
    boundaries: tuple[int, ...]
    epsilon: float = 0.0
    delta: float = 0.1
    trials: int = 100
    checkpoints: tuple[int, ...] = ()
    master_seed: int = 0
    budget_cap: Optional[int] = None
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if not self.algorithms:
            raise ValueError("config needs at least one algorithm")
        labels = [a.effective_label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ValueError(f"algorithm labels must be unique: {labels}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        cps = self.checkpoints
        if any(c < 1 for c in cps):
            raise ValueError(f"checkpoints must be positive: {cps}")
        if any(b >= a for a, b in zip(cps[1:], cps)):
            raise ValueError(f"checkpoints must be strictly increasing: {cps}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


def _algorithm_from_entry(entry: Union[str, dict]) -> AlgorithmSpec:
    if isinstance(entry, str):
        return AlgorithmSpec(name=entry)
    if isinstance(entry, dict):
        known = {f.name for f in dataclasses.fields(AlgorithmSpec)}
        extra = set(entry) - known
        if extra:
            raise ValueError(f"unknown algorithm fields: {sorted(extra)}")
        return AlgorithmSpec(**entry)
    raise ValueError(f"algorithm entry must be a name or a mapping: {entry!r}")


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "kind": "experiment_config",
        "instance": config.instance,
        "algorithms": [
            {
                k: v
                for k, v in dataclasses.asdict(a).items()
                if v is not None or k == "name"
            }
            for a in config.algorithms
        ],
        "boundaries": list(config.boundaries),
        "epsilon": config.epsilon,
        "delta": config.delta,
        "trials": config.trials,
        "checkpoints": list(config.checkpoints),
        "master_seed": config.master_seed,
        "budget_cap": config.budget_cap,
        "output_dir": config.output_dir,
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    if data.get("kind", "experiment_config") != "experiment_config":
        raise ValueError(f"not an experiment config: kind={data.get('kind')!r}")
    try:
        algorithms = tuple(_algorithm_from_entry(e) for e in data["algorithms"])
        return ExperimentConfig(
            instance=data["instance"],
            algorithms=algorithms,
            boundaries=tuple(int(b) for b in data["boundaries"]),
            epsilon=float(data.get("epsilon", 0.0)),
            delta=float(data.get("delta", 0.1)),
            trials=int(data.get("trials", 100)),
            checkpoints=tuple(int(c) for c in data.get("checkpoints", ())),
            master_seed=int(data.get("master_seed", 0)),
            budget_cap=(
                None if data.get("budget_cap") is None else int(data["budget_cap"])
            ),
            output_dir=str(data.get("output_dir", "results")),
        )
    except KeyError as exc:
        raise ValueError(f"config is missing required field {exc.args[0]!r}") from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def save_config(config: ExperimentConfig, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class CheckpointRow:
    """Aggregated metrics for one algorithm at one sample budget."""

    algorithm: str
    budget: int
    trials: int
    mistake_rate: float
    mistake_se: float
    pac_violation_rate: float
    pac_violation_se: float
    kendall_tau: float
    kendall_tau_se: float
    inter_inversions: float
    inter_inversions_se: float
    intra_inversions: float
    intra_inversions_se: float


@dataclass(frozen=True)
class TerminationSummary:
    """Stopping behaviour of one algorithm across trials.

    ``tau_*`` statistics cover only the trials that stopped on their own;
    the terminal metrics are evaluated at each trial's final state whether
    it stopped naturally or hit a budget cap.
    """

    algorithm: str
    trials: int
    natural_stops: int
    tau_mean: Optional[float]
    tau_se: Optional[float]
    tau_min: Optional[int]
    tau_max: Optional[int]
    terminal_mistake_rate: float
    terminal_pac_violation_rate: float


@dataclass(frozen=True)
class TrialFailure:
    algorithm: str
    trial: int
    error: str


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    kernel_means: tuple[float, ...]
    rows: tuple[CheckpointRow, ...]
    terminations: tuple[TerminationSummary, ...]
    failures: tuple[TrialFailure, ...] = ()


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = float(np.mean(values))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


def _snapshot_metrics(
    s: np.ndarray, n: np.ndarray, spec: ClusterSpec, ctx: EvalContext
) -> tuple[float, float, float, float, float]:
    mean_hat = tuple(
        float(s[a] / n[a]) if n[a] else 0.0 for a in range(spec.num_arms)
    )
    ranking = ranking_from_values(mean_hat, spec)
    inter, intra = inversion_decomposition(ranking.sigma, ctx)
    return (
        float(cluster_mistake(ranking, ctx)),
        float(pac_violation(ranking, ctx)),
        kendall_tau_fraction(ranking.sigma, ctx.true_order),
        float(inter),
        float(intra),
    )


def _trial_task(args: tuple) -> tuple[int, fastsim.SimResult]:
    (name, means, spec, schedule, seed, trial, eps, cps, cap) = args
    return trial, fastsim.run_trial(
        name,
        means,
        spec,
        schedule,
        seed,
        trial,
        epsilon=eps,
        checkpoints=cps,
        budget_cap=cap,
    )


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run every configured algorithm for every trial and aggregate.

    Trials use independent reward streams indexed by trial number, so the
    result is reproducible from the master seed and, because reduction
    happens in trial order, independent of ``jobs``.  A trial that raises is
    recorded as a failure and excluded from the aggregates; the run aborts
    only if every trial of some algorithm fails.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    instance = resolve_instance(config.instance)
    means = kernel_means(instance)
    spec = ClusterSpec(config.boundaries, len(means))
    cps = config.checkpoints

    rows: list[CheckpointRow] = []
    terminations: list[TerminationSummary] = []
    failures: list[TrialFailure] = []
    for alg in config.algorithms:
        label = alg.effective_label
        eps = config.epsilon if alg.epsilon is None else alg.epsilon
        delta = config.delta if alg.delta is None else alg.delta
        cap = config.budget_cap if alg.budget_cap is None else alg.budget_cap
        if alg.name == "uniform" and cap is None:
            if not cps:
                raise ValueError(
                    "uniform sampling never stops on its own: "
                    "set budget_cap or a checkpoint grid"
                )
            cap = cps[-1]
        schedule = ExplorationSchedule.default_for(
            delta=delta, num_arms=spec.num_arms, num_clusters=spec.num_clusters
        )
        ctx = EvalContext(means=means, spec=spec, epsilon=eps)

        tasks = [
            (alg.name, means, spec, schedule, config.master_seed, t, eps, cps, cap)
            for t in range(config.trials)
        ]
        sims: dict[int, fastsim.SimResult] = {}
        if jobs == 1 or config.trials == 1:
            for task in tasks:
                trial = task[5]
                try:
                    sims[trial] = _trial_task(task)[1]
                except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                    failures.append(TrialFailure(label, trial, repr(exc)))
        else:
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = {
                    pool.submit(_trial_task, task): task[5] for task in tasks
                }
                for fut in concurrent.futures.as_completed(futures):
                    trial = futures[fut]
                    try:
                        sims[trial] = fut.result()[1]
                    except Exception as exc:  # noqa: BLE001
                        failures.append(TrialFailure(label, trial, repr(exc)))
        if not sims:
            first = next(f for f in failures if f.algorithm == label)
            raise RuntimeError(
                f"all {config.trials} trials of {label!r} failed; "
                f"first error: {first.error}"
            )

        ok_trials = sorted(sims)
        per_cp = np.empty((len(ok_trials), len(cps), 5))
        terminal = np.empty((len(ok_trials), 2))
        taus: list[int] = []
        for row_i, trial in enumerate(ok_trials):
            res = sims[trial]
            for ci in range(len(cps)):
                per_cp[row_i, ci] = _snapshot_metrics(
                    res.checkpoint_s[ci], res.checkpoint_n[ci], spec, ctx
                )
            final = _snapshot_metrics(res.final_s, res.final_n, spec, ctx)
            terminal[row_i] = final[:2]
            if res.natural:
                taus.append(res.total_pulls)

        for ci, budget in enumerate(cps):
            stats = [_mean_se(per_cp[:, ci, m]) for m in range(5)]
            rows.append(
                CheckpointRow(
                    algorithm=label,
                    budget=budget,
                    trials=len(ok_trials),
                    mistake_rate=stats[0][0],
                    mistake_se=stats[0][1],
                    pac_violation_rate=stats[1][0],
                    pac_violation_se=stats[1][1],
                    kendall_tau=stats[2][0],
                    kendall_tau_se=stats[2][1],
                    inter_inversions=stats[3][0],
                    inter_inversions_se=stats[3][1],
                    intra_inversions=stats[4][0],
                    intra_inversions_se=stats[4][1],
                )
            )
        tau_mean, tau_se = _mean_se(taus) if taus else (None, None)
        terminations.append(
            TerminationSummary(
                algorithm=label,
                trials=len(ok_trials),
                natural_stops=len(taus),
                tau_mean=tau_mean,
                tau_se=tau_se,
                tau_min=min(taus) if taus else None,
                tau_max=max(taus) if taus else None,
                terminal_mistake_rate=float(np.mean(terminal[:, 0])),
                terminal_pac_violation_rate=float(np.mean(terminal[:, 1])),
            )
        )

    return ExperimentResult(
        config=config,
        kernel_means=means,
        rows=tuple(rows),
        terminations=tuple(terminations),
        failures=tuple(failures),
    )


def _module_version(name: str) -> Optional[str]:
    try:
        return __import__(name).__version__
    except ImportError:  # pragma: no cover - core dependency
        return None


CSV_HEADER = (
    "algorithm",
    "budget",
    "trials",
    "mistake_rate",
    "mistake_se",
    "pac_violation_rate",
    "pac_violation_se",
    "kendall_tau",
    "kendall_tau_se",
    "inter_inversions",
    "inter_inversions_se",
    "intra_inversions",
    "intra_inversions_se",
)


def complexity_report(
    config: ExperimentConfig,
) -> tuple[Optional[complexity.ComplexityReport], Optional[str]]:
    """The sample-complexity analysis for a config's instance, if defined."""
    means = kernel_means(resolve_instance(config.instance))
    spec = ClusterSpec(config.boundaries, len(means))
    try:
        report = complexity.analyze(
            means, spec, epsilon=config.epsilon, delta=config.delta
        )
        return report, None
    except (complexity.InfiniteComplexityError, ValueError) as exc:
        return None, str(exc)


def emit_report(
    result: ExperimentResult,
    report: Optional[complexity.ComplexityReport] = None,
    report_error: Optional[str] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> tuple[Path, Path]:
    """Write ``results.csv`` and ``manifest.json``; returns their paths.

    The CSV holds one row per algorithm x checkpoint under the fixed
    :data:`CSV_HEADER`.  The manifest echoes the config (it round-trips
    through :func:`config_from_dict`), the resolved instance, the complexity
    report, stopping summaries, failures, versions, and the seed scheme.
    """
    out = Path(output_dir if output_dir is not None else result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    manifest_path = out / "manifest.json"

    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in result.rows:
            writer.writerow([getattr(row, col) for col in CSV_HEADER])

    manifest = {
        "kind": "experiment_manifest",
        "config": config_to_dict(result.config),
        "instance": instance_to_dict(resolve_instance(result.config.instance)),
        "kernel_means": list(result.kernel_means),
        "complexity": None if report is None else report.to_dict(),
        "complexity_error": report_error,
        "terminations": [dataclasses.asdict(t) for t in result.terminations],
        "failures": [dataclasses.asdict(f) for f in result.failures],
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": _module_version("scipy"),
            "numba": _module_version("numba"),
            "coarserank": __version__,
        },
        "seed_scheme": (
            "one PCG64 stream per trial, spawned as "
            "SeedSequence(master_seed, spawn_key=(trial,))"
        ),
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, manifest_path
