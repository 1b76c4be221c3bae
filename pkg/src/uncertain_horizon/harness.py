"""Experiment configuration, seeded multi-trial runs and CSV output."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .baseline import BaselineConfig, run_baseline
from .discount import DiscountCurve, effective_horizon, recommended_params
from .envs import build_env
from .estimator import run_estimating_learner
from .horizon import HorizonDistribution
from .planning import RegretTrace
from .runner import REALIZED
from .ucbvi import AS_DISPLAYED, run_learner

log = logging.getLogger(__name__)

TRACE_HEADER = ("trial", "episode", "H_k", "v_star", "v_pi", "regret", "cum_regret", "block")
SUMMARY_HEADER = ("episode", "mean_cum_regret", "stderr", "n_trials")


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class EnvSpec(_Strict):
    name: Literal["taxi", "chain", "random", "bandit"]
    params: dict = Field(default_factory=dict)


class HorizonSpec(_Strict):
    kind: Literal["geometric", "polynomial", "quasi_hyperbolic", "empirical", "custom"]
    params: dict = Field(default_factory=dict)
    values: Optional[list[float]] = None
    role: Optional[Literal["horizon"]] = None

    def distribution(self) -> HorizonDistribution:
        return HorizonDistribution.from_dict(self.model_dump(exclude_none=True))


class LearnerSpec(_Strict):
    kind: Literal["generalized", "baseline", "estimating"]
    label: Optional[str] = None
    delta: Union[float, Literal["auto"]] = "auto"
    confidence: float = 0.1
    bonus_form: Literal["as_displayed", "sqrt_log"] = AS_DISPLAYED
    bonus_scale: float = 1.0
    update_unvisited: bool = False
    assumed_H: Optional[int] = None
    bonus_kind: Literal["hoeffding", "bernstein"] = "hoeffding"
    H_star: Optional[int] = None
    gamma0: Optional[HorizonSpec] = None
    reset_counts_per_block: bool = False

    @model_validator(mode="after")
    def _check(self):
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.bonus_scale <= 0:
            raise ValueError("bonus_scale must be positive")
        if self.kind == "baseline" and (self.assumed_H is None or self.assumed_H < 1):
            raise ValueError("baseline learner needs assumed_H >= 1")
        if self.H_star is not None and self.H_star < 1:
            raise ValueError("H_star must be >= 1")
        return self

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "baseline":
            return f"ucbvi_{self.bonus_kind}_H{self.assumed_H}"
        return self.kind


class ExperimentConfig(_Strict):
    env: EnvSpec
    horizon: HorizonSpec
    learner: LearnerSpec
    T: int
    trials: int = 1
    seed: int = 0
    regret_mode: Literal["realized", "discounted"] = REALIZED
    workers: int = 1
    output: Optional[str] = None

    @field_validator("trials")
    @classmethod
    def _trials(cls, v):
        if v < 1:
            raise ValueError("trials must be >= 1")
        return v

    @field_validator("T")
    @classmethod
    def _T(cls, v):
        if v < 0:
            raise ValueError("T must be >= 0")
        return v

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
            return cls.model_validate(data)
        except (OSError, json.JSONDecodeError, ValidationError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc


# ----------------------------------------------------------------- running
def trial_rng(base_seed: int, trial: int) -> np.random.Generator:
    """Per-trial stream that depends only on ``(base_seed, trial)``."""
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(trial)]))


def resolve_delta(spec: LearnerSpec, curve: DiscountCurve, T: int) -> float:
    if spec.delta != "auto":
        return float(spec.delta)
    _, delta = recommended_params(curve, max(T, 1))
    # the recipe can reach Gamma(1) for tiny T; keep it inside the valid range
    return min(delta, 0.5 * curve.total)


def run_trial(cfg: ExperimentConfig, trial: int) -> RegretTrace:
    mdp, starts = build_env(cfg.env.name, cfg.env.params)
    dist = cfg.horizon.distribution()
    curve = dist.curve
    spec = cfg.learner
    rng = trial_rng(cfg.seed, trial)
    common = dict(start_states=starts, regret_mode=cfg.regret_mode)
    if cfg.T == 0:
        return RegretTrace()
    if spec.kind == "generalized":
        delta = resolve_delta(spec, curve, cfg.T)
        trace, _ = run_learner(
            mdp, dist, curve, delta, spec.confidence, cfg.T, rng,
            bonus_form=spec.bonus_form, bonus_scale=spec.bonus_scale,
            update_unvisited=spec.update_unvisited, **common,
        )
        return trace
    if spec.kind == "baseline":
        bcfg = BaselineConfig(spec.assumed_H, spec.bonus_kind, spec.confidence, spec.bonus_scale)
        return run_baseline(mdp, dist, bcfg, cfg.T, rng, **common)
    H_star = spec.H_star
    if H_star is None:
        H_star = effective_horizon(curve, resolve_delta(spec, curve, cfg.T)).n_delta
    gamma0 = None if spec.gamma0 is None else DiscountCurve.from_dict(spec.gamma0.model_dump(exclude_none=True, exclude={"role"}))
    return run_estimating_learner(
        mdp, dist, H_star, spec.confidence, cfg.T, rng,
        gamma0=gamma0, reset_counts_per_block=spec.reset_counts_per_block,
        bonus_form=spec.bonus_form, bonus_scale=spec.bonus_scale,
        update_unvisited=spec.update_unvisited, **common,
    )


def run_trials(cfg: ExperimentConfig) -> list[RegretTrace]:
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return list(pool.map(lambda i: run_trial(cfg, i), range(cfg.trials)))
    return [run_trial(cfg, i) for i in range(cfg.trials)]


def summarize(traces: list[RegretTrace], T: int) -> np.ndarray:
    """Rows ``(episode, mean_cum_regret, stderr, n_trials)``."""
    if T == 0:
        return np.zeros((0, 4))
    cum = np.array([tr.cumulative for tr in traces]).reshape(len(traces), T)
    n = cum.shape[0]
    mean = cum.mean(axis=0)
    stderr = cum.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(T)
    return np.column_stack([np.arange(1, T + 1), mean, stderr, np.full(T, n)])


# ----------------------------------------------------------------- writing
def _fmt(x) -> str:
    return repr(float(x))


def trace_rows(trial: int, trace: RegretTrace):
    regret = trace.regret
    cum = trace.cumulative
    for i in range(len(trace)):
        yield (trial, trace.episode[i], trace.horizon[i], _fmt(trace.v_star[i]), _fmt(trace.v_pi[i]),
               _fmt(regret[i]), _fmt(cum[i]), trace.block[i])


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_outputs(out_dir: Path, traces: list[RegretTrace], summary: np.ndarray) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for i, tr in enumerate(traces):
            p = out_dir / f"trace_trial{i:03d}.csv"
            written.append(p)
            _write_csv(p, TRACE_HEADER, trace_rows(i, tr))
        p = out_dir / "summary.csv"
        written.append(p)
        rows = ((int(e), _fmt(m), _fmt(s), int(n)) for e, m, s, n in summary)
        _write_csv(p, SUMMARY_HEADER, rows)
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> np.ndarray:
    """Run every trial, write per-trial traces and ``summary.csv``; return the summary."""
    out = Path(out_dir or cfg.output or ".")
    traces = run_trials(cfg)
    summary = summarize(traces, cfg.T)
    write_outputs(out, traces, summary)
    for tr in traces:
        for msg in tr.warnings:
            log.warning(msg)
    return summary


def compare(configs: list[ExperimentConfig], out_dir) -> Path:
    """Run several learners on a shared env/horizon/T and write ``comparison.csv``.

    Row ``i`` holds episode ``i + 1``: one mean column per learner, then one
    stderr column per learner.
    """
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configs")
    ref = configs[0]
    for c in configs[1:]:
        if c.env != ref.env or c.horizon != ref.horizon or c.T != ref.T:
            raise ConfigError("compared configs must share env, horizon and T")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names, columns = [], []
    for c in configs:
        name = c.learner.name
        k = 2
        while name in names:
            name = f"{c.learner.name}_{k}"
            k += 1
        names.append(name)
        summary = run_experiment(c, out / name)
        columns.append(summary)
    header = [f"mean_{n}" for n in names] + [f"stderr_{n}" for n in names]
    rows = []
    for i in range(ref.T):
        rows.append([_fmt(s[i, 1]) for s in columns] + [_fmt(s[i, 2]) for s in columns])
    path = out / "comparison.csv"
    _write_csv(path, header, rows)
    return path

