"""Experiment harness: configured training runs with CSV metric logs,
directory sweeps, post-hoc rate fits, and the batch-size-one protocol.

A run config is a JSON object with the optimizer contract keys

    norm, loss, batch_size, momentum, beta1, vr, c, a, eta0, epochs,
    seed, dataset_path, w0 ("zeros" or a matrix file path), out_csv

plus the optional harness keys

    gamma        precomputed reference margin (float)
    wstar_path   precomputed max-margin direction (matrix file)
    wbar_kind    "sign" | "normalized": also log cosine to the bias matrix
    log_every    metric cadence in steps (default 10)
    margin_tol / margin_iters   solver settings when gamma is not supplied

Unknown keys are rejected. The CSV schema is fixed:

    t,epoch,eta,loss,proxy_g,min_margin,weight_norm,norm_margin,gap_to_gamma,cos_wstar,cos_wbar,dualnorm_signal

The gap column is measured against the run's stored target: the solver's
gamma for variance-reduced and full-batch runs, and the effective margin
(rho_nomom or rho_mom) for mini-batch runs, matching the distinct targets
of the large-batch and momentum regimes. Optional fields serialize as
empty strings. Floats are written with repr(), so reruns of the same
config are byte-identical.

Runs are fully independent (each owns its state and output file); the
sweep executes them one after another and a per-config failure is recorded
in the summary without touching the other runs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .linalg import NormSpec, dual_norm, frobenius_cosine
from .model import (
    CROSS_ENTROPY,
    EXPONENTIAL,
    Dataset,
    load_dataset,
    load_matrix,
    loss as loss_fn,
    margin_report,
    proxy_g,
)
from .optimizer import OptimizerConfig, Schedule, effective_margin_thresholds, run
from .reference import (
    BIAS_NORMALIZED,
    BIAS_SIGN,
    bias_matrix,
    canonical_update_matrix,
    max_margin,
)
from .steepest import steepest_map

CSV_HEADER = (
    "t,epoch,eta,loss,proxy_g,min_margin,weight_norm,norm_margin,"
    "gap_to_gamma,cos_wstar,cos_wbar,dualnorm_signal"
)

_REQUIRED_KEYS = {
    "norm",
    "loss",
    "batch_size",
    "momentum",
    "beta1",
    "vr",
    "c",
    "a",
    "eta0",
    "epochs",
    "seed",
    "dataset_path",
    "w0",
    "out_csv",
}
_OPTIONAL_KEYS = {"gamma", "wstar_path", "wbar_kind", "log_every", "margin_tol", "margin_iters"}

_LOSS_ALIASES = {
    "cross_entropy": CROSS_ENTROPY,
    "ce": CROSS_ENTROPY,
    "exponential": EXPONENTIAL,
    "exp": EXPONENTIAL,
}


class ConfigError(ValueError):
    pass


@dataclass
class MetricRow:
    t: int
    epoch: int
    eta: float
    loss: float
    proxy_g: float
    min_margin: float
    weight_norm: float
    norm_margin: float
    gap_to_gamma: float
    cos_wstar: float | None
    cos_wbar: float | None
    dualnorm_signal: float

    def to_csv(self) -> str:
        def f(v):
            return "" if v is None else repr(float(v))

        return ",".join(
            [
                str(self.t),
                str(self.epoch),
                f(self.eta),
                f(self.loss),
                f(self.proxy_g),
                f(self.min_margin),
                f(self.weight_norm),
                f(self.norm_margin),
                f(self.gap_to_gamma),
                f(self.cos_wstar),
                f(self.cos_wbar),
                f(self.dualnorm_signal),
            ]
        )


@dataclass(frozen=True)
class SlopeFit:
    window: tuple[int, int]
    slope: float
    intercept: float
    r2: float


@dataclass
class RunConfig:
    """Validated run description, plus the resolved dataset and references."""

    opt: OptimizerConfig
    dataset_path: str
    w0: np.ndarray
    out_csv: str
    log_every: int
    gamma: float | None
    wstar_path: str | None
    wbar_kind: str | None
    margin_tol: float
    margin_iters: int


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    keys = set(raw)
    unknown = keys - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    missing = _REQUIRED_KEYS - keys
    if missing:
        raise ConfigError(f"{path}: missing config keys {sorted(missing)}")

    try:
        norm = NormSpec.parse(str(raw["norm"]))
        loss_kind = _LOSS_ALIASES[str(raw["loss"]).lower()]
        schedule = Schedule(c=float(raw["c"]), a=float(raw["a"]), eta0=float(raw["eta0"]))
        opt = OptimizerConfig(
            batch_size=int(raw["batch_size"]),
            momentum_on=bool(raw["momentum"]),
            beta1=float(raw["beta1"]),
            vr_on=bool(raw["vr"]),
            schedule=schedule,
            epochs=int(raw["epochs"]),
            seed=int(raw["seed"]),
            norm=norm,
            loss=loss_kind,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    dataset_path = str(raw["dataset_path"])
    if not os.path.exists(dataset_path):
        raise ConfigError(f"{path}: dataset_path {dataset_path!r} does not exist")
    ds = load_dataset(dataset_path)

    w0_spec = raw["w0"]
    if w0_spec == "zeros":
        w0 = np.zeros((ds.k, ds.d))
    else:
        if not os.path.exists(str(w0_spec)):
            raise ConfigError(f"{path}: w0 path {w0_spec!r} does not exist")
        w0 = load_matrix(str(w0_spec))

    wbar_kind = raw.get("wbar_kind")
    if wbar_kind is not None and wbar_kind not in (BIAS_SIGN, BIAS_NORMALIZED):
        raise ConfigError(f"{path}: wbar_kind must be 'sign' or 'normalized'")
    wstar_path = raw.get("wstar_path")
    if wstar_path is not None and not os.path.exists(str(wstar_path)):
        raise ConfigError(f"{path}: wstar_path {wstar_path!r} does not exist")

    log_every = int(raw.get("log_every", 10))
    if log_every < 1:
        raise ConfigError(f"{path}: log_every must be >= 1")

    return RunConfig(
        opt=opt,
        dataset_path=dataset_path,
        w0=w0,
        out_csv=str(raw["out_csv"]),
        log_every=log_every,
        gamma=None if raw.get("gamma") is None else float(raw["gamma"]),
        wstar_path=None if wstar_path is None else str(wstar_path),
        wbar_kind=wbar_kind,
        margin_tol=float(raw.get("margin_tol", 1e-3)),
        margin_iters=int(raw.get("margin_iters", 120_000)),
    )


def _resolve_references(cfg: RunConfig, ds: Dataset):
    """Reference margin gamma, max-margin direction, and optional bias matrix."""
    wstar = load_matrix(cfg.wstar_path) if cfg.wstar_path else None
    if cfg.gamma is not None:
        gamma = cfg.gamma
    else:
        sol = max_margin(ds, cfg.opt.norm, tol=cfg.margin_tol, max_iters=cfg.margin_iters)
        gamma = sol.gamma
        if wstar is None:
            wstar = sol.w_star
    wbar = bias_matrix(ds, cfg.wbar_kind).w_bar if cfg.wbar_kind else None
    return gamma, wstar, wbar


def _gap_target(cfg: RunConfig, ds: Dataset, gamma: float) -> float:
    """Margin-gap target: gamma for VR/full-batch, effective margin otherwise."""
    if cfg.opt.vr_on or cfg.opt.batch_size == ds.n:
        return gamma
    thr = effective_margin_thresholds(
        gamma, ds.r_bound, ds.n, cfg.opt.batch_size, cfg.opt.beta1, cfg.opt.schedule.eta0
    )
    return thr.rho_mom if cfg.opt.momentum_on else thr.rho_nomom


def train_cmd(config_path: str) -> str:
    """Run one config and write its metric CSV; returns the CSV path."""
    cfg = load_config(config_path)
    ds = load_dataset(cfg.dataset_path)
    gamma, wstar, wbar = _resolve_references(cfg, ds)
    target = _gap_target(cfg, ds, gamma)
    m = ds.n // cfg.opt.batch_size
    rows: list[MetricRow] = []

    def hook(t, w, h, eta):
        if t % cfg.log_every != 0:
            return
        rep = margin_report(w, ds, cfg.opt.norm)
        rows.append(
            MetricRow(
                t=t,
                epoch=(t - 1) // m,
                eta=eta,
                loss=loss_fn(w, ds, cfg.opt.loss),
                proxy_g=proxy_g(w, ds, cfg.opt.loss),
                min_margin=rep.unnormalized_min,
                weight_norm=rep.weight_norm,
                norm_margin=rep.normalized,
                gap_to_gamma=target - rep.normalized,
                cos_wstar=None if wstar is None else frobenius_cosine(w, wstar),
                cos_wbar=None if wbar is None else frobenius_cosine(w, wbar),
                dualnorm_signal=dual_norm(h, cfg.opt.norm),
            )
        )

    run(cfg.opt, ds, cfg.w0, metrics_hook=hook)
    _write_csv(cfg.out_csv, rows)
    return cfg.out_csv


def _write_csv(path: str, rows: list[MetricRow]):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.to_csv() + "\n")


def read_csv(path: str) -> dict[str, np.ndarray]:
    """CSV columns as float arrays (empty optional cells become NaN)."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        cols: dict[str, list[float]] = {h: [] for h in header}
        for line in fh:
            for h, tok in zip(header, line.strip().split(",")):
                cols[h].append(float(tok) if tok else math.nan)
    return {h: np.asarray(v) for h, v in cols.items()}


def fit_rate(csv_path: str, t_lo: int, t_hi: int) -> SlopeFit:
    """Least-squares slope of log(gap) against log(t) on a step window.

    Uses only rows with a strictly positive gap; requires at least 20 of
    them inside [t_lo, t_hi].
    """
    if t_lo >= t_hi:
        raise ValueError("t_lo must be below t_hi")
    cols = read_csv(csv_path)
    t = cols["t"]
    gap = cols["gap_to_gamma"]
    sel = (t >= t_lo) & (t <= t_hi) & (gap > 0.0)
    if int(sel.sum()) < 20:
        raise ValueError(
            f"{csv_path}: only {int(sel.sum())} positive-gap rows in [{t_lo}, {t_hi}]; need >= 20"
        )
    x = np.log(t[sel])
    yv = np.log(gap[sel])
    design = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(design, yv, rcond=None)
    fitted = design @ coef
    ss_res = float(np.sum((yv - fitted) ** 2))
    ss_tot = float(np.sum((yv - yv.mean()) ** 2))
    r2 = 1.0 - (ss_res / ss_tot if ss_tot > 0.0 else 0.0)
    return SlopeFit(window=(t_lo, t_hi), slope=float(coef[0]), intercept=float(coef[1]), r2=r2)


def sweep_cmd(config_dir: str, summary_path: str | None = None) -> dict:
    """Run every *.json config in a directory; failures do not stop the sweep.

    Returns (and optionally writes) a summary mapping config name to
    {final_gap, final_cos_wstar, slope} or {"error": reason}.
    """
    names = sorted(f for f in os.listdir(config_dir) if f.endswith(".json"))
    if not names:
        raise ConfigError(f"{config_dir}: no .json configs found")
    summary: dict[str, dict] = {}
    for name in names:
        cfg_path = os.path.join(config_dir, name)
        try:
            csv_path = train_cmd(cfg_path)
            cols = read_csv(csv_path)
            entry: dict = {
                "final_gap": float(cols["gap_to_gamma"][-1]),
                "final_cos_wstar": _last_or_none(cols["cos_wstar"]),
            }
            try:
                fit = fit_rate(csv_path, 1000, int(cols["t"][-1]))
                entry["slope"] = fit.slope
            except ValueError:
                entry["slope"] = None
            summary[name] = entry
        except Exception as exc:  # fault isolation across configs
            summary[name] = {"error": f"{type(exc).__name__}: {exc}"}
    if summary_path:
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return summary


def _last_or_none(col: np.ndarray):
    v = float(col[-1])
    return None if math.isnan(v) else v


_PERSAMPLE_NORMS = {"ew:inf", "ew:2", "sch:inf"}


def _check_scale_skewed(ds: Dataset):
    for i in range(ds.n):
        xi = ds.x[:, i]
        nz = np.nonzero(xi)[0]
        if nz.size != 1 or xi[nz[0]] <= 0.0 or int(nz[0]) != int(ds.y[i]):
            raise ConfigError(
                f"persample protocol needs orthogonal scale-skewed data; sample {i} is not alpha * e_y"
            )


def persample_cmd(config_path: str) -> tuple[str, dict]:
    """Batch-size-one protocol: train, track the bias-matrix cosine, and
    check the invariant update direction at every step.

    Preconditions: scale-skewed dataset, b = 1, momentum and VR off, zero
    init, and a norm in {ew:inf, ew:2, sch:inf}. Returns the CSV path and
    the verdict dict (also written next to the CSV as <out_csv>.verdict.json).
    """
    cfg = load_config(config_path)
    if cfg.opt.batch_size != 1:
        raise ConfigError("persample protocol requires batch_size = 1")
    if cfg.opt.momentum_on or cfg.opt.vr_on:
        raise ConfigError("persample protocol requires momentum and vr off")
    if str(cfg.opt.norm) not in _PERSAMPLE_NORMS:
        raise ConfigError(f"persample norm must be one of {sorted(_PERSAMPLE_NORMS)}")
    if np.any(cfg.w0):
        raise ConfigError("persample protocol requires w0 = zeros")
    ds = load_dataset(cfg.dataset_path)
    _check_scale_skewed(ds)

    kind = BIAS_SIGN if str(cfg.opt.norm) == "ew:inf" else BIAS_NORMALIZED
    wbar = bias_matrix(ds, kind).w_bar
    canonical = [canonical_update_matrix(ds, i, kind) for i in range(ds.n)]
    gamma, wstar, _ = _resolve_references(cfg, ds)

    m = ds.n  # b = 1
    rows: list[MetricRow] = []
    invariant_ok = True
    first_sample_of_class = {int(c): int(np.nonzero(ds.y == c)[0][0]) for c in range(ds.k)}

    def hook(t, w, h, eta):
        nonlocal invariant_ok
        if np.any(h):
            # h is the per-sample gradient; its support column identifies the class
            col = int(np.argmax(np.abs(h).sum(axis=0)))
            expect = canonical[first_sample_of_class[col]]
            delta = steepest_map(h, cfg.opt.norm)
            if float(np.abs(delta + expect).max()) > 1e-9 * (1.0 + float(np.abs(expect).max())):
                invariant_ok = False
        if t % cfg.log_every != 0:
            return
        rep = margin_report(w, ds, cfg.opt.norm)
        rows.append(
            MetricRow(
                t=t,
                epoch=(t - 1) // m,
                eta=eta,
                loss=loss_fn(w, ds, cfg.opt.loss),
                proxy_g=proxy_g(w, ds, cfg.opt.loss),
                min_margin=rep.unnormalized_min,
                weight_norm=rep.weight_norm,
                norm_margin=rep.normalized,
                gap_to_gamma=gamma - rep.normalized,
                cos_wstar=None if wstar is None else frobenius_cosine(w, wstar),
                cos_wbar=frobenius_cosine(w, wbar),
                dualnorm_signal=dual_norm(h, cfg.opt.norm),
            )
        )

    state = run(cfg.opt, ds, cfg.w0, metrics_hook=hook)
    _write_csv(cfg.out_csv, rows)
    verdict = {
        "final_loss": loss_fn(state.w, ds, cfg.opt.loss),
        "final_cos_wbar": frobenius_cosine(state.w, wbar),
        "final_cos_wstar": None if wstar is None else frobenius_cosine(state.w, wstar),
        "invariant_gradient_ok": bool(invariant_ok),
        "wbar_kind": kind,
        "gamma": gamma,
    }
    with open(cfg.out_csv + ".verdict.json", "w", encoding="utf-8") as fh:
        json.dump(verdict, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return cfg.out_csv, verdict
