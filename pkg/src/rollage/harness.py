"""Experiment grids: simulate, select, fit, and tabulate.

A grid is the product models x sample sizes x seeds x criteria. Cells that
share (model, n, seed) share one simulated series, so they run together as a
group. Groups run in a process pool; the parent is the only writer.

Completed cells are appended to ``journal.jsonl`` keyed by a content hash of
the cell, so an interrupted run resumes where it stopped. ``results.csv``,
``summary.json`` and the figure tables are rebuilt from the journal at the end
of every run, in grid order.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .arfit import fit_ar_cmle
from .criteria import bic_curve, gic_curve
from .durbin import BIC, GIC, ROLLAGE_STAR, PtildeRule, fit_arma_durbin, fit_ma_durbin, relative_difference_ptilde, relative_error
from .exceptions import ConfigError
from .models import ModelSpec, validate_model
from .selection import DEFAULT_DELTA, select_order_rollage
from .simulate import derive_seed, random_model, simulate

RESULT_FIELDS = (
    "model_id", "kind", "p", "q", "n", "seed", "criterion",
    "ptilde", "p_hat", "relative_error", "wall_time_ms", "error",
)
CRITERION_NAMES = {"rollage": ROLLAGE_STAR, "bic": BIC, "gic": GIC}
LINEAR_PREDICTOR = "linear_predictor"
AR_PBAR = 50
JOURNAL = "journal.jsonl"
RESULTS = "results.csv"
SUMMARY = "summary.json"
FIGURES = ("ptilde_vs_q", "ptilde_vs_n", "relerr_vs_q", "relerr_vs_n")


@dataclass(frozen=True)
class ModelEntry:
    model_id: str
    spec: ModelSpec


@dataclass(frozen=True)
class ExperimentConfig:
    models: list[ModelEntry]
    sample_sizes: list[int]
    seeds: list[int]
    criteria: list[str] = field(default_factory=lambda: ["rollage", "bic", "gic"])
    delta: float = DEFAULT_DELTA
    pbar_rule: Any = LINEAR_PREDICTOR
    output_dir: str = "results"
    parallelism: int = 1
    alpha: float = 1.0
    ar_pbar: int = AR_PBAR

    def __post_init__(self):
        if not self.models or not self.sample_sizes or not self.seeds:
            raise ConfigError("models, sample_sizes and seeds must be non-empty")
        if not self.criteria:
            raise ConfigError("criteria must be non-empty")
        bad = [c for c in self.criteria if c not in CRITERION_NAMES]
        if bad:
            raise ConfigError(f"unknown criteria {bad}; choose from {sorted(CRITERION_NAMES)}")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if any(int(n) < 1 for n in self.sample_sizes):
            raise ConfigError("sample sizes must be positive")
        if self.pbar_rule != LINEAR_PREDICTOR and not (
            isinstance(self.pbar_rule, int) and self.pbar_rule >= 2
        ):
            raise ConfigError("pbar_rule must be 'linear_predictor' or an integer >= 2")
        if int(self.parallelism) < 1:
            raise ConfigError("parallelism must be at least 1")
        ids = [m.model_id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ConfigError("model ids must be unique")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {"models", "sample_sizes", "seeds", "criteria", "delta", "pbar_rule",
                 "output_dir", "parallelism", "alpha", "ar_pbar"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            models = [_model_entry(m, i) for i, m in enumerate(d["models"])]
            kw = {k: d[k] for k in known - {"models"} if k in d}
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        rule = kw.get("pbar_rule", LINEAR_PREDICTOR)
        if isinstance(rule, dict) and set(rule) == {"fixed"}:
            rule = rule["fixed"]
        kw["pbar_rule"] = rule
        kw["sample_sizes"] = [int(n) for n in kw.get("sample_sizes", [])]
        kw["seeds"] = [int(s) for s in kw.get("seeds", [])]
        return cls(models=models, **kw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)


def _model_entry(m: dict, index: int) -> ModelEntry:
    """A model given either explicitly or as a random-generation request."""
    if not isinstance(m, dict):
        raise ConfigError(f"model #{index} must be an object")
    if "phi" in m or "theta" in m:
        spec = ModelSpec.from_dict(m)
        default_id = f"m{index}"
    else:
        kind, p, q, seed = m["kind"], int(m.get("p", 0)), int(m.get("q", 0)), int(m["seed"])
        spec = random_model(kind, p, q, seed)
        default_id = f"{kind.lower()}{p}_{q}_s{seed}"
    if not validate_model(spec).ok:
        raise ConfigError(f"model #{index} is not causal and invertible")
    return ModelEntry(str(m.get("id", default_id)), spec)


def cell_key(entry: ModelEntry, n: int, seed: int, criterion: str, cfg: ExperimentConfig) -> str:
    doc = {
        "model": entry.spec.to_dict(), "model_id": entry.model_id, "n": int(n),
        "seed": int(seed), "criterion": criterion, "delta": cfg.delta,
        "pbar_rule": cfg.pbar_rule, "alpha": cfg.alpha, "ar_pbar": cfg.ar_pbar,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def grid(cfg: ExperimentConfig):
    """Groups of cells in grid order: ((entry, n, seed), [(criterion, key), ...])."""
    for entry in cfg.models:
        for n in cfg.sample_sizes:
            for seed in cfg.seeds:
                cells = [(c, cell_key(entry, n, seed, c, cfg)) for c in cfg.criteria]
                yield (entry, int(n), int(seed)), cells


def _ar_cell(y, spec, criterion, cfg):
    pbar = cfg.pbar_rule if isinstance(cfg.pbar_rule, int) else min(cfg.ar_pbar, y.size // 20)
    t0 = time.perf_counter()
    if criterion == "rollage":
        p_hat = select_order_rollage(y, pbar).p_hat
    elif criterion == "bic":
        p_hat = bic_curve(y, pbar).argmin
    else:
        p_hat = gic_curve(y, pbar, cfg.alpha).argmin
    elapsed = time.perf_counter() - t0
    rel = None
    if p_hat == spec.p:
        rel = relative_error(fit_ar_cmle(y, p_hat).coefficients, spec.phi)
    return None, p_hat, rel, elapsed


def _durbin_cell(y, spec, criterion, cfg):
    pbar = cfg.pbar_rule if isinstance(cfg.pbar_rule, int) else None
    rule = PtildeRule(CRITERION_NAMES[criterion], cfg.delta, pbar, None, cfg.alpha)
    t0 = time.perf_counter()
    if spec.p:
        fit = fit_arma_durbin(y, spec.p, spec.q, rule, truth=spec.params)
    else:
        fit = fit_ma_durbin(y, spec.q, rule, truth=spec.theta)
    return fit.ptilde, None, fit.relative_error, time.perf_counter() - t0


def run_group(payload):
    """Worker: simulate one series and evaluate every criterion on it."""
    entry, n, seed, cells, cfg = payload
    spec = entry.spec
    base = {"model_id": entry.model_id, "kind": spec.kind, "p": spec.p, "q": spec.q,
            "n": n, "seed": seed}
    out = []
    try:
        y = simulate(spec, n, derive_seed(seed, spec.to_json(), n)).values
    except Exception as exc:  # recorded per row, never fatal
        msg = f"{type(exc).__name__}: {exc}"
        return [(key, dict(base, criterion=c, error=msg)) for c, key in cells]
    for criterion, key in cells:
        row = dict(base, criterion=criterion)
        try:
            cell = _ar_cell if spec.kind == "ar" else _durbin_cell
            ptilde, p_hat, rel, elapsed = cell(y, spec, criterion, cfg)
            row.update(ptilde=ptilde, p_hat=p_hat, relative_error=rel,
                       wall_time_ms=elapsed * 1e3)
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        out.append((key, row))
    return out


def _read_journal(path: Path) -> dict[str, dict]:
    done = {}
    if path.exists():
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                # a torn final line from an interrupted write
                continue
            done[rec["key"]] = rec["row"]
    return done


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else format(v, ".17g")
    return str(v)


@dataclass
class RunOutcome:
    output_dir: Path
    total_cells: int
    ran: int
    skipped: int
    failed: int

    @property
    def all_failed(self) -> bool:
        return self.total_cells > 0 and self.failed == self.total_cells


def run_experiment(cfg: ExperimentConfig, output_dir=None, progress=None) -> RunOutcome:
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jpath = out / JOURNAL
    done = _read_journal(jpath)
    groups = list(grid(cfg))
    todo = []
    skipped = 0
    for (entry, n, seed), cells in groups:
        pending = [(c, k) for c, k in cells if k not in done]
        skipped += len(cells) - len(pending)
        if pending:
            todo.append((entry, n, seed, pending, cfg))
    ran = 0
    if jpath.exists() and jpath.stat().st_size:
        with jpath.open("rb") as fh:
            fh.seek(-1, 2)
            torn = fh.read(1) != b"\n"
        if torn:
            # start fresh records on a new line after an interrupted write
            with jpath.open("a") as fh:
                fh.write("\n")
    with jpath.open("a") as journal:
        if cfg.parallelism > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
                results = pool.map(run_group, todo)
                ran = _drain(results, journal, done, progress)
        else:
            ran = _drain(map(run_group, todo), journal, done, progress)
    rows = [done[k] for _, cells in groups for _, k in cells]
    write_results(rows, out / RESULTS)
    rows = read_results(out / RESULTS)
    summary = summarize(rows)
    (out / SUMMARY).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for name, table in figure_tables(rows).items():
        _write_csv(out / f"{name}.csv", table)
    failed = sum(1 for r in rows if r["error"])
    return RunOutcome(out, len(rows), ran, skipped, failed)


def _drain(results, journal, done, progress):
    ran = 0
    for group in results:
        for key, row in group:
            done[key] = row
            journal.write(json.dumps({"key": key, "row": row}, sort_keys=True) + "\n")
            ran += 1
        journal.flush()
        if progress:
            progress(ran)
    return ran


def write_results(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for r in rows:
            w.writerow([_fmt(r.get(f)) for f in RESULT_FIELDS])


def _num(s, cast=float):
    return cast(s) if s != "" else None


def read_results(path) -> list[dict]:
    """results.csv back into typed rows."""
    rows = []
    with Path(path).open(newline="") as fh:
        for r in csv.DictReader(fh):
            rows.append({
                "model_id": r["model_id"], "kind": r["kind"], "p": int(r["p"]),
                "q": int(r["q"]), "n": int(r["n"]), "seed": int(r["seed"]),
                "criterion": r["criterion"], "ptilde": _num(r["ptilde"], int),
                "p_hat": _num(r["p_hat"], int),
                "relative_error": _num(r["relative_error"]),
                "wall_time_ms": _num(r["wall_time_ms"]), "error": r["error"],
            })
    return rows


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else None


def summarize(rows) -> dict:
    """Mean ptilde, p_hat and relative error per (kind, criterion, n).

    Also the relative difference of each alternative's mean ptilde against the
    Rollage mean, per (kind, n), when both are present.
    """
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r["kind"], r["criterion"], r["n"]), []).append(r)
    cells = []
    for (kind, crit, n), rs in sorted(groups.items()):
        ok = [r for r in rs if not r["error"]]
        cells.append({
            "kind": kind, "criterion": crit, "n": n, "cells": len(rs),
            "failed": len(rs) - len(ok),
            "mean_ptilde": _mean(r["ptilde"] for r in ok),
            "mean_p_hat": _mean(r["p_hat"] for r in ok),
            "mean_relative_error": _mean(r["relative_error"] for r in ok),
        })
    by = {(c["kind"], c["criterion"], c["n"]): c for c in cells}
    reldiff = []
    for c in cells:
        ref = by.get((c["kind"], "rollage", c["n"]))
        if c["criterion"] == "rollage" or ref is None:
            continue
        if c["mean_ptilde"] is None or not ref["mean_ptilde"]:
            continue
        reldiff.append({
            "kind": c["kind"], "n": c["n"], "criterion": c["criterion"],
            "relative_difference_ptilde": relative_difference_ptilde(
                c["mean_ptilde"], ref["mean_ptilde"]),
        })
    return {"by_criterion_n": cells, "relative_difference": reldiff,
            "total_cells": len(rows), "failed_cells": sum(1 for r in rows if r["error"])}


def figure_tables(rows) -> dict[str, list[dict]]:
    """Plot-ready aggregates over successful MA/ARMA cells."""
    acc: dict[tuple, list] = {}
    for r in rows:
        if r["error"] or r["ptilde"] is None:
            continue
        acc.setdefault((r["criterion"], r["kind"], r["p"], r["q"], r["n"]), []).append(r)
    agg = []
    for (crit, kind, p, q, n), rs in acc.items():
        agg.append({
            "criterion": crit, "kind": kind, "p": p, "q": q, "n": n, "cells": len(rs),
            "mean_ptilde": _mean(r["ptilde"] for r in rs),
            "mean_relative_error": _mean(r["relative_error"] for r in rs),
        })

    def table(value, order):
        cols = ("criterion", "kind", "p", "q", "n", "cells", value)
        return [{c: a[c] for c in cols} for a in sorted(agg, key=lambda a: [a[k] for k in order])]

    vs_q = ("criterion", "kind", "n", "p", "q")
    vs_n = ("criterion", "kind", "p", "q", "n")
    return {
        "ptilde_vs_q": table("mean_ptilde", vs_q),
        "ptilde_vs_n": table("mean_ptilde", vs_n),
        "relerr_vs_q": table("mean_relative_error", vs_q),
        "relerr_vs_n": table("mean_relative_error", vs_n),
    }


def _write_csv(path, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not rows:
            fh.write("criterion,kind,p,q,n,cells,value\n")
            return
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
