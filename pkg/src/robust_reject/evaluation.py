"""Metrics, the multi-seed sweep harness, and table / figure-data emission.

Err is the empirical 0-d-1 risk under the closed-form worst-case test
perturbation, so err = d*rr + misclassified/N identically. Acc is the
accuracy over non-rejected points and is reported as 0 when everything
is rejected. Sweep rows are ordered gamma_train, then d, then beta, then
gamma_test, ten fresh-data runs per cell by default.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import DataConfig, LabeledDataset, generate
from .losses import Family, SurrogateSpec
from .risk import AlphaGrid, conditional_risk_curve, target_excess_risk_closed_form
from .calibration import eta_left, eta_right
from .training import AttackConfig, AttackMethod, RejectClassifier, TrainConfig, \
    TrainingDivergedError, adversarial_training, predict_batch

__all__ = [
    "MetricsRow",
    "SweepConfig",
    "SweepTable",
    "evaluate",
    "run_sweep",
    "emit_table",
    "read_table",
    "emit_figure_data",
]


@dataclass(frozen=True)
class MetricsRow:
    loss_family: str
    mu: float
    gamma_train: float
    d: float
    beta: float
    gamma_test: float
    err: float
    acc: float
    rr: float
    err_std: float
    acc_std: float
    rr_std: float
    n_runs: int


@dataclass(frozen=True)
class SweepConfig:
    loss_family: Family = Family.DOUBLE_SIGMOID
    mu: float = 2.65
    d_list: tuple[float, ...] = (0.2, 0.3, 0.4)
    beta_list: tuple[float, ...] = (0.0, 0.1, 0.15, 0.25)
    gamma_train_list: tuple[float, ...] = (0.0, 0.1, 0.2)
    gamma_test_list: tuple[float, ...] = (0.0, 0.1, 0.2)
    n_runs: int = 10
    base_seed: int = 1000
    data: DataConfig = field(default_factory=DataConfig)
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    rho_init: float = 0.5
    w_init: str = "seeded-gaussian"
    attack_method: AttackMethod = AttackMethod.CLOSED_FORM
    fresh_data_per_run: bool = True

    def __post_init__(self):
        for name in ("d_list", "beta_list", "gamma_train_list", "gamma_test_list"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")


@dataclass
class SweepTable:
    rows: list[MetricsRow]
    failures: list[str] = field(default_factory=list)


def evaluate(clf: RejectClassifier, test: LabeledDataset, d: float,
             gamma_test: float) -> tuple[float, float, float]:
    """(err, acc, rr) after the closed-form worst-case attack at gamma_test."""
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if gamma_test > 0:
        shift = gamma_test * float(np.linalg.norm(clf.w))
        if shift == 0.0:
            raise ValueError("attack undefined for a zero weight vector")
        f = clf.score(test.points) - test.labels * shift
    else:
        f = clf.score(test.points)
    pred = np.where(f > clf.rho, 1, np.where(f < -clf.rho, -1, 0))
    rejected = pred == 0
    n = len(test)
    rr = float(rejected.mean())
    kept = ~rejected
    acc = float((pred[kept] == test.labels[kept]).mean()) if kept.any() else 0.0
    mis = int((kept & (pred != test.labels)).sum())
    err = (mis + d * int(rejected.sum())) / n
    return err, acc, rr


def _cell_metrics(cfg: SweepConfig, gamma_train: float, d: float, beta: float):
    """Run one (gamma_train, d, beta) cell; returns per-gamma_test stats."""
    per_gt = {gt: [] for gt in cfg.gamma_test_list}
    failures = []
    for run in range(cfg.n_runs):
        seed = cfg.base_seed + run
        data_seed = seed if cfg.fresh_data_per_run else cfg.base_seed
        train, test = generate(replace(cfg.data, seed=data_seed))
        base_loss = SurrogateSpec(cfg.loss_family, d=d, rho=cfg.rho_init, mu=cfg.mu,
                                  beta=0.0, gamma=gamma_train)
        shifted_loss = replace(base_loss, beta=beta)
        common = dict(learning_rate=cfg.learning_rate, epochs=cfg.epochs,
                      batch_size=cfg.batch_size, seed=seed, rho_init=cfg.rho_init,
                      w_init=cfg.w_init)
        atk = AttackConfig(gamma=gamma_train, method=cfg.attack_method)
        try:
            clf = adversarial_training(train, TrainConfig(loss=base_loss, **common),
                                       TrainConfig(loss=shifted_loss, **common), atk)
            for gt in cfg.gamma_test_list:
                per_gt[gt].append(evaluate(clf, test, d, gt))
        except TrainingDivergedError as exc:
            failures.append(
                f"gamma_train={gamma_train} d={d} beta={beta} run={run}: {exc}"
            )
    rows = []
    for gt in cfg.gamma_test_list:
        runs = np.asarray(per_gt[gt], dtype=float)
        if len(runs) == 0:
            continue
        mean, std = runs.mean(axis=0), runs.std(axis=0)
        rows.append(MetricsRow(
            loss_family=cfg.loss_family.value, mu=cfg.mu, gamma_train=gamma_train,
            d=d, beta=beta, gamma_test=gt,
            err=float(mean[0]), acc=float(mean[1]), rr=float(mean[2]),
            err_std=float(std[0]), acc_std=float(std[1]), rr_std=float(std[2]),
            n_runs=len(runs),
        ))
    return rows, failures


def _cell_worker(args):
    return _cell_metrics(*args)


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> SweepTable:
    """All (gamma_train, d, beta) cells x gamma_test, averaged over runs.

    Diverged runs are excluded from the averages and recorded in
    table.failures with a warning. Cells are independent; jobs > 1 runs
    them in worker processes, merged back in deterministic order.
    """
    cells = [(cfg, gt, d, b)
             for gt in cfg.gamma_train_list
             for d in cfg.d_list
             for b in cfg.beta_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_worker, cells))
    else:
        results = [_cell_metrics(*cell) for cell in cells]
    table = SweepTable(rows=[])
    for rows, failures in results:
        table.rows.extend(rows)
        table.failures.extend(failures)
    for failure in table.failures:
        warnings.warn(f"excluded diverged run: {failure}", RuntimeWarning)
    return table


_TABLE_FIELDS = ["loss_family", "mu", "gamma_train", "d", "beta", "gamma_test",
                 "err", "acc", "rr", "err_std", "acc_std", "rr_std", "n_runs"]


def emit_table(table: SweepTable, path, format: str = "csv") -> Path:
    """Write the sweep table; csv row-per-metrics, markdown in grouped layout."""
    path = Path(path)
    if format == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_TABLE_FIELDS)
            for row in table.rows:
                writer.writerow([repr(getattr(row, f)) if isinstance(getattr(row, f), float)
                                 else getattr(row, f) for f in _TABLE_FIELDS])
        return path
    if format == "markdown":
        return _emit_markdown(table, path)
    raise ValueError(f"unknown table format {format!r}")


def read_table(path) -> SweepTable:
    rows = []
    with Path(path).open() as fh:
        for rec in csv.DictReader(fh):
            rows.append(MetricsRow(
                loss_family=rec["loss_family"],
                mu=float(rec["mu"]), gamma_train=float(rec["gamma_train"]),
                d=float(rec["d"]), beta=float(rec["beta"]),
                gamma_test=float(rec["gamma_test"]),
                err=float(rec["err"]), acc=float(rec["acc"]), rr=float(rec["rr"]),
                err_std=float(rec["err_std"]), acc_std=float(rec["acc_std"]),
                rr_std=float(rec["rr_std"]), n_runs=int(rec["n_runs"]),
            ))
    return SweepTable(rows=rows)


def _emit_markdown(table: SweepTable, path: Path) -> Path:
    """Grouped layout: one line per (gamma_train, d, beta), metric triplets per gamma_test."""
    gts = sorted({r.gamma_test for r in table.rows})
    cells: dict[tuple, dict[float, MetricsRow]] = {}
    for r in table.rows:
        cells.setdefault((r.gamma_train, r.d, r.beta), {})[r.gamma_test] = r
    lines = []
    header = "| gamma_train | d | loss |" + "".join(
        f" Err ({gt}) | Acc ({gt}) | RR ({gt}) |" for gt in gts)
    lines.append(header)
    lines.append("|" + "---|" * (3 + 3 * len(gts)))
    for (gtr, d, beta) in sorted(cells):
        row = cells[(gtr, d, beta)]
        family = next(iter(row.values())).loss_family
        cols = [f"| {gtr} | {d} | {family} (beta={beta}) |"]
        for gt in gts:
            r = row.get(gt)
            cols.append(" - | - | - |" if r is None else
                        f" {r.err:.3f} | {r.acc:.3f} | {r.rr:.3f} |")
        lines.append("".join(cols))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_figure_data(kind: str, params: dict, path) -> Path:
    """Write curve samples as CSV for external plotting.

    kinds:
      excess-target   target excess risk vs eta, one column per score
                      region, plus constant eta_left / eta_right marker
                      columns  (params: d, rho, gamma, optional n_eta)
      risk-vs-beta    C(alpha, eta) columns for several beta values
                      (params: family, mu, d, rho, eta, betas, optional grid)
      risk-vs-eta     C(alpha, eta) columns for several eta values
                      (params: family, mu, d, rho, beta, etas, optional grid)
    """
    path = Path(path)
    if kind == "excess-target":
        d = params["d"]
        rho = params.get("rho", 0.55)
        gamma = params.get("gamma", 0.2)
        n_eta = params.get("n_eta", 201)
        etas = np.linspace(0.0, 1.0, n_eta)
        # one representative alpha per region of the piecewise form
        reps = {
            "below_minus_rho_gamma": -rho - gamma - 0.1,
            "left_band": -rho,
            "reject_band": 0.0,
            "right_band": rho,
            "beyond_rho_gamma": rho + gamma + 0.1,
        }
        cols = {name: target_excess_risk_closed_form(alpha, etas, d, rho, gamma)
                for name, alpha in reps.items()}
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eta", *cols.keys(), "eta_left", "eta_right"])
            el, er = eta_left(d), eta_right(d)
            for i, e in enumerate(etas):
                writer.writerow([repr(float(e)),
                                 *(repr(float(cols[k][i])) for k in cols),
                                 repr(el), repr(er)])
        return path
    if kind in ("risk-vs-beta", "risk-vs-eta"):
        grid = params.get("grid") or AlphaGrid()
        base = SurrogateSpec(
            family=Family(params["family"]), d=params["d"], rho=params["rho"],
            mu=params["mu"],
            beta=params.get("beta", 0.0), gamma=params.get("gamma", 0.0),
        )
        if kind == "risk-vs-beta":
            labels = [float(b) for b in params["betas"]]
            curves = [conditional_risk_curve(replace(base, beta=b), params["eta"], grid)
                      for b in labels]
            names = [f"beta={b}" for b in labels]
        else:
            labels = [float(e) for e in params["etas"]]
            curves = [conditional_risk_curve(base, e, grid) for e in labels]
            names = [f"eta={e}" for e in labels]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", *names])
            for i, a in enumerate(grid.points):
                writer.writerow([repr(float(a)), *(repr(float(c[i])) for c in curves)])
        return path
    raise ValueError(f"unknown figure kind {kind!r}")
