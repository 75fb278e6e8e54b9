"""Command-line entry point.

Subcommands: gen-data, train, attack, eval, sweep, calib, figure. Options
may come from a JSON config file (--config); explicit flags win. Every
artifact-producing command writes a run manifest next to its outputs.
Exit codes: 0 success, 1 usage error, 2 runtime/numeric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationReport, calibration_report
from .data import DataConfig, generate, load, save
from .evaluation import SweepConfig, emit_figure_data, emit_table, evaluate, run_sweep
from .losses import Family, SurrogateSpec
from .risk import AlphaGrid
from .training import AttackConfig, AttackMethod, RejectClassifier, TrainConfig, \
    adversarial_training, make_adversarial_dataset, sgd_train

_LOSS_CHOICES = {
    "dsl": Family.DOUBLE_SIGMOID,
    "drl": Family.DOUBLE_RAMP,
    "logistic": Family.LOGISTIC,
    "hinge": Family.HINGE,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def save_model(clf: RejectClassifier, loss: SurrogateSpec, seed: int, path) -> Path:
    path = Path(path)
    payload = {
        "w": [float(v) for v in clf.w],
        "b": float(clf.b),
        "rho": float(clf.rho),
        "loss_config": {
            "family": loss.family.value, "d": loss.d, "rho": loss.rho,
            "mu": loss.mu, "beta": loss.beta, "gamma": loss.gamma,
        },
        "seed": seed,
    }
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def load_model(path) -> tuple[RejectClassifier, SurrogateSpec, int]:
    payload = json.loads(Path(path).read_text())
    lc = payload["loss_config"]
    spec = SurrogateSpec(family=Family(lc["family"]), d=lc["d"], rho=lc["rho"],
                         mu=lc["mu"], beta=lc["beta"], gamma=lc["gamma"])
    clf = RejectClassifier(w=np.asarray(payload["w"], dtype=float),
                           b=payload["b"], rho=payload["rho"])
    return clf, spec, payload["seed"]


def _write_manifest(out_dir: Path, command: str, options: dict, outputs: list,
                    seeds: list, t0: float) -> Path:
    manifest = {
        "command": command,
        "options": options,
        "seeds": seeds,
        "library_version": __version__,
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.monotonic() - t0, 6),
    }
    path = out_dir / f"{command}-manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _options_dict(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    out = {}
    for k, v in vars(args).items():
        if k in skip:
            continue
        if isinstance(v, Family):
            v = v.value
        elif isinstance(v, Path):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def _add_train_flags(p: argparse.ArgumentParser):
    p.add_argument("--lr", type=float, default=0.1, help="SGD learning rate")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--rho-init", type=float, default=0.5)
    p.add_argument("--w-init", choices=["seeded-gaussian", "zeros"], default="seeded-gaussian")


def _cmd_gen_data(args) -> int:
    t0 = time.monotonic()
    cfg = DataConfig(
        reject_band_halfwidth=args.reject_band_halfwidth,
        n_reject_per_class=args.n_reject_per_class,
        n_outer_per_class=args.n_outer_per_class,
        flip_fraction=args.flip_fraction,
        test_scale=args.test_scale,
        seed=args.seed,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test = generate(cfg)
    outputs = [save(train, out_dir / "train.csv"), save(test, out_dir / "test.csv")]
    outputs.append(_write_manifest(out_dir, "gen-data", _options_dict(args), outputs,
                                   [args.seed], t0))
    print(f"wrote {len(train)} train / {len(test)} test points to {out_dir}")
    return 0


def _loss_from_args(args, beta: float) -> SurrogateSpec:
    return SurrogateSpec(family=_LOSS_CHOICES[args.loss], d=args.d, rho=args.rho_init,
                         mu=args.mu, beta=beta, gamma=args.gamma_train)


def _cmd_train(args) -> int:
    t0 = time.monotonic()
    train = load(args.train_csv)
    base = _loss_from_args(args, beta=0.0)
    shifted = _loss_from_args(args, beta=args.beta)
    common = dict(learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
                  seed=args.seed, rho_init=args.rho_init, w_init=args.w_init)
    if args.gamma_train == 0.0 and args.beta == 0.0:
        clf = sgd_train(train, TrainConfig(loss=base, **common))
    else:
        atk = AttackConfig(gamma=args.gamma_train, method=AttackMethod(args.attack_method),
                           pga_steps=args.pga_steps, pga_step_size=args.pga_step_size)
        clf = adversarial_training(train, TrainConfig(loss=base, **common),
                                   TrainConfig(loss=shifted, **common), atk)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    outputs = [save_model(clf, shifted, args.seed, out)]
    outputs.append(_write_manifest(out.parent, "train", _options_dict(args), outputs,
                                   [args.seed], t0))
    print(f"model written to {out} (w={clf.w.tolist()}, b={clf.b:.6g}, rho={clf.rho:.6g})")
    return 0


def _cmd_attack(args) -> int:
    t0 = time.monotonic()
    clf, spec, _ = load_model(args.model)
    ds = load(args.data_csv)
    atk = AttackConfig(gamma=args.gamma, method=AttackMethod(args.method),
                       pga_steps=args.pga_steps, pga_step_size=args.pga_step_size)
    adv = make_adversarial_dataset(ds, clf, atk, spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    outputs = [save(adv, out)]
    outputs.append(_write_manifest(out.parent, "attack", _options_dict(args), outputs,
                                   [ds.seed], t0))
    print(f"attacked dataset written to {out}")
    return 0


def _cmd_eval(args) -> int:
    t0 = time.monotonic()
    clf, spec, _ = load_model(args.model)
    test = load(args.test_csv)
    d = spec.d if args.d is None else args.d
    err, acc, rr = evaluate(clf, test, d, args.gamma_test)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = {"err": err, "acc": acc, "rr": rr, "d": d, "gamma_test": args.gamma_test,
               "n_points": len(test)}
    out.write_text(json.dumps(payload, indent=2) + "\n")
    outputs = [out, _write_manifest(out.parent, "eval", _options_dict(args), [out],
                                    [test.seed], t0)]
    print(f"err={err:.4f} acc={acc:.4f} rr={rr:.4f} -> {outputs[0]}")
    return 0


def _cmd_sweep(args) -> int:
    t0 = time.monotonic()
    cfg = SweepConfig(
        loss_family=_LOSS_CHOICES[args.loss], mu=args.mu,
        d_list=args.d_list, beta_list=args.beta_list,
        gamma_train_list=args.gamma_train_list, gamma_test_list=args.gamma_test_list,
        n_runs=args.runs, base_seed=args.base_seed,
        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
        rho_init=args.rho_init, w_init=args.w_init,
        fresh_data_per_run=not args.fixed_data,
    )
    table = run_sweep(cfg, jobs=args.jobs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = [emit_table(table, out_dir / "sweep.csv", "csv"),
               emit_table(table, out_dir / "sweep.md", "markdown")]
    seeds = [cfg.base_seed + r for r in range(cfg.n_runs)]
    outputs.append(_write_manifest(out_dir, "sweep", _options_dict(args), outputs,
                                   seeds, t0))
    print(f"{len(table.rows)} rows -> {outputs[0]}"
          + (f" ({len(table.failures)} diverged runs excluded)" if table.failures else ""))
    return 0


def _report_payload(report: CalibrationReport) -> dict:
    def cond(c):
        d = dataclasses.asdict(c)
        d["region_lhs"] = list(c.region_lhs)
        return d
    return {
        "overall": report.overall,
        "eta_half": cond(report.eta_half_result),
        "eta_gt_half": [cond(c) for c in report.results],
        "violations": [c.eta for c in (report.eta_half_result, *report.results)
                       if not c.satisfied],
        "params": None if report.params is None else {
            "family": report.params.family.value, "d": report.params.d,
            "rho": report.params.rho, "mu": report.params.mu,
            "beta": report.params.beta, "gamma": report.params.gamma,
        },
        "xi_offsets": list(report.xi_offsets),
        "notes": report.notes,
    }


def _cmd_calib(args) -> int:
    t0 = time.monotonic()
    spec = SurrogateSpec(family=_LOSS_CHOICES[args.loss], d=args.d, rho=args.rho,
                         mu=args.mu, beta=args.beta, gamma=args.gamma)
    grid = AlphaGrid(-args.x_norm, args.x_norm, args.grid_n)
    report = calibration_report(spec, args.etas, x_norm=args.x_norm, grid=grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(_report_payload(report), indent=2) + "\n")
    outputs = [out, _write_manifest(out.parent, "calib", _options_dict(args), [out], [], t0)]
    status = "calibrated" if report.overall else "NOT calibrated"
    print(f"{args.loss} mu={args.mu} beta={args.beta}: {status} -> {outputs[0]}")
    return 0


def _cmd_figure(args) -> int:
    t0 = time.monotonic()
    params: dict = {"d": args.d, "rho": args.rho, "gamma": args.gamma}
    if args.kind in ("risk-vs-beta", "risk-vs-eta"):
        if args.family is None:
            raise ValueError(f"--family is required for kind {args.kind}")
        params.update(family=_LOSS_CHOICES[args.family].value, mu=args.mu,
                      grid=AlphaGrid(-args.x_norm, args.x_norm, args.grid_n))
        if args.kind == "risk-vs-beta":
            params.update(eta=args.eta, betas=args.betas)
        else:
            params.update(beta=args.beta, etas=args.etas)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_figure_data(args.kind, params, out)
    outputs = [out, _write_manifest(out.parent, "figure", _options_dict(args), [out], [], t0)]
    print(f"figure data -> {outputs[0]}")
    return 0


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="robust-reject",
                     description="adversarially robust reject-option classification")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON file of option defaults; explicit flags win")
        p.set_defaults(func=func)
        parsers[name] = p
        return p

    p = add("gen-data", _cmd_gen_data, "generate the synthetic train/test pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--reject-band-halfwidth", type=float, default=0.25)
    p.add_argument("--n-reject-per-class", type=int, default=100)
    p.add_argument("--n-outer-per-class", type=int, default=200)
    p.add_argument("--flip-fraction", type=float, default=0.05)
    p.add_argument("--test-scale", type=float, default=0.5)

    p = add("train", _cmd_train, "train a (robust) linear reject-option classifier")
    p.add_argument("--train-csv", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("model.json"))
    p.add_argument("--loss", choices=sorted(_LOSS_CHOICES), default="dsl")
    p.add_argument("--mu", type=float, default=2.65)
    p.add_argument("--d", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma-train", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attack-method", choices=[m.value for m in AttackMethod],
                   default=AttackMethod.CLOSED_FORM.value)
    p.add_argument("--pga-steps", type=int, default=40)
    p.add_argument("--pga-step-size", type=float, default=None)
    _add_train_flags(p)

    p = add("attack", _cmd_attack, "write the perturbed version of a dataset")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data-csv", type=Path, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--method", choices=[m.value for m in AttackMethod],
                   default=AttackMethod.CLOSED_FORM.value)
    p.add_argument("--pga-steps", type=int, default=40)
    p.add_argument("--pga-step-size", type=float, default=None)
    p.add_argument("--out", type=Path, default=Path("attacked.csv"))

    p = add("eval", _cmd_eval, "evaluate a model under test-time attack")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--test-csv", type=Path, required=True)
    p.add_argument("--gamma-test", type=float, default=0.0)
    p.add_argument("--d", type=float, default=None, help="defaults to the model's d")
    p.add_argument("--out", type=Path, default=Path("metrics.json"))

    p = add("sweep", _cmd_sweep, "run the full experiment grid")
    p.add_argument("--loss", choices=sorted(_LOSS_CHOICES), default="dsl")
    p.add_argument("--mu", type=float, default=2.65)
    p.add_argument("--d-list", type=_floats, default=(0.2, 0.3, 0.4))
    p.add_argument("--beta-list", type=_floats, default=(0.0, 0.1, 0.15, 0.25))
    p.add_argument("--gamma-train-list", type=_floats, default=(0.0, 0.1, 0.2))
    p.add_argument("--gamma-test-list", type=_floats, default=(0.0, 0.1, 0.2))
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--base-seed", type=int, default=1000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fixed-data", action="store_true",
                   help="reuse one dataset across runs instead of fresh draws")
    p.add_argument("--out-dir", type=Path, default=Path("sweep-out"))
    _add_train_flags(p)

    p = add("calib", _cmd_calib, "check the calibration conditions numerically")
    p.add_argument("--loss", choices=sorted(_LOSS_CHOICES), default="dsl")
    p.add_argument("--mu", type=float, default=2.65)
    p.add_argument("--d", type=float, default=0.2)
    p.add_argument("--rho", type=float, default=0.55)
    p.add_argument("--beta", type=float, default=0.45)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--etas", type=_floats, default=(0.51, 0.54, 0.6, 0.75, 0.9, 1.0))
    p.add_argument("--x-norm", type=float, default=1.0)
    p.add_argument("--grid-n", type=int, default=4001)
    p.add_argument("--out", type=Path, default=Path("calibration-report.json"))

    p = add("figure", _cmd_figure, "emit CSV curve data for the analysis figures")
    p.add_argument("--kind", choices=["excess-target", "risk-vs-beta", "risk-vs-eta"],
                   required=True)
    p.add_argument("--d", type=float, default=0.2)
    p.add_argument("--rho", type=float, default=0.55)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--family", choices=sorted(_LOSS_CHOICES), default=None)
    p.add_argument("--mu", type=float, default=2.65)
    p.add_argument("--beta", type=float, default=0.45)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--betas", type=_floats, default=(0.0, 0.15, 0.3, 0.45, 0.6))
    p.add_argument("--etas", type=_floats, default=(0.5, 0.51, 0.54, 0.6))
    p.add_argument("--x-norm", type=float, default=1.0)
    p.add_argument("--grid-n", type=int, default=4001)
    p.add_argument("--out", type=Path, default=Path("figure.csv"))

    return parser, parsers


def _apply_config(args: argparse.Namespace, parsers: dict) -> argparse.Namespace:
    if getattr(args, "config", None) is None:
        return args
    overrides = json.loads(Path(args.config).read_text())
    sub = parsers[args.command]
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ValueError(f"config key {key!r} is not an option of {args.command!r}")
        if getattr(args, dest) == sub.get_default(dest):
            if isinstance(value, list):
                value = tuple(value)
            setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    parser, parsers = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, parsers)
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"robust-reject: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
