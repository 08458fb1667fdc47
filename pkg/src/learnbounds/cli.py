"""Command-line harness wiring datasets, models, bounds, and sweeps together.

Subcommands:
    gen-data       write a k-body dataset (CSV + JSON sidecar)
    fit            fit one model on a dataset file, emit a results row
    sweep          Figure-style grid over (k, model, seed), with aggregates
    bounds         learnability bounds: gravity closed form or generic rules
    kernel-coeffs  kernel coefficient tables with asymptote columns

Every command is deterministic given its flags; outputs are written to a
temporary file and renamed, so interrupted runs leave no partial files.  The
environment variable LEARNBOUNDS_OUT sets the default output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import gravity_data, kernels, regression
from .gravity_bound import gravity_bound_log
from .series import (
    AuxSeries,
    BivariateSeries,
    bivariate_chain_bound,
    chain_bound,
    gaussian_schedule,
    kernel_weighted_bound,
    monomial_bound,
    multivariate_bound,
    power_law_schedule,
    product_bound,
    univariate_bound,
)

__all__ = ["SweepConfig", "run_sweep", "main", "MODELS", "RESULT_COLUMNS"]

MODELS = ("modified-relu-kernel", "relu-net", "relu-bias-net", "exp-net")
# Stable per-model tags mixed into weight seeds, so adding a model never
# perturbs another model's draw.
_MODEL_TAGS = {name: i + 1 for i, name in enumerate(MODELS)}

RESULT_COLUMNS = (
    "k",
    "model",
    "kernel",
    "n_train",
    "n_test",
    "width",
    "seed",
    "rmse",
    "normalized_rmse",
    "rmse_std",
    "normalized_rmse_std",
    "complexity",
    "lambda0",
)

_SQRT2 = math.sqrt(2.0)


def _out_path(name: str) -> str:
    if os.path.isabs(name) or os.path.dirname(name):
        return name
    return os.path.join(os.environ.get("LEARNBOUNDS_OUT", "."), name)


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_rows(path: str, rows: list[dict]) -> None:
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c, "") for c in RESULT_COLUMNS})
    _atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# Model fitting shared by fit and sweep
# ---------------------------------------------------------------------------


def _kernel_from_name(name: str, width: int, sigma_sq: float, seed: int):
    if name == "modified-relu":
        return kernels.ModifiedReLUKernel()
    if name == "gaussian":
        return kernels.GaussianSphereKernel(radius=1.0)
    if name == "relu-mc":
        return kernels.MonteCarloKernel("relu", m=width, sigma_sq=sigma_sq, seed=seed)
    if name == "slow-decay":
        return kernels.SlowDecayKernel(s=2.0)
    raise ValueError(f"unknown kernel {name!r}")


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero feature vector")
    return X / norms


def _lift_rows(X: np.ndarray) -> np.ndarray:
    return np.hstack([X / _SQRT2, np.full((len(X), 1), 1.0 / _SQRT2)])


@dataclass
class _CellResult:
    rmse: float
    normalized_rmse: float
    complexity: float | None = None
    lambda0: float | None = None


def _fit_cell(
    model: str,
    Xtr: np.ndarray,
    ytr: np.ndarray,
    Xte: np.ndarray,
    yte: np.ndarray,
    width: int,
    sigma_sq: float,
    seed: int,
    kernel_name: str = "modified-relu",
    normalize_inputs: bool = False,
) -> _CellResult:
    if normalize_inputs:
        Xtr = _normalize_rows(Xtr)
        Xte = _normalize_rows(Xte)
    if model == "modified-relu-kernel":
        kern = _kernel_from_name(kernel_name, width, sigma_sq, seed)
        if kernel_name in ("modified-relu", "slow-decay") and not normalize_inputs:
            raise ValueError(f"kernel {kernel_name!r} requires --normalize-inputs")
        system = regression.gram(kern, Xtr)
        alpha = regression.solve_min_norm(system, ytr)
        pred = regression.predict(alpha, Xtr, kern, Xte)
        return _CellResult(
            rmse=regression.rmse(pred, yte),
            normalized_rmse=regression.normalized_rmse(pred, yte),
            complexity=regression.complexity(system, ytr),
            lambda0=system.lambda_min,
        )
    if model in ("relu-net", "relu-bias-net", "exp-net"):
        if model == "relu-bias-net":
            Xtr, Xte = _lift_rows(Xtr), _lift_rows(Xte)
        activation = "exponential" if model == "exp-net" else "relu"
        weight_seed = gravity_data.mix_seed(seed, _MODEL_TAGS[model])
        net = regression.fit_random_feature_model(
            Xtr, ytr, width=width, activation=activation, sigma_sq=sigma_sq, seed=weight_seed
        )
        pred = net.predict(Xte)
        return _CellResult(
            rmse=regression.rmse(pred, yte),
            normalized_rmse=regression.normalized_rmse(pred, yte),
        )
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepConfig:
    """Grid for the error-versus-bodies experiment (desk-scale defaults)."""

    k_list: tuple[int, ...] = (5, 10, 20)
    n_train: int = 50_000
    n_test: int = 5_000
    models: tuple[str, ...] = ("relu-net", "relu-bias-net", "exp-net")
    width: int = 1000
    seeds: tuple[int, ...] = (0, 1, 2)
    sigma_sq: float = 1.0
    normalize_inputs: bool = False
    params: gravity_data.GravityParams = field(default_factory=gravity_data.GravityParams)

    def __post_init__(self) -> None:
        if not self.models:
            raise ValueError("models must be nonempty")
        for m in self.models:
            if m not in MODELS:
                raise ValueError(f"unknown model {m!r}; expected one of {MODELS}")
        if min(self.n_train, self.n_test, self.width) < 1 or not self.k_list or not self.seeds:
            raise ValueError("all sweep counts must be positive and lists nonempty")
        if any(k < 1 for k in self.k_list):
            raise ValueError("body counts must be >= 1")


def run_sweep(config: SweepConfig, log=lambda msg: None) -> list[dict]:
    """One results row per (k, model, seed), plus an aggregate row per (k, model).

    Each seed regenerates the dataset (shared by all models at that seed) and
    reseeds the hidden weights through the documented per-model mix, so cells
    are independent and any subset can be recomputed in isolation.
    """
    rows: list[dict] = []
    for k in sorted(config.k_list):
        per_model: dict[str, list[_CellResult]] = {m: [] for m in config.models}
        for seed in config.seeds:
            instances = gravity_data.sample_dataset(
                k, config.n_train + config.n_test, base_seed=seed, params=config.params
            )
            X, y = gravity_data.instances_to_arrays(instances)
            Xtr, ytr = X[: config.n_train], y[: config.n_train]
            Xte, yte = X[config.n_train :], y[config.n_train :]
            for model in config.models:
                cell = _fit_cell(
                    model,
                    Xtr,
                    ytr,
                    Xte,
                    yte,
                    width=config.width,
                    sigma_sq=config.sigma_sq,
                    seed=seed,
                    normalize_inputs=config.normalize_inputs,
                )
                per_model[model].append(cell)
                log(f"k={k} model={model} seed={seed}: nrmse={cell.normalized_rmse:.5f}")
        for model in config.models:
            cells = per_model[model]
            for seed, cell in zip(config.seeds, cells):
                rows.append(_result_row(k, model, config, seed, cell))
            agg_rmse = np.array([c.rmse for c in cells])
            agg_nrmse = np.array([c.normalized_rmse for c in cells])
            rows.append(
                {
                    "k": k,
                    "model": model,
                    "kernel": _model_kernel_label(model),
                    "n_train": config.n_train,
                    "n_test": config.n_test,
                    "width": config.width,
                    "seed": "agg",
                    "rmse": float(agg_rmse.mean()),
                    "normalized_rmse": float(agg_nrmse.mean()),
                    "rmse_std": float(agg_rmse.std(ddof=0)),
                    "normalized_rmse_std": float(agg_nrmse.std(ddof=0)),
                }
            )
    rows.sort(key=lambda r: (r["k"], r["model"], str(r["seed"])))
    return rows


def _model_kernel_label(model: str) -> str:
    return {
        "modified-relu-kernel": "modified-relu",
        "relu-net": "relu-nngp",
        "relu-bias-net": "modified-relu",
        "exp-net": "gaussian",
    }[model]


def _result_row(k: int, model: str, config: SweepConfig, seed, cell: _CellResult) -> dict:
    row = {
        "k": k,
        "model": model,
        "kernel": _model_kernel_label(model),
        "n_train": config.n_train,
        "n_test": config.n_test,
        "width": config.width,
        "seed": seed,
        "rmse": cell.rmse,
        "normalized_rmse": cell.normalized_rmse,
    }
    if cell.complexity is not None:
        row["complexity"] = cell.complexity
    if cell.lambda0 is not None:
        row["lambda0"] = cell.lambda0
    return row


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_gen_data(args) -> int:
    params = gravity_data.GravityParams(min_dist=args.min_dist, mass_max=args.mass_max)
    instances = gravity_data.sample_dataset(args.bodies, args.examples, args.seed, params)
    out = _out_path(args.out)
    gravity_data.write_dataset(instances, out)
    gravity_data.write_metadata(instances, out + ".meta.json", args.seed, params)
    print(f"wrote {len(instances)} examples to {out}")
    return 0


def _split_dataset(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    instances = gravity_data.read_dataset(path)
    if len(instances) < 10:
        raise ValueError(f"dataset {path} has {len(instances)} rows; need at least 10 to split")
    X, y = gravity_data.instances_to_arrays(instances)
    n_test = max(1, len(X) // 10)  # last 10 percent is the held-out split
    return X[:-n_test], y[:-n_test], X[-n_test:], y[-n_test:]


def _cmd_fit(args) -> int:
    Xtr, ytr, Xte, yte = _split_dataset(args.data)
    if args.model == "kernel":
        model_name = "modified-relu-kernel"
        model_label = "kernel"
        kernel_label = args.kernel
    else:
        if args.lift:
            model_name = "relu-bias-net"
        else:
            model_name = "exp-net" if args.activation == "exp" else "relu-net"
        model_label = model_name
        kernel_label = _model_kernel_label(model_name)
    cell = _fit_cell(
        model_name,
        Xtr,
        ytr,
        Xte,
        yte,
        width=args.width,
        sigma_sq=args.sigma_sq,
        seed=args.seed,
        kernel_name=args.kernel,
        normalize_inputs=args.normalize_inputs,
    )
    k = (Xtr.shape[1] // 4) - 1
    row = {
        "k": k,
        "model": model_label,
        "kernel": kernel_label,
        "n_train": len(Xtr),
        "n_test": len(Xte),
        "width": args.width,
        "seed": args.seed,
        "rmse": cell.rmse,
        "normalized_rmse": cell.normalized_rmse,
    }
    if cell.complexity is not None:
        row["complexity"] = cell.complexity
    if cell.lambda0 is not None:
        row["lambda0"] = cell.lambda0
    if args.out:
        _write_rows(_out_path(args.out), [row])
    print(json.dumps(row))
    return 0


def _cmd_sweep(args) -> int:
    config = SweepConfig(
        k_list=tuple(int(v) for v in args.bodies_list.split(",")),
        n_train=args.examples,
        n_test=args.test_examples,
        models=tuple(args.models.split(",")),
        width=args.width,
        seeds=tuple(int(v) for v in args.seeds.split(",")),
        sigma_sq=args.sigma_sq,
        normalize_inputs=args.normalize_inputs,
        params=gravity_data.GravityParams(min_dist=args.min_dist, mass_max=args.mass_max),
    )
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else (lambda msg: None)
    rows = run_sweep(config, log=log)
    out = _out_path(args.out)
    _write_rows(out, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _parse_coeffs(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _bounds_from_tree(node: dict):
    """Evaluate a one-level rule tree: a rule applied to explicit series."""
    rule = node.get("rule")
    if rule == "univariate":
        return univariate_bound(
            node["coeffs"], node["beta"], radius=node.get("radius", math.inf)
        )
    if rule == "monomial":
        return monomial_bound(node["betas"])
    if rule == "kernel-weighted":
        schedule = _schedule_from_name(node.get("schedule", "power-law"), node)
        return kernel_weighted_bound(node["coeffs"], node["beta"], schedule)
    if rule == "multivariate":
        return multivariate_bound([(t["a"], t["betas"]) for t in node["terms"]])
    if rule == "product":
        return product_bound(_series_from_node(node["left"]), _series_from_node(node["right"]))
    if rule == "chain":
        return chain_bound(_series_from_node(node["outer"]), _series_from_node(node["inner"]))
    if rule == "bivariate":
        f = BivariateSeries.from_coeffs(node["f"])
        return bivariate_chain_bound(
            f, _series_from_node(node["left"]), _series_from_node(node["right"])
        )
    raise ValueError(f"unknown rule {rule!r} in composition description")


def _series_from_node(node: dict) -> AuxSeries:
    return AuxSeries.from_coeffs(node["coeffs"], node.get("radius", math.inf))


def _schedule_from_name(name: str, node: dict):
    if name == "power-law":
        return power_law_schedule(node.get("s", 2.0))
    if name == "gaussian":
        return gaussian_schedule(node.get("radius", 1.0))
    raise ValueError(f"unknown schedule {name!r}")


def _cmd_bounds(args) -> int:
    if args.bound_kind == "gravity":
        penalty = gaussian_schedule(1.0) if args.kernel == "gaussian" else None
        report = gravity_bound_log(args.R, args.bodies, args.eps, kernel_penalty=penalty)
        doc = report.to_document(epsilon=args.eps)
    elif args.bound_kind == "univariate":
        report = univariate_bound(_parse_coeffs(args.coeffs), args.beta, radius=args.radius)
        doc = report.to_document(epsilon=args.eps)
    else:  # compose
        with open(args.file) as fh:
            tree = json.load(fh)
        report = _bounds_from_tree(tree)
        doc = report.to_document(epsilon=args.eps)
    text = json.dumps(doc, indent=2)
    if args.out:
        _atomic_write_text(_out_path(args.out), text + "\n")
    print(text)
    return 0


def _cmd_kernel_coeffs(args) -> int:
    if args.k_max > kernels.MAX_COEFFICIENTS:
        raise ValueError(f"--k-max exceeds the supported maximum {kernels.MAX_COEFFICIENTS}")
    ks = np.arange(args.k_max + 1)
    if args.kernel == "modified-relu":
        b, _ = kernels.modified_relu_coefficients(args.k_max)
        s, _ = kernels.modified_relu_angle_coefficients(args.k_max)
        # Rescaled columns divide each series by its k**-1.5 asymptote: the
        # angle factor tends to k**-1.5 / (2 sqrt(pi)), the kernel itself to
        # that divided by 2 pi (from the (t+1)/(4 pi) prefactor).
        with np.errstate(divide="ignore", invalid="ignore"):
            angle_rescaled = s * 2.0 * np.sqrt(np.pi) * ks**1.5
            kernel_rescaled = b * 4.0 * np.pi**1.5 * ks**1.5
        header = "k,b_k,angle_coeff,angle_rescaled,kernel_rescaled"
        lines = [header]
        for k in ks:
            lines.append(
                f"{k},{b[k]:.17g},{s[k]:.17g},{angle_rescaled[k]:.17g},{kernel_rescaled[k]:.17g}"
            )
    else:
        kern = _kernel_from_name(args.kernel, width=1, sigma_sq=1.0, seed=0)
        prefix = kern.coefficients(args.k_max)
        lines = ["k,b_k"]
        for k in ks:
            lines.append(f"{k},{prefix.values[k]:.17g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _atomic_write_text(_out_path(args.out), text)
        print(f"wrote {len(lines) - 1} coefficients to {_out_path(args.out)}")
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="learnbounds",
        description="Learnability bounds and the k-body force-learning benchmark",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a k-body dataset")
    p.add_argument("--bodies", "-k", type=int, required=True, help="number of source bodies")
    p.add_argument("--examples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-dist", type=float, default=0.1)
    p.add_argument("--mass-max", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("fit", help="fit one model on a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=("kernel", "net"), default="net")
    p.add_argument(
        "--kernel",
        choices=("modified-relu", "gaussian", "relu-mc", "slow-decay"),
        default="modified-relu",
    )
    p.add_argument("--activation", choices=("relu", "exp"), default="relu")
    p.add_argument("--lift", action="store_true", help="append the constant bias feature")
    p.add_argument("--width", type=int, default=1000)
    p.add_argument("--sigma-sq", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize-inputs", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sweep", help="error-versus-bodies sweep")
    p.add_argument("--bodies-list", default="5,10,20")
    p.add_argument("--examples", type=int, default=50_000)
    p.add_argument("--test-examples", type=int, default=5_000)
    p.add_argument("--models", default="relu-net,relu-bias-net,exp-net")
    p.add_argument("--width", type=int, default=1000)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--sigma-sq", type=float, default=1.0)
    p.add_argument("--min-dist", type=float, default=0.1)
    p.add_argument("--mass-max", type=float, default=10.0)
    p.add_argument("--normalize-inputs", action="store_true")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bounds", help="compute learnability bounds")
    bsub = p.add_subparsers(dest="bound_kind", required=True)
    pg = bsub.add_parser("gravity", help="closed-form k-body bound (log domain)")
    pg.add_argument("--R", type=float, required=True, help="distance ratio r_max/r_min")
    pg.add_argument("--bodies", "-k", type=int, required=True, dest="bodies")
    pg.add_argument("--eps", type=float, required=True)
    pg.add_argument("--kernel", choices=("modified-relu", "gaussian"), default="modified-relu")
    pg.add_argument("--out", default=None)
    pg.set_defaults(func=_cmd_bounds)
    pu = bsub.add_parser("univariate", help="beta g~'(beta) + g~(0) for explicit coefficients")
    pu.add_argument("--coeffs", required=True, help="comma-separated series coefficients")
    pu.add_argument("--beta", type=float, required=True)
    pu.add_argument("--radius", type=float, default=math.inf)
    pu.add_argument("--eps", type=float, default=0.1)
    pu.add_argument("--out", default=None)
    pu.set_defaults(func=_cmd_bounds)
    pc = bsub.add_parser("compose", help="rule applied to explicit series (JSON description)")
    pc.add_argument("--file", required=True)
    pc.add_argument("--eps", type=float, default=0.1)
    pc.add_argument("--out", default=None)
    pc.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("kernel-coeffs", help="kernel coefficient table")
    p.add_argument(
        "--kernel",
        choices=("modified-relu", "gaussian", "slow-decay"),
        default="modified-relu",
    )
    p.add_argument("--k-max", type=int, default=500)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_kernel_coeffs)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
