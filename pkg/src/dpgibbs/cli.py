"""Command-line surface: release, infer, regress, simulate, summarize, validate.

Every subcommand is a deterministic function of its inputs and a single
--seed flag; there is no ambient entropy anywhere.  Exit codes: 0 on
success, 2 for usage problems, 3 for data validation failures, 4 for
numerical failures (including a failing validate run).
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import harness
from .augmented import run_augmented_chain
from .errors import ConfigurationError, NumericalError, ValidationError
from .gibbs import ConstraintMode, PriorSpec, SamplerConfig, run_chain
from .regression import RegPriors, ingest_and_rescale, release_regression, \
    run_regression_chain
from .release import Bounds, Budget, PrivateRelease, release, summarize
from .summary import hpd_interval, kde_mode
from .validation import run_validation

FORMAT_VERSION = 1

_EXIT_USAGE = 2
_EXIT_DATA = 3
_EXIT_NUMERIC = 4


def _write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read_single_column_csv(path: str) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cell = line.split(",")[0].strip()
            try:
                values.append(float(cell))
            except ValueError:
                if lineno == 0:
                    continue  # header row
                raise ValidationError(f"non-numeric value {cell!r} on line {lineno + 1}")
    if not values:
        raise ValidationError(f"no numeric rows found in {path}")
    return np.asarray(values)


def _read_xy_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) < 2:
                raise ValidationError(f"need x,y columns on line {lineno + 1}")
            try:
                xs.append(float(cells[0]))
                ys.append(float(cells[1]))
            except ValueError:
                if lineno == 0:
                    continue
                raise ValidationError(f"non-numeric row on line {lineno + 1}")
    if not xs:
        raise ValidationError(f"no numeric rows found in {path}")
    return np.asarray(xs), np.asarray(ys)


def _read_draws_csv(path: str) -> dict[str, np.ndarray]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise ValidationError(f"{path} holds no draws")
    header = [h.strip() for h in lines[0].split(",")]
    cols = {h: [] for h in header}
    for ln in lines[1:]:
        for h, cell in zip(header, ln.split(",")):
            cols[h].append(float(cell))
    return {h: np.asarray(v) for h, v in cols.items()}


def _load_prior(source: str) -> PriorSpec:
    if source == "flat":
        return PriorSpec.flat()
    try:
        obj = json.loads(Path(source).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"prior file {source!r} not found")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed prior JSON: {exc}")
    kind = obj.get("kind")
    if kind == "flat":
        return PriorSpec.flat()
    if kind == "nig":
        try:
            return PriorSpec.conjugate(float(obj["mu0"]), float(obj["kappa0"]),
                                       float(obj["nu0"]), float(obj["sigma0_sq"]))
        except KeyError as exc:
            raise ValidationError(f"prior file missing field {exc}")
    raise ValidationError(f"prior kind must be 'flat' or 'nig', got {kind!r}")


def _format_draws_csv(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    length = len(next(iter(columns.values())))
    lines = [f"# format_version={FORMAT_VERSION}", "t," + ",".join(names)]
    for t in range(length):
        cells = ",".join(f"{columns[name][t]:.17g}" for name in names)
        lines.append(f"{t},{cells}")
    return "\n".join(lines) + "\n"


def cmd_release(args) -> int:
    data = _read_single_column_csv(args.data)
    bounds = Bounds(args.lower, args.upper)
    summary = summarize(data, bounds)
    rng = np.random.default_rng(args.seed)
    rel = release(summary, bounds, Budget(args.eps1, args.eps2), rng)
    _write_text(args.out, rel.to_json() + "\n")
    return 0


def cmd_infer(args) -> int:
    rel = PrivateRelease.from_json(Path(args.release).read_text())
    prior = _load_prior(args.prior)
    config = SamplerConfig(iters=args.iters, seed=args.seed,
                           burn_in=args.burn_in, thin=args.thin)
    if args.sampler == "likelihood":
        draws = run_augmented_chain(rel, args.constrained, config, prior=prior)
    else:
        mode = (ConstraintMode.MOMENT_CONSTRAINED if args.constrained
                else ConstraintMode.UNCONSTRAINED)
        draws = run_chain(rel, prior, mode, config,
                          force_sigma_constraint=args.force_sigma_constraint)
    w = rel.bounds.width
    a = rel.bounds.a
    _write_text(args.out, _format_draws_csv({
        "mu": a + w * draws.mu,
        "sigma_sq": w * w * draws.sigma_sq,
        "ybar": a + w * draws.ybar,
        "s_sq": w * w * draws.s_sq,
    }))
    return 0


def cmd_regress(args) -> int:
    x, y = _read_xy_csv(args.data)
    data = ingest_and_rescale(x, y)
    if args.prior is None:
        priors = RegPriors.default()
    else:
        try:
            obj = json.loads(Path(args.prior).read_text())
            priors = RegPriors(mu0=np.asarray(obj["mu0"], dtype=float),
                               lambda0=np.asarray(obj["lambda0"], dtype=float),
                               a0=float(obj["a0"]), b0=float(obj["b0"]))
        except FileNotFoundError:
            raise ValidationError(f"prior file {args.prior!r} not found")
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise ValidationError(f"malformed regression prior: {exc}")
    rng = np.random.default_rng(args.seed)
    rel = release_regression(data, args.eps_per_query, rng)
    chain_seed = int(np.random.SeedSequence((args.seed, 1)).generate_state(1)[0])
    config = SamplerConfig(iters=args.iters, seed=chain_seed, burn_in=args.burn_in)
    draws = run_regression_chain(rel, priors, args.constrained, config)
    _write_text(args.out, _format_draws_csv({
        "theta0": draws.theta0,
        "theta1": draws.theta1,
        "sigma_sq": draws.sigma_sq,
    }))
    return 0


def _scenario_from_dict(obj: dict) -> harness.Scenario:
    prior_obj = obj.get("prior", {"kind": "flat"})
    if prior_obj.get("kind") == "nig":
        prior = PriorSpec.conjugate(float(prior_obj["mu0"]), float(prior_obj["kappa0"]),
                                    float(prior_obj["nu0"]), float(prior_obj["sigma0_sq"]))
    else:
        prior = PriorSpec.flat()
    try:
        return harness.Scenario(
            n=int(obj["n"]),
            eps1=float(obj["eps1"]),
            eps2=float(obj["eps2"]),
            truth_mu=float(obj["truth_mu"]),
            truth_sigma=float(obj["truth_sigma"]),
            mode=str(obj.get("mode", "unconstrained")),
            prior=prior,
            reps=int(obj["reps"]),
            iters=int(obj["iters"]),
            base_seed=int(obj["base_seed"]),
        )
    except KeyError as exc:
        raise ValidationError(f"scenario missing field {exc}")


def cmd_simulate(args) -> int:
    if args.grid == "fig2":
        text = resources.files("dpgibbs").joinpath("presets/fig2.json").read_text()
    else:
        try:
            text = Path(args.grid).read_text()
        except FileNotFoundError:
            raise ValidationError(f"grid file {args.grid!r} not found")
    obj = json.loads(text)
    raw = obj["scenarios"] if isinstance(obj, dict) else obj
    if not raw:
        raise ConfigurationError("scenario grid is empty")
    scenarios = [_scenario_from_dict(o) for o in raw]
    if args.paper_scale:
        scenarios = [harness.paper_scale(s) for s in scenarios]
    csv = harness.run_grid(scenarios, parallelism=args.parallelism)
    _write_text(args.out, csv)
    return 0


def cmd_summarize(args) -> int:
    cols = _read_draws_csv(args.draws)
    if args.column not in cols:
        raise ValidationError(
            f"column {args.column!r} not in {sorted(cols)}"
        )
    x = cols[args.column]
    interval = hpd_interval(x, args.mass)
    report = {
        "format_version": FORMAT_VERSION,
        "column": args.column,
        "mode": kde_mode(x),
        "hpd_lo": interval.lo,
        "hpd_hi": interval.hi,
        "mean": float(x.mean()),
        "sd": float(x.std(ddof=1)),
    }
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_validate(args) -> int:
    report = run_validation(inject_fault=args.inject_fault)
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return 0 if report["passed"] else _EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpgibbs",
        description="Differentially private Gaussian releases and "
                    "constraint-aware Bayesian inference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("release", help="noise a single-column CSV into a release JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--lower", type=float, required=True)
    p.add_argument("--upper", type=float, required=True)
    p.add_argument("--eps1", type=float, required=True)
    p.add_argument("--eps2", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_release)

    p = sub.add_parser("infer", help="posterior draws from a release JSON")
    p.add_argument("--release", required=True)
    p.add_argument("--prior", default="flat",
                   help="'flat' or a prior JSON file (original data scale)")
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--sampler", choices=("moment", "likelihood"), default="moment")
    p.add_argument("--iters", type=int, default=20_000)
    p.add_argument("--burn-in", type=int, default=None, dest="burn_in")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--force-sigma-constraint", action="store_true",
                   dest="force_sigma_constraint")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("regress", help="noisy-statistic regression draws from x,y CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--prior", default=None, help="regression prior JSON")
    p.add_argument("--eps-per-query", type=float, required=True, dest="eps_per_query")
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--burn-in", type=int, default=None, dest="burn_in")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("simulate", help="run a scenario grid to a results CSV")
    p.add_argument("--grid", required=True, help="grid JSON path or 'fig2'")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--paper-scale", action="store_true", dest="paper_scale")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("summarize", help="HPD/mode/moments of a draws CSV column")
    p.add_argument("--draws", required=True)
    p.add_argument("--column", default="mu")
    p.add_argument("--mass", type=float, default=0.95)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("validate", help="run the numerical check suite")
    p.add_argument("--out", default="-")
    p.add_argument("--inject-fault", action="store_true", dest="inject_fault",
                   help=argparse.SUPPRESS)  # test hook
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
