"""Command-line entry point: every experiment is a subcommand taking a JSON
config and emitting deterministic CSV/JSON artifacts into --out.

Flags select only the subcommand, config path, output dir, thread count,
seed override, and verbosity; everything structured (models, grids, rules)
lives in the config.  Exit codes: 0 ok, 2 config problem, 3 budget refusal,
4 internal failure.  A run that dies leaves a FAILED marker file next to
whatever partial artifacts it managed to write.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import kernels
from .arith import PrimeWindow, primes_up_to
from .densities import fit_delta_beta, sigma_table_from_dict
from .errors import BudgetError, ConfigError, OmegafibError
from .experiment import ExperimentConfig, exponent_regression, tail_count
from .fibration import model_from_dict
from .forms import parse_form
from .inequalities import (
    hardy_ramanujan_report,
    nair_tenenbaum_audit,
    norton_grid,
    radical_sum_check,
    truncated_moment_audit,
)
from .model import (
    BernoulliModel,
    exact_pmf,
    mgf_exact,
    moment_exact,
    pmf_with_overflow,
    rate_grid,
    sample,
)
from .reports import write_csv, write_json

_DEFAULT_MODEL = {
    "kind": "coin-model",
    "components": [{"form": "1 1 0", "rule": "always-nonsplit"}],
}

DEFAULTS = {
    "sieve": {"limit": 100000},
    "sigma": {
        "table": {"kind": "synthetic-delta", "delta": "1", "lo": 2, "T": 100000},
        "fit_grid": [100, 1000, 10000, 100000],
    },
    "model": {
        "probs": ["1/2", "1/2"],
        "cap": 2,
        "t_grid": [-1.0, 0.0, 0.5, 1.0],
        "r_max": 4,
        "mc_samples": 100000,
        "seed": 20260815,
    },
    "rate": {"x_grid": [-1.0, 0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0]},
    "experiment": {
        "model": _DEFAULT_MODEL,
        "B": [100, 1000],
        "epsilons": [0.5],
        "window": {"strategy": "full"},
        "loglog_floor": 1e-6,
        "seed": 20260815,
        "threads": 1,
    },
    "bounds": {
        "norton": {
            "x_grid": [0.5, 1, 2, 5, 10, 20, 50],
            "beta_grid": [1.01, 1.1, 1.5, 2, 4, 8],
        },
        "hardy_ramanujan": {"t_max": 5, "x_grid": [100, 10000, 1000000]},
        "radical": {"r_max": 3, "T": 100},
        "nair_tenenbaum": {
            "form": "1 1",
            "f_kind": "power",
            "C": 1.0,
            "B_grid": [100, 1000, 10000],
        },
        "truncated_moment": {
            "form": "1 1",
            "B": 10000,
            "C1": 2.0,
            "C2": 1.0,
            "y": 3.0,
            "N": 2.0,
        },
    },
    "report": {},
}

# top-level keys each subcommand consumes beyond its DEFAULTS; anything else
# in a user config is a typo and must not silently fall back to defaults
_EXTRA_KEYS = {
    "sieve": set(),
    "sigma": {"model"},
    "model": {"table", "model", "window"},
    "rate": set(),
    "experiment": {"enum_budget", "value_budget"},
    "bounds": set(),
    "report": set(),
}


def _merge(base, override):
    if isinstance(base, dict) and isinstance(override, dict):
        out = dict(base)
        for k, v in override.items():
            out[k] = _merge(base[k], v) if k in base else v
        return out
    return override


def _load_config(name: str, path: str | None) -> dict:
    cfg = DEFAULTS[name]
    if path is None:
        return json.loads(json.dumps(cfg))  # deep copy
    try:
        user = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s is not valid JSON: %s" % (path, exc)) from exc
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(user) - set(cfg) - _EXTRA_KEYS[name])
    if unknown:
        raise ConfigError(
            "unknown key(s) for '%s': %s (accepted: %s)"
            % (name, ", ".join(unknown), ", ".join(sorted(set(cfg) | _EXTRA_KEYS[name])))
        )
    return _merge(cfg, user)


# ---------------------------------------------------------------------------
# handlers


def _run_sieve(cfg, out, args):
    limit = int(cfg["limit"])
    ps = primes_up_to(limit)
    write_csv(out / "sieve_primes.csv", "sieve_primes", cfg, ["p"], ([int(p)] for p in ps))
    write_json(
        out / "sieve_summary.json",
        "sieve_summary",
        cfg,
        {"count": int(len(ps)), "largest": int(ps[-1]) if len(ps) else None,
         "limit": limit, "backend": kernels.backend()},
    )
    return ["sieve_primes.csv", "sieve_summary.json"]


def _run_sigma(cfg, out, args):
    model = model_from_dict(cfg["model"]) if "model" in cfg else None
    table = sigma_table_from_dict(cfg["table"], model)
    rows = (
        [int(p), int(a), int(b), float(a) / float(b)]
        for p, a, b in zip(table.primes, table.num, table.den)
    )
    write_csv(out / "sigma_table.csv", "sigma_table", cfg, ["p", "num", "den", "sigma"], rows)
    grid = [int(t) for t in cfg["fit_grid"]]
    delta_hat, beta_hat = fit_delta_beta(table, grid)
    write_json(
        out / "sigma_summary.json",
        "sigma_summary",
        cfg,
        {
            "provenance": table.provenance,
            "entries": int(len(table)),
            "window": [table.window.lo, table.window.hi],
            "delta_hat": delta_hat,
            "beta_hat": beta_hat,
            "fit_grid": grid,
        },
    )
    return ["sigma_table.csv", "sigma_summary.json"]


def _model_from_cfg(cfg) -> BernoulliModel:
    if "table" in cfg:
        model = model_from_dict(cfg["model"]) if "model" in cfg else None
        table = sigma_table_from_dict(cfg["table"], model)
        if "window" in cfg:
            lo, hi = cfg["window"]
            table = table.restrict(PrimeWindow(int(lo), None if hi is None else int(hi)))
        return BernoulliModel.from_table(table)
    return BernoulliModel.from_probs([Fraction(str(p)) for p in cfg["probs"]])


def _run_model(cfg, out, args):
    model = _model_from_cfg(cfg)
    cap = int(cfg["cap"])
    pmf, overflow = pmf_with_overflow(model, cap)
    write_csv(out / "model_pmf.csv", "model_pmf", cfg, ["k", "prob"], ([k, q] for k, q in enumerate(pmf)))
    write_csv(
        out / "model_mgf.csv", "model_mgf", cfg, ["t", "mgf"],
        ([t, mgf_exact(model, float(t))] for t in cfg["t_grid"]),
    )
    moments = [[r, float(moment_exact(model, r)), moment_exact(model, r)] for r in range(int(cfg["r_max"]) + 1)]
    write_csv(out / "model_moments.csv", "model_moments", cfg, ["r", "moment", "exact"], moments)
    seed = int(cfg["seed"])
    hist = sample(model, seed, int(cfg["mc_samples"]))
    write_json(
        out / "model_summary.json",
        "model_summary",
        cfg,
        {
            "n_probs": len(model),
            "pmf_overflow": overflow,
            "pmf_sum": math.fsum(pmf) + overflow,
            "mean": float(moment_exact(model, 1)),
            "mc_histogram": [int(c) for c in hist],
            "mc_samples": int(cfg["mc_samples"]),
            "seed": seed,
        },
    )
    return ["model_pmf.csv", "model_mgf.csv", "model_moments.csv", "model_summary.json"]


def _run_rate(cfg, out, args):
    rf = rate_grid([float(x) for x in cfg["x_grid"]])
    write_csv(out / "rate_curve.csv", "rate_curve", cfg, ["x", "I"], ([x, v] for x, v in rf.grid))
    write_json(
        out / "rate_summary.json",
        "rate_summary",
        cfg,
        {"grid": [[x, v] for x, v in rf.grid]},
    )
    return ["rate_curve.csv", "rate_summary.json"]


def _run_experiment(cfg, out, args):
    exp_cfg = ExperimentConfig.from_dict(cfg)
    report = tail_count(exp_cfg)
    exponents = exponent_regression(report)
    header = [
        "B", "epsilon", "mode", "total", "tail", "fraction",
        "log_fraction_norm", "threshold", "low_height", "clamped",
    ]
    rows = (
        [r.B, r.epsilon, r.mode, r.total, r.tail, r.fraction,
         r.log_fraction_norm, r.threshold, r.low_height, r.clamped]
        for r in report.rows
    )
    write_csv(out / "experiment_tail.csv", "experiment_tail", cfg, header, rows)
    body = report.to_dict()
    body.update(
        {
            "slopes": exponents.slopes,
            "candidates": exponents.candidates,
            "model_side": exponents.model_side,
            "notes": list(exponents.notes),
            "backend": kernels.backend(),
        }
    )
    write_json(out / "experiment_summary.json", "experiment_summary", cfg, body)
    return ["experiment_tail.csv", "experiment_summary.json"]


def _run_bounds(cfg, out, args):
    written = []
    verdicts = {}
    if "norton" in cfg:
        sec = cfg["norton"]
        rep = norton_grid(sec["x_grid"], sec["beta_grid"])
        write_csv(
            out / "bounds_norton.csv", "bounds_norton", cfg,
            ["x", "beta", "lhs", "rhs", "margin", "holds"],
            ([r.params["x"], r.params["beta"], r.lhs, r.rhs, r.margin, r.holds] for r in rep.rows),
        )
        verdicts["norton"] = rep.verdict
        written.append("bounds_norton.csv")
    if "hardy_ramanujan" in cfg:
        sec = cfg["hardy_ramanujan"]
        rep = hardy_ramanujan_report(int(sec["t_max"]), [int(x) for x in sec["x_grid"]])
        write_csv(
            out / "bounds_hardy_ramanujan.csv", "bounds_hardy_ramanujan", cfg,
            ["t", "x", "lhs", "rhs", "margin", "holds"],
            ([r.params["t"], r.params["x"], r.lhs, r.rhs, r.margin, r.holds] for r in rep.rows),
        )
        verdicts["hardy_ramanujan"] = rep.verdict
        written.append("bounds_hardy_ramanujan.csv")
    if "radical" in cfg:
        sec = cfg["radical"]
        rows = []
        ok = True
        for r in range(int(sec["r_max"]) + 1):
            exact, bound = radical_sum_check(r, int(sec["T"]))
            holds = float(exact) <= bound
            ok = ok and holds
            rows.append([r, int(sec["T"]), exact, bound, bound - float(exact), holds])
        write_csv(
            out / "bounds_radical.csv", "bounds_radical", cfg,
            ["r", "T", "lhs", "rhs", "margin", "holds"], rows,
        )
        verdicts["radical"] = "holds" if ok else "violated"
        written.append("bounds_radical.csv")
    if "nair_tenenbaum" in cfg:
        sec = cfg["nair_tenenbaum"]
        form = parse_form(sec["form"])
        rows = nair_tenenbaum_audit(
            form, [int(b) for b in sec["B_grid"]],
            f_kind=sec.get("f_kind", "power"),
            C=float(sec.get("C", 1.0)),
            decay=float(sec.get("decay", 1.0)),
        )
        write_csv(
            out / "bounds_nair_tenenbaum.csv", "bounds_nair_tenenbaum", cfg,
            ["B", "lhs", "rhs", "ratio"],
            ([r.B, r.lhs, r.rhs, r.ratio] for r in rows),
        )
        first = rows[0].ratio
        verdicts["nair_tenenbaum"] = (
            "bounded" if all(r.ratio <= 10.0 * first for r in rows) else "unbounded-trend"
        )
        written.append("bounds_nair_tenenbaum.csv")
    if "truncated_moment" in cfg:
        sec = cfg["truncated_moment"]
        res = truncated_moment_audit(
            parse_form(sec["form"]), int(sec["B"]),
            float(sec["C1"]), float(sec["C2"]), float(sec["y"]), float(sec.get("N", 2.0)),
        )
        write_csv(
            out / "bounds_truncated_moment.csv", "bounds_truncated_moment", cfg,
            ["B", "r0", "lhs", "reference", "N"],
            [[res.B, res.r0, res.lhs, res.reference, res.N]],
        )
        verdicts["truncated_moment"] = "recorded"
        written.append("bounds_truncated_moment.csv")
    write_json(out / "bounds_summary.json", "bounds_summary", cfg, {"verdicts": verdicts})
    written.append("bounds_summary.json")
    return written


def _run_report(cfg, out, args):
    merged = {}
    for path in sorted(out.glob("*_summary.json")):
        merged[path.stem] = json.loads(path.read_text(encoding="utf-8"))
    write_json(out / "report.json", "report", cfg, {"artifacts": merged})
    return ["report.json"]


_HANDLERS = {
    "sieve": _run_sieve,
    "sigma": _run_sigma,
    "model": _run_model,
    "rate": _run_rate,
    "experiment": _run_experiment,
    "bounds": _run_bounds,
    "report": _run_report,
}

_HELP = {
    "sieve": "emit prime tables (sieve_primes.csv: column p)",
    "sigma": "emit a sigma table and its growth fit (sigma_table.csv: p,num,den,sigma)",
    "model": "emit pmf/MGF/moment tables (model_pmf.csv: k,prob; model_mgf.csv: t,mgf)",
    "rate": "emit the rate-function grid (rate_curve.csv: x,I)",
    "experiment": "enumerate points and emit tail statistics (experiment_tail.csv)",
    "bounds": "run the inequality audits (bounds_*.csv: lhs,rhs,margin,holds)",
    "report": "merge *_summary.json artifacts in --out into report.json",
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="omegafib",
        description="Counting lab for locally insoluble fibers: densities, "
        "Poisson-binomial tails, and analytic bound audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", default=None, help="JSON config path (merged over defaults)")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--threads", type=int, default=None, help="worker threads for kernels")
        p.add_argument("--seed", type=int, default=None, help="seed override (64-bit)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    out = Path(args.out)
    marker = out / "FAILED"
    try:
        cfg = _load_config(args.command, args.config)
        if args.seed is not None:
            cfg["seed"] = int(args.seed)
        if args.threads is not None and "threads" in cfg:
            cfg["threads"] = int(args.threads)
        out.mkdir(parents=True, exist_ok=True)
        if marker.exists():
            marker.unlink()
        artifacts = _HANDLERS[args.command](cfg, out, args)
        if not args.quiet:
            for a in artifacts:
                print("wrote %s" % (out / a))
        return 0
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        # bare ValueError/TypeError/KeyError only escape while coercing
        # config values, so they are config problems, not internal bugs
        print("config error: %s" % exc, file=sys.stderr)
        _flag_failure(out, marker, exc)
        return 2
    except BudgetError as exc:
        print("budget refusal: %s" % exc, file=sys.stderr)
        _flag_failure(out, marker, exc)
        return 3
    except OmegafibError as exc:
        print("error: %s" % exc, file=sys.stderr)
        _flag_failure(out, marker, exc)
        return 4
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports everything
        print("internal error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        _flag_failure(out, marker, exc)
        return 4


def _flag_failure(out: Path, marker: Path, exc: BaseException) -> None:
    try:
        if out.is_dir():
            marker.write_text("%s: %s\n" % (type(exc).__name__, exc), encoding="utf-8")
    except OSError:
        pass


if __name__ == "__main__":
    sys.exit(main())
