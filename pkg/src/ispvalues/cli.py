"""Command-line entry point: one subcommand per experiment plus a generic p-value mode."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ISPValueError
from .estimators import Estimator, LogWeight, ObservedPoint, WeightedSample, report

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# key = value configuration


def read_config(path) -> dict:
    """Plain-text ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _overrides(args) -> dict:
    cfg = read_config(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg[k.strip()] = v.strip()
    return cfg


def _take(cfg: dict, key: str, cast, default):
    if key not in cfg:
        return default
    raw = cfg.pop(key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {raw!r}") from exc


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _no_leftovers(cfg: dict):
    if cfg:
        raise UsageError(f"unknown configuration keys: {', '.join(sorted(cfg))}")


# ---------------------------------------------------------------------------
# generic p-value mode


def read_draws_csv(path):
    """Parse a ``role,stat,log_w`` file.

    ``role`` is ``observed`` (exactly one row) or ``draw``. A comment line
    ``# normalized: false`` marks weights known only up to a constant.
    Returns ``(ObservedPoint, WeightedSample)``.
    """
    normalized = True
    observed = None
    stats, log_w = [], []
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            first = row[0].strip()
            if first.startswith("#"):
                text = ",".join(row).lstrip("#").strip().lower().replace(" ", "")
                if text.startswith("normalized:"):
                    flag = text.split(":", 1)[1]
                    if flag not in ("true", "false"):
                        raise ISPValueError(f"line {lineno}: normalized must be true or false")
                    normalized = flag == "true"
                continue
            cells = [c.strip() for c in row]
            if not header_seen:
                if cells != ["role", "stat", "log_w"]:
                    raise ISPValueError(f"line {lineno}: expected header role,stat,log_w")
                header_seen = True
                continue
            if len(cells) != 3:
                raise ISPValueError(f"line {lineno}: expected 3 fields, got {len(cells)}")
            role, s, lw = cells
            try:
                s_val, lw_val = float(s), float(lw)
            except ValueError:
                raise ISPValueError(f"line {lineno}: stat and log_w must be numbers") from None
            if math.isnan(s_val) or math.isnan(lw_val) or lw_val == math.inf:
                raise ISPValueError(f"line {lineno}: NaN or +inf is not allowed")
            if role == "observed":
                if observed is not None:
                    raise ISPValueError(f"line {lineno}: more than one observed row")
                observed = (s_val, lw_val)
            elif role == "draw":
                stats.append(s_val)
                log_w.append(lw_val)
            else:
                raise ISPValueError(f"line {lineno}: role must be observed or draw")
    if not header_seen:
        raise ISPValueError("line 1: missing header role,stat,log_w")
    if observed is None:
        raise ISPValueError("no observed row")
    obs = ObservedPoint(observed[0], LogWeight(observed[1], normalized))
    return obs, WeightedSample(np.array(stats), np.array(log_w), normalized)


def cmd_pvalue(args) -> str:
    obs, sample = read_draws_csv(args.input)
    rep = report(args.estimator, obs, sample, args.level)
    text = json.dumps(rep.to_dict())
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "pvalue.json").write_text(text + "\n")
    return text


# ---------------------------------------------------------------------------
# experiments


def _out(args, name: str) -> Path:
    return Path(args.out) if args.out else Path("runs") / name


def cmd_gaussian(args, which: str) -> str:
    from .experiments import gaussian as g

    cfg = _overrides(args)
    mus = _take(cfg, "mus", _floats, g.MUS)
    sigmas = _take(cfg, "sigmas", _floats, g.SIGMAS)
    ns = _take(cfg, "ns", _ints, (10, 1000))
    reps = args.replications or _take(cfg, "replications", int, 100_000)
    cfg.pop("replications", None)
    if args.n:
        ns = (args.n,)
    _no_leftovers(cfg)
    configs = tuple((mu, s, n) for mu in mus for s in sigmas for n in ns)
    out = _out(args, which)
    if which == "gaussian-mse":
        rows = g.run_gaussian_mse(configs, reps, args.seed, args.threads, out)
        worst = max(rows, key=lambda r: r.mse["p_hat_star"])
        return f"{len(rows)} configurations, {reps} replications each; largest p_hat* MSE {worst.mse['p_hat_star']:.3g} at mu={worst.mu:g} sigma={worst.sigma:g} n={worst.n}; wrote {out}"
    res = g.run_gaussian_cdf(configs, reps, args.seed, args.threads, out)
    bad = [(k, f) for k, reps_ in res.items() for f in ("p_hat_star", "p_tilde_star") if not reps_[f].valid]
    return f"{len(res)} configurations; corrected estimators flagged at {len(bad)} of {2 * len(res)}; wrote {out}"


def cmd_multitest(args) -> str:
    from .experiments.multitest import MultiTestConfig, run_multitest_sim

    cfg = _overrides(args)
    base = MultiTestConfig()
    kw = dict(
        n_tests=_take(cfg, "n_tests", int, base.n_tests),
        false_nulls=_take(cfg, "false_nulls", int, base.false_nulls),
        m=_take(cfg, "m", int, base.m),
        r=_take(cfg, "r", int, base.r),
        shift=_take(cfg, "shift", float, base.shift),
        theta=_take(cfg, "theta", float, base.theta),
        n_grid=_take(cfg, "n_grid", _ints, base.n_grid),
        alpha=_take(cfg, "alpha", float, base.alpha),
        repetitions=_take(cfg, "repetitions", int, base.repetitions),
    )
    if args.n:
        kw["n_grid"] = (args.n,)
    if args.replications:
        kw["repetitions"] = args.replications
    _no_leftovers(cfg)
    out = _out(args, "multitest")
    res = run_multitest_sim(MultiTestConfig(**kw), args.seed, args.threads, out)
    n = max(kw["n_grid"])
    return (
        f"n={n}: p_hat* mean correct {np.mean(res.correct['p_hat_star'][n]):.2f}, "
        f"total incorrect {int(res.incorrect['p_hat_star'][n].sum())}; "
        f"p_hat total incorrect {int(res.incorrect['p_hat'][n].sum())}; wrote {out}"
    )


def cmd_rasch(args) -> str:
    from .experiments.rasch import RaschSimConfig, _grid, run_rasch_ci
    from .proposals.tables import read_matrix_csv

    cfg = _overrides(args)
    base = RaschSimConfig()
    lo = _take(cfg, "grid_lo", float, base.grid[0])
    hi = _take(cfg, "grid_hi", float, base.grid[-1])
    step = _take(cfg, "grid_step", float, 0.02)
    mstep = _take(cfg, "mixture_step", float, 0.2)
    cov = _take(cfg, "covariates", str, None)
    kw = dict(
        theta_true=_take(cfg, "theta_true", float, base.theta_true),
        n_grid=_take(cfg, "n_grid", _ints, base.n_grid),
        replications=_take(cfg, "replications", int, base.replications),
        level=_take(cfg, "level", float, base.level),
        covariate_seed=_take(cfg, "covariate_seed", int, base.covariate_seed),
        grid=_grid(lo, hi, step),
        mixture_thetas=_grid(lo, hi, mstep),
    )
    if cov:
        kw["covariates"] = read_matrix_csv(cov).astype(float)
    if args.n:
        kw["n_grid"] = (args.n,)
    if args.replications:
        kw["replications"] = args.replications
    _no_leftovers(cfg)
    out = _out(args, "rasch-ci")
    res = run_rasch_ci(RaschSimConfig(**kw), args.seed, args.threads, out)
    parts = [
        f"n={n}: coverage corrected {res.coverage(n, 'corrected'):.3f} uncorrected {res.coverage(n, 'uncorrected'):.3f}"
        for n in kw["n_grid"]
    ]
    return "; ".join(parts) + f"; wrote {out}"


def cmd_table52(args) -> str:
    from .experiments.tables import run_structured_table

    cfg = _overrides(args)
    n = args.n or _take(cfg, "n", int, 100_000)
    cfg.pop("n", None)
    direct = args.replications or _take(cfg, "direct_draws", int, 1_000_000)
    cfg.pop("direct_draws", None)
    _no_leftovers(cfg)
    out = _out(args, "table52")
    res = run_structured_table(n, direct, seed=args.seed, threads=args.threads, out_dir=out)
    last = res.trajectories[0][-1]
    return (
        f"t(X)={res.observed_t[0]:g} exact p={res.exact_p:.5f} direct p={res.direct_p:.4f}+-{res.direct_se:.4f}; "
        f"n={last['n']}: p_tilde={last['p_tilde']:.4g} p_tilde*={last['p_tilde_star']:.4g}; wrote {out}"
    )


def cmd_finch(args) -> str:
    from .data import FINCH_MATRIX
    from .experiments.tables import run_finch
    from .proposals.tables import read_matrix_csv

    cfg = _overrides(args)
    n = args.n or _take(cfg, "n", int, 100_000)
    cfg.pop("n", None)
    path = _take(cfg, "matrix", str, None)
    _no_leftovers(cfg)
    matrix = read_matrix_csv(path) if path else FINCH_MATRIX
    out = _out(args, "finch")
    res = run_finch(n, args.seed, args.threads, out, matrix)
    pt = res.p_tilde
    return (
        f"t(X)={res.observed_t:.1f} p_tilde={pt.estimate:.3e}+-{pt.std_error:.1e} "
        f"p_tilde*={res.p_tilde_star.estimate:.3e} (n={n}); wrote {out}"
    )


def cmd_ppvalidity(args) -> str:
    from .experiments.pointprocess import PointProcessConfig, run_pointprocess_validity

    cfg = _overrides(args)
    base = PointProcessConfig()
    kw = dict(
        delta=_take(cfg, "delta", int, base.delta),
        length=_take(cfg, "length", int, base.length),
        rate=_take(cfg, "rate", float, base.rate),
        n=_take(cfg, "n", int, base.n),
        replications=_take(cfg, "replications", int, base.replications),
        strength=_take(cfg, "strength", float, base.strength),
        alphas=_take(cfg, "alphas", _floats, base.alphas),
    )
    if args.n:
        kw["n"] = args.n
    if args.replications:
        kw["replications"] = args.replications
    _no_leftovers(cfg)
    out = _out(args, "ppvalidity")
    reps = run_pointprocess_validity(PointProcessConfig(**kw), args.seed, args.threads, out)
    ok = all(r.valid for (sign, name), r in reps.items() if name == "p_hat_star")
    return f"p_hat* {'valid' if ok else 'VIOLATION'} at all levels for t+ and t- ({kw['replications']} replications); wrote {out}"


def cmd_lemma1(args) -> str:
    from .oracle import lemma1_check, random_lemma1_instance
    from .parallel import chunk_rng

    rng = chunk_rng(args.seed, "lemma1", 0)
    total = args.instances
    held = sum(lemma1_check(*random_lemma1_instance(rng))[1] for _ in range(total))
    if held != total:
        raise ISPValueError(f"{held}/{total} hold")
    return f"{held}/{total} hold"


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ispvalues", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, n_help="Monte Carlo sample size", reps_help="replication count"):
        sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
        sp.add_argument("--out", help="output directory (default runs/<command>)")
        sp.add_argument("--n", type=int, help=n_help)
        sp.add_argument("--replications", type=int, help=reps_help)
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one configuration key")

    sp = sub.add_parser("pvalue", help="estimate a p-value from a CSV of weighted draws")
    sp.add_argument("input", help="CSV with columns role,stat,log_w")
    sp.add_argument("--estimator", default="p_tilde_star", choices=[e.value for e in Estimator])
    sp.add_argument("--level", type=float, help="confidence level for wald_upper")
    sp.add_argument("--out", help="also write pvalue.json here")

    common(sub.add_parser("gaussian-mse", help="MSE table for Gaussian proposals"))
    common(sub.add_parser("gaussian-cdf", help="null CDFs for Gaussian proposals"))
    common(sub.add_parser("multitest", help="Bonferroni permutation-test simulation"), "single n to run", "repetitions")
    common(sub.add_parser("rasch-ci", help="confidence-interval coverage for a covariate effect"), "single n to run")
    common(sub.add_parser("table52", help="structured 52 x 102 table"), "importance draws", "direct-sampling draws")
    common(sub.add_parser("finch", help="co-occurrence test on the finch matrix"), "importance draws")
    common(sub.add_parser("ppvalidity", help="null validity for spike-train tests"))
    sp = sub.add_parser("lemma1", help="check the weighted-rank inequality on random instances")
    sp.add_argument("--instances", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    return p


COMMANDS = {
    "pvalue": cmd_pvalue,
    "gaussian-mse": lambda a: cmd_gaussian(a, "gaussian-mse"),
    "gaussian-cdf": lambda a: cmd_gaussian(a, "gaussian-cdf"),
    "multitest": cmd_multitest,
    "rasch-ci": cmd_rasch,
    "table52": cmd_table52,
    "finch": cmd_finch,
    "ppvalidity": cmd_ppvalidity,
    "lemma1": cmd_lemma1,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be positive")
        line = COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ISPValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(line)
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())
