"""Command-line front end: every experiment as a seed-pinned batch run.

Subcommands: ``bounds``, ``symmetry``, ``lan``, ``quadconv``, ``estimate``.
Values may come from a config file (one section per subcommand, flat
``key = value`` pairs); command-line flags override file values. Randomized
commands require an explicit 64-bit seed. Each output directory receives a
copy of the fully resolved configuration, and reruns with the same
configuration produce byte-identical CSV files.

Exit codes: 0 success, 2 validation error, 3 runtime/replicate error.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from . import estimators, infobounds, lanlab
from .corrmodels import CorrelationModel, domain_check, symmetry_condition
from .errors import CopulaBoundsError, DomainError
from .sampling import IDENTITY_MARGINS, MarginSpec

_RANDOMIZED = ("lan", "quadconv", "estimate")


def _parse_grid(spec: str, model: CorrelationModel) -> np.ndarray:
    try:
        lo_s, hi_s, count_s = spec.split(":")
        lo, hi, count = float(lo_s), float(hi_s), int(count_s)
    except ValueError:
        raise DomainError(f"grid must be lo:hi:count, got {spec!r}") from None
    if count < 2 or hi <= lo:
        raise DomainError("grid requires hi > lo and count >= 2")
    if model.family == "exchangeable":
        dlo, dhi = -1.0 / (model.p - 1), 1.0
    else:
        dlo, dhi = -1.0, 1.0
    lo = max(lo, dlo + 1e-3)
    hi = min(hi, dhi - 1e-3)
    return np.linspace(lo, hi, count)


def _parse_margins(spec: str) -> MarginSpec:
    if spec.startswith("affine:"):
        try:
            _, a_s, b_s = spec.split(":")
            return MarginSpec.uniform(("affine", float(a_s), float(b_s)))
        except ValueError:
            raise DomainError(f"affine margins must be affine:a:b, got {spec!r}") from None
    if spec in ("identity", "exponential", "logistic-quantile", "cube"):
        return MarginSpec.uniform(spec)
    raise DomainError(f"unknown margin transform {spec!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copulabounds",
        description="Information bounds and rank LAN experiments for Gaussian copulas",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp, needs_seed):
        sp.add_argument("--config", help="config file (section per subcommand)")
        sp.add_argument("--family",
                        choices=["exchangeable", "circular", "ar1", "unstructured"])
        sp.add_argument("--p", type=int)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--grid", help="theta grid as lo:hi:count")
        sp.add_argument("--regime", choices=["known", "equal", "unequal"])
        sp.add_argument("--n", help="sample size (quadconv: comma-separated list)")
        sp.add_argument("--reps", type=int)
        sp.add_argument("--seed", type=int, default=None,
                        help="64-bit master seed" + (" (required)" if needs_seed else ""))
        sp.add_argument("--margins", help="identity|exponential|logistic-quantile|cube|affine:a:b")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker cap; outputs are identical for any value")

    bounds = sub.add_parser("bounds", help="inverse-information bound curves as CSV")
    common(bounds, needs_seed=False)
    bounds.add_argument("--differences", action="store_true",
                        help="also emit per-regime bound differences")

    symm = sub.add_parser("symmetry", help="constant-diagonal condition verdicts")
    common(symm, needs_seed=False)

    lan = sub.add_parser("lan", help="Monte Carlo LAN experiment")
    common(lan, needs_seed=True)
    lan.add_argument("--s", type=float, default=None, help="copula direction (default 1.0)")

    quad = sub.add_parser("quadconv", help="quadratic-form convergence trend table")
    common(quad, needs_seed=True)
    quad.add_argument("--s", type=float, default=None, help="copula direction (default 1.0)")

    est = sub.add_parser("estimate", help="estimator benchmark against the bound")
    common(est, needs_seed=True)
    est.add_argument("--estimators", help="comma list: normal_scores,one_step")
    return parser


_CONFIG_KEYS = {
    "family": str,
    "p": int,
    "theta": float,
    "grid": str,
    "regime": str,
    "n": str,
    "reps": int,
    "seed": int,
    "margins": str,
    "out": str,
    "threads": int,
    "s": float,
    "estimators": str,
    "differences": lambda v: v.lower() in ("1", "true", "yes"),
}


def _merge_config(args: argparse.Namespace) -> dict:
    """File values first, then CLI flags override."""
    resolved: dict = {}
    if args.config:
        cp = configparser.ConfigParser()
        read = cp.read(args.config)
        if not read:
            raise DomainError(f"config file {args.config!r} not found")
        if cp.has_section(args.subcommand):
            for key, raw in cp.items(args.subcommand):
                if key not in _CONFIG_KEYS:
                    raise DomainError(f"unknown config key {key!r}")
                resolved[key] = _CONFIG_KEYS[key](raw)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            resolved[key] = val
    resolved["subcommand"] = args.subcommand
    return resolved


def _require(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise DomainError(f"missing required option(s): {', '.join('--' + m for m in missing)}")


def _model(cfg: dict) -> CorrelationModel:
    _require(cfg, "family", "p")
    return CorrelationModel(cfg["family"], cfg["p"])


def _outdir(cfg: dict) -> Path:
    _require(cfg, "out")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: dict, out: Path):
    cp = configparser.ConfigParser()
    section = cfg["subcommand"]
    cp.add_section(section)
    for key, val in sorted(cfg.items()):
        if key == "subcommand" or val is None:
            continue
        cp.set(section, key, str(val))
    with open(out / "resolved.cfg", "w") as fh:
        cp.write(fh)


def _margins(cfg: dict) -> MarginSpec:
    if cfg.get("margins") is None:
        return IDENTITY_MARGINS
    return _parse_margins(cfg["margins"])


def _cmd_bounds(cfg: dict) -> int:
    model = _model(cfg)
    _require(cfg, "grid")
    grid = _parse_grid(cfg["grid"], model)
    curve = infobounds.bound_curve(model, grid)
    out = _outdir(cfg)
    (out / "bounds.csv").write_text(curve.to_csv())
    if cfg.get("differences"):
        lines = ["theta,loss_equal_vs_known,loss_unequal_vs_equal"]
        for i, th in enumerate(grid):
            d1 = curve.inv_info["equal"][i] - curve.inv_info["known"][i]
            d2 = curve.inv_info["unequal"][i] - curve.inv_info["equal"][i]
            lines.append(f"{th:.17g},{d1:.17g},{d2:.17g}")
        (out / "differences.csv").write_text("\n".join(lines) + "\n")
    _echo_config(cfg, out)
    return 0


def _cmd_symmetry(cfg: dict) -> int:
    model = _model(cfg)
    if cfg.get("grid") is not None:
        grid = _parse_grid(cfg["grid"], model)
    elif cfg.get("theta") is not None:
        grid = np.array([cfg["theta"]])
    else:
        grid = infobounds.default_grid(model, count=21)
    lines = ["family,p,theta,parameter,satisfied,max_minus_min"]
    for th in grid:
        if not domain_check(model, th):
            raise DomainError(f"theta={th!r} outside the domain of {model.describe()}")
        from .corrmodels import correlation, gradient, precision

        b = precision(correlation(model, th))
        verdicts = symmetry_condition(model, th)
        for k, g in enumerate(gradient(model, th)):
            d = np.diag(b @ g)
            lines.append(
                f"{model.family},{model.p},{th:.17g},{k},"
                f"{str(bool(verdicts[k])).lower()},{d.max() - d.min():.17g}"
            )
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    if cfg.get("out") is not None:
        out = _outdir(cfg)
        (out / "symmetry.csv").write_text(table)
        _echo_config(cfg, out)
    return 0


def _cmd_lan(cfg: dict) -> int:
    model = _model(cfg)
    _require(cfg, "theta", "regime", "n", "reps", "seed")
    report = lanlab.mc_lan_experiment(
        model,
        cfg["theta"],
        cfg.get("s", 1.0),
        cfg["regime"],
        int(cfg["n"]),
        cfg["reps"],
        cfg["seed"],
        margins=_margins(cfg),
    )
    out = _outdir(cfg)
    (out / "lan_replicates.csv").write_text(report.replicates_csv())
    (out / "lan_summary.csv").write_text(report.summary_csv())
    _echo_config(cfg, out)
    return 0


def _cmd_quadconv(cfg: dict) -> int:
    model = _model(cfg)
    _require(cfg, "theta", "regime", "n", "reps", "seed")
    try:
        n_list = [int(v) for v in str(cfg["n"]).split(",")]
    except ValueError:
        raise DomainError(f"--n must be a comma list of integers, got {cfg['n']!r}") from None
    lines = ["n,median_abs_s_n,iqr_abs_s_n,median_abs_q_n,iqr_abs_q_n,median_abs_l_n,iqr_abs_l_n"]
    for n in n_list:
        report = lanlab.mc_lan_experiment(
            model, cfg["theta"], cfg.get("s", 1.0), cfg["regime"],
            n, cfg["reps"], cfg["seed"], margins=_margins(cfg),
        )
        cols = []
        for attr in ("s_n", "q_n", "l_n"):
            vals = np.abs([getattr(qs, attr) for qs in report.quad_stats])
            q25, q50, q75 = np.quantile(vals, [0.25, 0.5, 0.75])
            cols += [q50, q75 - q25]
        lines.append(f"{n}," + ",".join(f"{v:.17g}" for v in cols))
    out = _outdir(cfg)
    (out / "quadconv.csv").write_text("\n".join(lines) + "\n")
    _echo_config(cfg, out)
    return 0


def _cmd_estimate(cfg: dict) -> int:
    model = _model(cfg)
    _require(cfg, "theta", "n", "reps", "seed")
    names = tuple((cfg.get("estimators") or "one_step").split(","))
    report = estimators.estimator_benchmark(
        model, cfg["theta"], int(cfg["n"]), cfg["reps"], cfg["seed"],
        estimators=names, margins=_margins(cfg),
    )
    out = _outdir(cfg)
    (out / "estimate.csv").write_text(report.to_csv())
    _echo_config(cfg, out)
    return 0


_COMMANDS = {
    "bounds": _cmd_bounds,
    "symmetry": _cmd_symmetry,
    "lan": _cmd_lan,
    "quadconv": _cmd_quadconv,
    "estimate": _cmd_estimate,
}


def _join_grid_values(argv):
    """Fold '--grid -0.3:0.95:101' into '--grid=...' so argparse does not
    mistake a negative grid start for an option."""
    out = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok == "--grid" and i + 1 < len(argv):
            out.append(f"--grid={argv[i + 1]}")
            skip = True
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_join_grid_values(list(argv)))
    try:
        cfg = _merge_config(args)
        if args.subcommand in _RANDOMIZED and cfg.get("seed") is None:
            raise DomainError("randomized commands require an explicit --seed")
        if cfg.get("threads", 1) < 1:
            raise DomainError("--threads must be >= 1")
    except (CopulaBoundsError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    try:
        return _COMMANDS[args.subcommand](cfg)
    except CopulaBoundsError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except Exception as exc:
        sys.stderr.write(f"runtime error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
