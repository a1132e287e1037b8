"""Command-line front end.

Every subcommand reads one JSON config and writes CSV/JSON files into the
output directory.  Exit status 2 means the config was rejected, 3 means the
computation failed; in both cases the error code is printed on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .active_set import count_active_set, enumerate_active_set, iter_csv_rows
from .anova import (CURVE_COLUMNS, anova_rate_bounds, estimate_rate, fit_rate,
                    lower_envelope, tradeoff_curve)
from .config import (CONFIG_SCHEMA, ENV_PREFIX, ConfigError, ExperimentConfig, load_config,
                     to_jsonable)
from .cost import CostMode, algorithm_cost
from .errors import InvalidArgument, NSSApproxError
from .non_anova import (COMPARE_COLUMNS, certified_non_anova_approximation, comparison_row,
                        non_anova_rate_bounds, witness_lower_bound)

EXIT_CONFIG = 2
EXIT_COMPUTE = 3


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


class Writer:
    def __init__(self, out: Path, cfg: ExperimentConfig, subcommand: str, seed=None):
        self.out = out
        self.cfg = cfg
        self.subcommand = subcommand
        self.seed = seed
        self.files: list[str] = []

    def provenance(self) -> dict:
        p = {"tool": "nssapprox", "version": __version__, "subcommand": self.subcommand,
             "config_sha256": self.cfg.sha256}
        if self.seed is not None:
            p["seed"] = self.seed
        return p

    def csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
        buf = io.StringIO()
        buf.write(f"# nssapprox {__version__} config_sha256={self.cfg.sha256}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        return self._write(name, buf.getvalue())

    def json(self, name: str, payload: dict) -> Path:
        body = dict(payload)
        body["provenance"] = self.provenance()
        text = json.dumps(to_jsonable(body), indent=2, sort_keys=True, allow_nan=False)
        return self._write(name, text + "\n")

    def _write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_bytes(text.encode("utf-8"))
        self.files.append(name)
        return path


def _threshold_kwargs(cfg: ExperimentConfig) -> dict:
    if "eps_sq" in cfg.raw:
        return {"eps_sq": float(cfg.raw["eps_sq"])}
    if "eps" in cfg.raw:
        return {"eps": float(cfg.raw["eps"])}
    raise ConfigError("config needs eps or eps_sq for this subcommand")


def _rate_inputs(cfg: ExperimentConfig) -> dict | None:
    """Decay rates and cost exponent, from the 'rates' block or the model."""
    given = dict(cfg.raw.get("rates", {}))
    if "d_gamma_up" in given and given["d_gamma_up"] == "inf":
        given["d_gamma_up"] = math.inf
    if cfg.model is not None:
        given.setdefault("d_lambda_low", cfg.model.lam.decay_low)
        given.setdefault("d_gamma_low", cfg.model.gamma.decay_low)
        given.setdefault("d_gamma_up", cfg.model.gamma.decay_up)
    given.setdefault("s", cfg.cost.s)
    keys = ("d_lambda_low", "d_gamma_low", "d_gamma_up", "s")
    if any(given.get(k) is None for k in keys):
        return None
    return {k: float(given[k]) for k in keys}


def _theory(cfg: ExperimentConfig) -> dict | None:
    r = _rate_inputs(cfg)
    if r is None:
        return None
    out = {"inputs": r}
    try:
        a = anova_rate_bounds(**r)
    except InvalidArgument:
        return None
    out["anova"] = a.as_dict()
    if math.isfinite(r["d_gamma_up"]):
        out["non_anova"] = non_anova_rate_bounds(**r).as_dict()
    else:
        out["non_anova"] = None
    return out


def _need_model(cfg: ExperimentConfig):
    if cfg.model is None:
        raise ConfigError("config needs a model for this subcommand")


def _need_grid(cfg: ExperimentConfig):
    if cfg.eps_grid is None:
        raise ConfigError("config needs eps_grid for this subcommand")


# subcommands -----------------------------------------------------------------

def cmd_enumerate(cfg, w: Writer, threads: int):
    _need_model(cfg)
    kw = _threshold_kwargs(cfg)
    aset = enumerate_active_set(cfg.model, **kw, term_budget=cfg.term_budget)
    w.csv("enumerate.csv", ("level", "u", "j", "score"), iter_csv_rows(aset))
    summary = aset.summary()
    summary.update({
        "worst_case_error": math.sqrt(aset.largest_excluded_score),
        "cost_nss": algorithm_cost(aset, cfg.cost, CostMode.NSS),
        "cost_unrestricted": algorithm_cost(aset, cfg.cost, CostMode.UNRESTRICTED),
        "mode": cfg.mode.value,
    })
    w.json("enumerate.json", summary)


def _curve(cfg, threads):
    _need_model(cfg)
    _need_grid(cfg)
    return tradeoff_curve(cfg.model, cfg.cost, cfg.eps_grid, threads=threads,
                          term_budget=cfg.term_budget)


def _fit_or_none(points, mode):
    try:
        f = estimate_rate(points, mode)
    except InvalidArgument:
        return None
    return {"rate": f.rate, "max_residual": f.max_residual, "n_points": f.n_points}


def _write_curve(cfg, w: Writer, points):
    w.csv("curve.csv", CURVE_COLUMNS, (p.row() for p in points))
    w.json("curve.json", {"mode": cfg.mode.value, "points": len(points),
                          "fit": _fit_or_none(points, cfg.mode), "theory": _theory(cfg)})


def cmd_curve(cfg, w: Writer, threads: int):
    _write_curve(cfg, w, _curve(cfg, threads))


def cmd_rates(cfg, w: Writer, threads: int):
    points = _curve(cfg, threads)
    env = lower_envelope((p.cost(cfg.mode), p.exact_error) for p in points)
    local = []
    for (c0, e0), (c1, e1) in zip(env, env[1:]):
        local.append(-(math.log(e1) - math.log(e0)) / (math.log(c1) - math.log(c0)))
    payload = {
        "mode": cfg.mode.value,
        "fit": {m.value: _fit_or_none(points, m) for m in CostMode},
        "envelope": [[c, e] for c, e in env],
        "local_slopes": local,
        "theory": _theory(cfg),
    }
    g = cfg.model.gamma
    if g.decay_low is not None and g.decay_up is not None and math.isfinite(g.decay_up):
        p_lo, p_up = g.decay_low - 0.2, g.decay_up + 0.2
        payload["level_envelope"] = [
            {"epsilon": p.epsilon, "m_eps": p.m_eps,
             "below": p.m_eps * p.epsilon ** (2.0 / p_lo) if p_lo > 0 else None,
             "above": p.m_eps * p.epsilon ** (2.0 / p_up)}
            for p in points]
    w.json("rates.json", payload)


def cmd_bounds(cfg, w: Writer, threads: int):
    r = _rate_inputs(cfg)
    if r is None:
        raise ConfigError("bounds need d_lambda_low, d_gamma_low, d_gamma_up and s")
    a = anova_rate_bounds(**r)
    payload = {"inputs": r, "anova_lower": a.lower, "anova_upper": a.upper,
               "anova_p_lower": a.p_lower, "anova_p_upper": a.p_upper,
               "nonanova_lower": None, "nonanova_upper": None}
    if math.isfinite(r["d_gamma_up"]):
        n = non_anova_rate_bounds(**r)
        payload.update(nonanova_lower=n.lower, nonanova_upper=n.upper)
    w.json("bounds.json", payload)


def cmd_nonanova(cfg, w: Writer, threads: int):
    _need_model(cfg)
    block = cfg.raw.get("non_anova", {})
    res = certified_non_anova_approximation(
        cfg.model, costfn=cfg.cost, c=block.get("c"), rel_tol=block.get("rel_tol", 1e-6),
        collect=False, term_budget=cfg.term_budget, **_threshold_kwargs(cfg))
    w.json("nonanova.json", res.summary())


def _witness(cfg):
    _need_model(cfg)
    cfg.require("witness")
    block = cfg.raw["witness"]
    return [witness_lower_bound(cfg.model, cfg.cost, float(n), float(block["h_norm_sq"]),
                                float(block["c1"])) for n in block["budget_grid"]]


def cmd_witness(cfg, w: Writer, threads: int):
    bounds = _witness(cfg)
    w.csv("witness.csv", ("budget", "L", "norm_sq_lo", "norm_sq_hi", "error_lower_bound"),
          ((b.budget, b.L, b.norm_sq.lo, b.norm_sq.hi, b.error_lower_bound) for b in bounds))
    pts = [(b.budget, b.error_lower_bound) for b in bounds if b.error_lower_bound > 0]
    slope = None
    if len({p[0] for p in pts}) >= 4:
        slope = fit_rate([p[0] for p in pts], [p[1] for p in pts]).rate
    w.json("witness.json", {"points": len(bounds), "fitted_decay": slope,
                            "theory": _theory(cfg)})


def cmd_compare(cfg, w: Writer, threads: int):
    cfg.require("compare")
    block = cfg.raw["compare"]
    rows = [comparison_row(float(dg), float(dl), float(s))
            for dg in block["d_gamma"] for dl in block["d_lambda"] for s in block["s"]]
    w.csv("compare.csv", COMPARE_COLUMNS, rows)


def cmd_report(cfg, w: Writer, threads: int):
    from . import plotting

    points = _curve(cfg, threads)
    _write_curve(cfg, w, points)
    theory = _theory(cfg)
    bounds = None
    if theory is not None:
        bounds = anova_rate_bounds(**theory["inputs"])
    fit = _fit_or_none(points, cfg.mode)
    figs = [plotting.tradeoff_figure(points, w.out / "tradeoff.png", bounds,
                                     None if fit is None else fit["rate"]).name]
    last = count_active_set(cfg.model, cfg.eps_grid[-1], term_budget=cfg.term_budget)
    figs.append(plotting.level_counts_figure(last.level_counts, cfg.eps_grid[-1],
                                             w.out / "level_counts.png").name)
    if "witness" in cfg.raw:
        wb = _witness(cfg)
        figs.append(plotting.witness_figure([b.budget for b in wb],
                                            [b.error_lower_bound for b in wb],
                                            w.out / "witness.png").name)
    w.json("report.json", {"figures": figs, "tables": ["curve.csv", "curve.json"]})


COMMANDS = {
    "enumerate": (cmd_enumerate, "enumerate the active set for one eps"),
    "curve": (cmd_curve, "cost/error trade-off over an eps grid"),
    "rates": (cmd_rates, "fitted convergence rates against theory"),
    "bounds": (cmd_bounds, "closed-form rate bounds"),
    "nonanova": (cmd_nonanova, "certified algorithm for non-ANOVA spaces"),
    "witness": (cmd_witness, "witness lower bounds over a budget grid"),
    "compare": (cmd_compare, "ANOVA vs non-ANOVA rate table"),
    "report": (cmd_report, "trade-off curve plus PNG figures"),
}


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=_env("CONFIG"), help="experiment config (JSON)")
    common.add_argument("--out", default=_env("OUT", "."), help="output directory")
    common.add_argument("--threads", type=int, default=int(_env("THREADS", "1")),
                        help="worker processes for grid points")
    common.add_argument("--seed", type=int,
                        default=None if _env("SEED") is None else int(_env("SEED")),
                        help="seed for randomized fixtures (core computations are exact)")
    p = argparse.ArgumentParser(prog="nssapprox", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nssapprox {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    sub.add_parser("schema", help="print the config JSON schema")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "schema":
        sys.stdout.write(json.dumps(CONFIG_SCHEMA, indent=2, sort_keys=True) + "\n")
        return 0
    try:
        if not args.config:
            raise ConfigError("--config is required")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"nssapprox: config-error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fn, _ = COMMANDS[args.command]
    writer = Writer(Path(args.out), cfg, args.command, args.seed)
    try:
        fn(cfg, writer, args.threads)
    except ConfigError as exc:
        print(f"nssapprox: config-error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NSSApproxError as exc:
        print(f"nssapprox: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return 0


if __name__ == "__main__":
    sys.exit(main())
