"""Command-line front end.

Configuration is a flat ``key = value`` text file with namespaced keys
(``graph.radius``); ``#`` starts a comment. Precedence, lowest first:
built-in defaults, the ``--config`` file, ``--set key=value`` options, then
dedicated flags such as ``--radius``. Every output CSV starts with ``#``
lines holding the subcommand and the fully resolved configuration, so
``connint <subcommand> --rerun out.csv`` repeats a run exactly.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import estimators as est
from . import limit_laws as ll
from . import timeline as tl
from .mobility import WaypointLaw
from .replicas import WORKERS_ENV, default_workers


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in str(text).replace(" ", "").split(",") if x)


def _opt_float(text):
    return None if str(text).lower() in ("", "none", "auto") else float(text)


def _opt_int(text):
    return None if str(text).lower() in ("", "none", "auto") else int(text)


@dataclass(frozen=True)
class Key:
    parse: object
    default: object
    help: str


# lengths are in units of graph.radius unless stated otherwise
KEYS = {
    "run.seed": Key(int, 0, "base seed"),
    "run.replicas": Key(int, 1000, "Monte Carlo replicas"),
    "run.workers": Key(_opt_int, None, f"worker processes (default: ${WORKERS_ENV} or 1)"),
    "run.output": Key(str, "", "output CSV path (default: <subcommand>.csv)"),
    "graph.intensity": Key(float, 1.5, "node intensity per unit volume"),
    "graph.radius": Key(float, 1.0, "communication radius"),
    "graph.dim": Key(int, 2, "dimension"),
    "graph.lambda_c": Key(_opt_float, None,
                          "critical intensity used for the supercriticality check "
                          "(default: 1.437 / radius^2 in d = 2)"),
    "mobility.rate": Key(float, 1.0, "jump rate of every node"),
    "mobility.law": Key(str, "fixed_jump", "fixed_jump or isotropic_normalized"),
    "mobility.jump": Key(float, 0.05, "fixed jump distance (radius units)"),
    "percolation.L": Key(float, 50.0, "finite-box side (radius units)"),
    "lambda_c.windows": Key(_floats, (30.0, 50.0), "two window sides (radius units)"),
    "lambda_c.sweep_min": Key(float, 0.8627, "smallest swept intensity x radius^d"),
    "lambda_c.sweep_max": Key(float, 2.1555, "largest swept intensity x radius^d"),
    "lambda_c.sweep_points": Key(int, 181, "sweep grid size"),
    "mu.distance_min": Key(float, 20.0, "shortest pair distance (radius units)"),
    "mu.distance_max": Key(float, 100.0, "longest pair distance (radius units)"),
    "mu.pairs": Key(int, 500, "number of pairs"),
    "mu.window": Key(float, 250.0, "torus side (radius units)"),
    "mu.value": Key(_opt_float, None, "stretch factor override (skips estimation)"),
    "theta.window": Key(_opt_float, None, "torus side (radius units, default 2L + 4)"),
    "scaling.n_S": Key(float, 2.0, "expected number of in-range sinks"),
    "scaling.alpha": Key(float, 0.5, "sink-density exponent"),
    "timeline.T": Key(float, 100.0, "horizon"),
    "timeline.k": Key(_opt_int, None, "hop budget (default: from the scaling relations)"),
    "timeline.sink_intensity": Key(_opt_float, None, "sink intensity (default T^-alpha)"),
    "timeline.window": Key(_opt_float, None, "torus side (radius units)"),
    "timeline.time_step": Key(_opt_float, None, "fixed evaluation step (default: event-driven)"),
    "timeline.surrogate": Key(str, "khop", "khop or box (finite-box surrogate)"),
    "limit.n_S_grid": Key(_floats, (0.0, 0.5, 1.0, 2.0, 4.0, 8.0), "n_S values for figure2"),
    "limit.statistics": Key(lambda s: tuple(x for x in str(s).replace(" ", "").split(",") if x),
                            ("f1", "f2", "f3"), "statistics"),
    "limit.delta": Key(float, 0.5, "time-grid step"),
    "limit.M": Key(float, 50.0, "time-grid half extent"),
    "limit.wrap_margin": Key(float, 2.0, "torus padding around the box (radius units)"),
    "limit.critical_steps": Key(int, 200, "time steps of the Brownian path"),
    "limit.h": Key(str, "", "file with 't h' rows for the critical time weight (default h = 1)"),
    "decorrelation.T_values": Key(_floats, (100.0, 1000.0, 10000.0), "horizons"),
    "decorrelation.t_frac": Key(float, 0.5, "second observation time / T"),
    "decorrelation.alpha": Key(float, 0.25, "sink-density exponent of the diagnostic"),
    "decorrelation.L": Key(float, 10.0, "finite-box side (radius units)"),
    "decorrelation.M": Key(float, 10.0, "time-grid half extent"),
}

FLAGS = {
    "--seed": "run.seed", "--replicas": "run.replicas", "--workers": "run.workers",
    "--output": "run.output", "-o": "run.output", "--intensity": "graph.intensity",
    "--radius": "graph.radius", "--dim": "graph.dim", "--rate": "mobility.rate",
    "--L": "percolation.L", "--n-S": "scaling.n_S", "--alpha": "scaling.alpha",
    "--T": "timeline.T", "--k": "timeline.k", "--delta": "limit.delta", "--M": "limit.M",
    "--mu": "mu.value",
}

SUBCOMMANDS = ("estimate-lambda-c", "estimate-mu", "estimate-theta", "interval-measure",
               "limit-dense", "limit-sparse", "limit-critical", "figure2", "decorrelation")
NEEDS_PERCOLATION = {"estimate-mu", "interval-measure", "limit-dense", "limit-sparse",
                     "limit-critical", "figure2", "decorrelation"}


def parse_config_text(text: str, origin: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{origin}:{n}: expected 'key = value', got {raw.strip()!r}")
        out[key.strip()] = value.strip()
    return out


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), str(p))


def load_header(path) -> tuple:
    """(subcommand, raw config) from the comment header of an output CSV."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"file not found: {p}")
    sub, raw = None, {}
    for line in p.read_text().splitlines():
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if body.startswith("connint "):
            sub = body.split()[1]
        key, sep, value = body.partition("=")
        if sep and key.strip() in KEYS:
            raw[key.strip()] = value.strip()
    return sub, raw


def resolve(raw: dict) -> dict:
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = {}
    for key, spec in KEYS.items():
        if key in raw:
            try:
                cfg[key] = spec.parse(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw[key]!r} ({exc})") from None
        else:
            cfg[key] = spec.default
    return cfg


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def header_lines(sub: str, cfg: dict, extra=()) -> list:
    return [f"connint {sub}"] + [f"{k}={_fmt(v)}" for k, v in cfg.items()] + list(extra)


# ------------------------------------------------------------------ helpers


def _law(cfg) -> WaypointLaw:
    kind = cfg["mobility.law"]
    if kind == "fixed_jump":
        return WaypointLaw.fixed(cfg["mobility.jump"])
    if kind == "isotropic_normalized":
        return WaypointLaw.normalized()
    raise ConfigError(f"mobility.law must be fixed_jump or isotropic_normalized, got {kind!r}")


def _lambda_c_hat(cfg) -> float:
    if cfg["graph.lambda_c"] is not None:
        return cfg["graph.lambda_c"]
    if cfg["graph.dim"] != 2:
        raise ConfigError("set graph.lambda_c: no built-in critical intensity for d != 2")
    return 1.437 / cfg["graph.radius"] ** 2


def _check_supercritical(cfg):
    lc = _lambda_c_hat(cfg)
    lam = cfg["graph.intensity"]
    if lam <= lc:
        raise ConfigError(
            f"graph.intensity={lam} is not above the critical intensity estimate {lc:.4g}; "
            "this run needs a percolating node process. Raise graph.intensity, or set "
            "graph.lambda_c if you have a better estimate.")


def _mu(cfg, workers) -> float:
    if cfg["mu.value"] is not None:
        return cfg["mu.value"]
    r = cfg["graph.radius"]
    e = est.estimate_mu(cfg["graph.intensity"], r, cfg["mu.window"] * r,
                        (cfg["mu.distance_min"], cfg["mu.distance_max"]), cfg["mu.pairs"],
                        replicas=max(1, cfg["mu.pairs"] // 50), seed=cfg["run.seed"],
                        dim=cfg["graph.dim"], workers=workers)
    return e.value


def _limit_cfg(cfg, regime, n_S=None) -> ll.LimitConfig:
    r = cfg["graph.radius"]
    return ll.LimitConfig(regime=regime,
                          n_S=cfg["scaling.n_S"] if n_S is None else n_S,
                          L=cfg["percolation.L"], delta=cfg["limit.delta"], M=cfg["limit.M"],
                          node_intensity=cfg["graph.intensity"] * r ** cfg["graph.dim"],
                          radius=1.0, law=_law(cfg), rate=cfg["mobility.rate"],
                          replicas=cfg["run.replicas"], seed=cfg["run.seed"],
                          dim=cfg["graph.dim"], wrap_margin=cfg["limit.wrap_margin"],
                          critical_steps=cfg["limit.critical_steps"])


def _write_csv(path, header, columns, rows):
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


# -------------------------------------------------------------- subcommands


def cmd_estimate_lambda_c(cfg, workers):
    r, d = cfg["graph.radius"], cfg["graph.dim"]
    sweep = np.linspace(cfg["lambda_c.sweep_min"], cfg["lambda_c.sweep_max"],
                        cfg["lambda_c.sweep_points"]) / r ** d
    sides = tuple(s * r for s in cfg["lambda_c.windows"])
    e = est.estimate_lambda_c(r, sides, sweep, cfg["run.replicas"], cfg["run.seed"], d,
                              workers=workers)
    rows = [("lambda_c", e.value, e.std_error, e.replicas)]
    for p in e.settings["points"]:
        rows.append((f"spanning_half_point_side_{_fmt(p.side)}", p.value, p.std_error,
                     e.replicas))
    print(f"lambda_c = {e.value:.4f} +- {e.std_error:.4f}")
    return est.ESTIMATE_COLUMNS, rows, []


def cmd_estimate_mu(cfg, workers):
    r = cfg["graph.radius"]
    e = est.estimate_mu(cfg["graph.intensity"], r, cfg["mu.window"] * r,
                        (cfg["mu.distance_min"], cfg["mu.distance_max"]), cfg["mu.pairs"],
                        replicas=max(1, cfg["mu.pairs"] // 50), seed=cfg["run.seed"],
                        dim=cfg["graph.dim"], workers=workers)
    print(f"mu = {e.value:.4f} +- {e.std_error:.4f} ({e.settings['pairs']} pairs)")
    return est.ESTIMATE_COLUMNS, [("mu", e.value, e.std_error, e.settings["pairs"])], []


def cmd_estimate_theta(cfg, workers):
    r = cfg["graph.radius"]
    L = cfg["percolation.L"]
    side = cfg["theta.window"] if cfg["theta.window"] is not None else 2 * L + 4
    e = est.estimate_theta(cfg["graph.intensity"], r, side * r, L * r, cfg["run.replicas"],
                           cfg["run.seed"], cfg["graph.dim"], workers)
    print(f"theta_L = {e.value:.4f} +- {e.std_error:.4f}")
    return est.ESTIMATE_COLUMNS, [("theta_L", e.value, e.std_error, e.replicas)], []


def cmd_interval_measure(cfg, workers):
    r, d = cfg["graph.radius"], cfg["graph.dim"]
    T = cfg["timeline.T"]
    mu = _mu(cfg, workers)
    lam_S = cfg["timeline.sink_intensity"]
    if lam_S is None:
        lam_S = T ** (-cfg["scaling.alpha"])
    # sink intensity is per unit volume in the caller's units; convert to radius units
    lam_S_r = lam_S * r ** d
    k = cfg["timeline.k"]
    if k is None:
        k = est.ScalingParams(cfg["scaling.n_S"], cfg["scaling.alpha"], T, mu, d).k
    reach = k / mu
    side = cfg["timeline.window"]
    if side is None:
        side = 2 * (reach + k + 4)
    box = cfg["timeline.surrogate"] == "box"
    if cfg["timeline.surrogate"] not in ("khop", "box"):
        raise ConfigError("timeline.surrogate must be khop or box")
    tc = tl.ConnectivityConfig(k=k, L=cfg["percolation.L"] if box else None,
                               node_intensity=cfg["graph.intensity"] * r ** d, radius=1.0,
                               sink_intensity=lam_S_r, T=T, time_step=cfg["timeline.time_step"],
                               rate=cfg["mobility.rate"], law=_law(cfg), window_side=side,
                               dim=d, mu=mu)
    rows, stats = [], {f: [] for f in ("f1", "f2", "f3")}
    for rep in range(cfg["run.replicas"]):
        _, m = tl.simulate_interval_measure(tc, cfg["run.seed"], rep)
        rows.extend(tl.measure_rows(m, rep))
        for f in stats:
            stats[f].append(tl.evaluate_statistic(m, f))
    extra = [f"T={T!r}", f"resolved k={k} mu={mu!r} sink_intensity={lam_S!r}"]
    for f, v in stats.items():
        v = np.asarray(v)
        se = v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else 0.0
        extra.append(f"result {f}: mean={v.mean()!r} std_error={se!r}")
        print(f"{f}: {v.mean():.5f} +- {se:.5f}")
    return tl.MEASURE_COLUMNS, rows, extra


def _stat_name(cfg):
    s = cfg["limit.statistics"]
    return s[0] if s else "f1"


def cmd_limit_dense(cfg, workers):
    lc = _limit_cfg(cfg, "dense")
    rows = []
    for f in cfg["limit.statistics"]:
        e = ll.estimate_regime_statistic(lc, f, workers=workers)
        rows.append((lc.n_S, f, e.value, e.std_error, e.replicas))
        print(f"{f}: {e.value:.5f} +- {e.std_error:.5f}")
    return ll.SWEEP_COLUMNS, rows, []


def cmd_limit_sparse(cfg, workers):
    lc = _limit_cfg(cfg, "sparse")
    f = _stat_name(cfg)
    t = ll.estimate_regime_statistic(lc, f, workers=workers)
    extra = [f"result {f}: poisson_mixture={t.mixture.value!r} "
             f"std_error={t.mixture.std_error!r}"]
    print(f"{f} Poisson mixture: {t.mixture.value:.5f} +- {t.mixture.std_error:.5f}")
    return ll.TABLE_COLUMNS, ll.table_rows(t), extra


def _load_h(path):
    if not path:
        return None
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"time-weight file not found: {p}")
    return np.loadtxt(p, ndmin=2)


def cmd_limit_critical(cfg, workers):
    lc = _limit_cfg(cfg, "critical")
    f = _stat_name(cfg)
    res = ll.estimate_regime_statistic(lc, f, h=_load_h(cfg["limit.h"]), workers=workers)
    extra = [f"result {f}: mean={res.mean!r} std_error={res.std_error!r}"]
    extra += [f"table n={n} conditional_mean={m!r} poisson_weight={w!r}"
              for n, m, w in ll.table_rows(res.table)]
    print(f"{f} critical integral: {res.mean:.5f} +- {res.std_error:.5f}")
    rows = [(i, float(v)) for i, v in enumerate(res.samples)]
    return ("replica", "integral"), rows, extra


def cmd_figure2(cfg, workers):
    lc = _limit_cfg(cfg, "dense")
    rows = ll.figure2_sweep(lc, cfg["limit.n_S_grid"], cfg["limit.statistics"], workers)
    for row in rows:
        print(f"n_S={row[0]:<5g} {row[1]}: {row[2]:.5f} +- {row[3]:.5f}")
    return ll.SWEEP_COLUMNS, rows, []


def cmd_decorrelation(cfg, workers):
    r, d = cfg["graph.radius"], cfg["graph.dim"]
    mu = _mu(cfg, workers)
    rows = []
    for T in cfg["decorrelation.T_values"]:
        dc = tl.DecorrelationConfig(T=T, alpha=cfg["decorrelation.alpha"], n_S=cfg["scaling.n_S"],
                                    mu=mu, L=cfg["decorrelation.L"], delta=cfg["limit.delta"],
                                    M=cfg["decorrelation.M"],
                                    node_intensity=cfg["graph.intensity"] * r ** d,
                                    rate=cfg["mobility.rate"], law=_law(cfg), dim=d)
        c = tl.decorrelation_diagnostic(dc, cfg["decorrelation.t_frac"], cfg["run.replicas"],
                                        cfg["run.seed"], workers)
        rows.append((T, cfg["decorrelation.t_frac"], c.value, c.std_error, c.replicas))
        print(f"T={T:g}: covariance {c.value:.5f} +- {c.std_error:.5f}")
    return ("T", "t_frac", "covariance", "std_error", "replicas"), rows, []


COMMANDS = {
    "estimate-lambda-c": cmd_estimate_lambda_c,
    "estimate-mu": cmd_estimate_mu,
    "estimate-theta": cmd_estimate_theta,
    "interval-measure": cmd_interval_measure,
    "limit-dense": cmd_limit_dense,
    "limit-sparse": cmd_limit_sparse,
    "limit-critical": cmd_limit_critical,
    "figure2": cmd_figure2,
    "decorrelation": cmd_decorrelation,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="connint",
        description="Connection-interval simulations on dynamic Gilbert graphs.",
        epilog="Config keys (flat 'key = value' file):\n" + "\n".join(
            f"  {k:<26} {v.help} [default {_fmt(v.default)}]" for k, v in KEYS.items()),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("subcommand", help=", ".join(SUBCOMMANDS))
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--rerun", help="take subcommand-independent config from an output CSV header")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    for flag, key in FLAGS.items():
        if flag == "-o":
            continue
        names = [flag, "-o"] if key == "run.output" else [flag]
        p.add_argument(*names, dest=key.replace(".", "__"), default=None,
                       help=f"same as --set {key}=...")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = args.subcommand
    try:
        if sub not in COMMANDS:
            raise ConfigError(f"unknown subcommand {sub!r}; choose one of {', '.join(SUBCOMMANDS)}")
        raw = {}
        if args.rerun:
            _, raw = load_header(args.rerun)
            # never overwrite the file being reproduced unless asked to
            raw.pop("run.output", None)
        if args.config:
            raw.update(load_config(args.config))
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            raw[key.strip()] = value.strip()
        for flag, key in FLAGS.items():
            v = getattr(args, key.replace(".", "__"), None)
            if v is not None:
                raw[key] = v
        cfg = resolve(raw)
        if sub in NEEDS_PERCOLATION:
            _check_supercritical(cfg)
        workers = cfg["run.workers"] if cfg["run.workers"] is not None else default_workers()
        out = cfg["run.output"] or f"{sub}.csv"
        columns, rows, extra = COMMANDS[sub](cfg, workers)
        _write_csv(out, header_lines(sub, cfg, extra), columns, rows)
        print(f"wrote {out}")
        return 0
    except (ConfigError, ValueError, OverflowError) as exc:
        print(f"connint: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
