"""Experiment command line: one subcommand per figure-family protocol.

Every output CSV starts with a comment header that embeds the fully resolved
configuration (bundles expanded, defaults filled, seed included), so any file
can be regenerated byte-for-byte from its own header via ``replay``.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analysis, analytic, convergence, simulate
from .errors import ConfigError, RateCorrError
from .neuron import NetworkParams, SigmoidParams, stationary_state
from .propagator import build_propagator
from .spectral import spectrum_of
from .topology import spec_from_config, spec_to_config

__all__ = ["main", "run", "replay", "read_header"]

HEADER_PREFIX = "# ratecorr-config: "

PARAM_BUNDLES = {
    "table1": {"tau": 1.0, "lam": 1.0, "i_base": 0.0,
               "sigmoid": {"t_max": 1.0, "slope": 1.0, "v_t": 0.0}},
    "table2": {"tau": 0.1, "lam": 40.0, "i_base": -20.0,
               "sigmoid": {"t_max": 1.0, "slope": 1.0, "v_t": 0.0}},
}
NOISE_BUNDLES = {
    "table1": {"c1": 0.3, "c2": 0.4, "c3": 0.5},
    "table2": {"c1": 0.0, "c2": 0.0, "c3": 0.0},
}


def _resolve_params(cfg) -> dict:
    if isinstance(cfg, str):
        if cfg not in PARAM_BUNDLES:
            raise ConfigError(f"unknown parameter bundle {cfg!r}")
        return json.loads(json.dumps(PARAM_BUNDLES[cfg]))
    if not isinstance(cfg, dict):
        raise ConfigError("params must be a bundle name or a mapping")
    base = json.loads(json.dumps(PARAM_BUNDLES.get(cfg.pop("bundle", "table1"))))
    sig = cfg.pop("sigmoid", {})
    _reject_unknown(sig, {"t_max", "slope", "v_t"}, "sigmoid")
    base["sigmoid"].update(sig)
    _reject_unknown(cfg, {"tau", "lam", "i_base"}, "params")
    base.update(cfg)
    return base


def _params_obj(cfg: dict) -> NetworkParams:
    sig = cfg["sigmoid"]
    return NetworkParams(cfg["tau"], cfg["lam"], cfg["i_base"],
                         SigmoidParams(sig["t_max"], sig["slope"], sig["v_t"]))


def _resolve_noise(cfg) -> dict:
    cfg = dict(cfg or {})
    bundle = cfg.pop("bundle", None)
    base = {"s1": 0.0, "s2": 0.0, "s3": 0.0, "s4": 0.0, "s5": 0.0,
            "c1": 0.0, "c2": 0.0, "c3": 0.0}
    if bundle is not None:
        if bundle not in NOISE_BUNDLES:
            raise ConfigError(f"unknown noise bundle {bundle!r}")
        base.update(NOISE_BUNDLES[bundle])
    _reject_unknown(cfg, set(base), "noise")
    base.update(cfg)
    return base


def _noise_obj(cfg: dict) -> analytic.NoiseSpec:
    return analytic.NoiseSpec(**cfg)


def _reject_unknown(cfg: dict, allowed: set, where: str) -> None:
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: str, resolved: dict, columns, rows) -> None:
    lines = [HEADER_PREFIX + json.dumps(resolved, sort_keys=True, separators=(",", ":"))]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_header(path: str) -> dict:
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
    if not first.startswith(HEADER_PREFIX):
        raise ConfigError(f"{path} carries no embedded configuration")
    return json.loads(first[len(HEADER_PREFIX):])


def replay(csv_path: str, out: str) -> list:
    """Regenerate a CSV from its own embedded header; returns written paths."""
    resolved = read_header(csv_path)
    return _dispatch(resolved["subcommand"], resolved, out)


def _resolve_mu_cfg(params: NetworkParams, branch) -> float:
    roots = stationary_state(params)
    if len(roots) == 1:
        return roots[0]
    if branch is None:
        raise ConfigError(
            f"{len(roots)} stationary branches; pick one with --branch 0..{len(roots) - 1}")
    if not 0 <= branch < len(roots):
        raise ConfigError(f"branch {branch} out of range 0..{len(roots) - 1}")
    return roots[branch]


# --- subcommand implementations ----------------------------------------------

def _cmd_spectrum(resolved: dict, out: str) -> list:
    spec = spec_from_config(resolved["topology"])
    s = spectrum_of(spec, resolved["lam"])
    rows = [(k, e.real, e.imag) for k, e in enumerate(s.eigenvalues)]
    _write_csv(out, resolved, ("k", "re", "im"), rows)
    return [out]


def _cmd_analytic_cov(resolved: dict, out: str) -> list:
    spec = spec_from_config(resolved["topology"])
    params = _params_obj(resolved["params"])
    noise = _noise_obj(resolved["noise"])
    mu = _resolve_mu_cfg(params, resolved.get("branch"))
    h = build_propagator(spec, params, mu)
    i, j = resolved["pair"]
    times = np.arange(int(round(resolved["t_max"] / resolved["dt"])) + 1) * resolved["dt"]
    rep = analytic.covariance_report(h, noise, i, j, times)
    rows = [(t, f"{i}-{j}", c, vi, vj, r, t1, t2, t3)
            for t, c, vi, vj, r, t1, t2, t3 in zip(
                rep.times, rep.cov, rep.var_i, rep.var_j, rep.corr,
                rep.term_noise, rep.term_initial, rep.term_weights)]
    _write_csv(out, resolved,
               ("t", "pair", "cov", "var_i", "var_j", "corr",
                "term_noise", "term_initial", "term_weights"), rows)
    return [out]


def _sim_config(resolved: dict, order: str | None = None) -> simulate.SimConfig:
    return simulate.SimConfig(
        topology=spec_from_config(resolved["topology"]),
        params=_params_obj(resolved["params"]),
        noise=_noise_obj(resolved["noise"]),
        t_max=resolved["t_max"],
        dt=resolved["dt"],
        n_trials=resolved["trials"],
        seed=resolved["seed"],
        order=order or resolved.get("order", "exact"),
        z_kind=resolved.get("z", "zero"),
        h_kind=resolved.get("h", "zero"),
        mu_branch=resolved.get("branch"),
        pairs=tuple(tuple(p) for p in resolved.get("pairs", [[0, 1]])),
        allow_irregular=resolved.get("allow_irregular", False),
        record_first_trajectory=resolved.get("trajectory", False),
    )


def _cmd_simulate(resolved: dict, out: str) -> list:
    cfg = _sim_config(resolved)
    stats = simulate.run(cfg)
    rows = []
    for ti, t in enumerate(stats.times):
        for node in range(stats.mean.shape[1]):
            rows.append((t, "node", str(node), stats.mean[ti, node],
                         stats.var[ti, node], "", "",
                         stats.sem_mean[ti, node], stats.sem_var[ti, node], "", ""))
        for pi, (i, j) in enumerate(stats.pairs):
            rows.append((t, "pair", f"{i}-{j}", "", "", stats.cov[ti, pi],
                         stats.corr[ti, pi], "", "", stats.sem_cov[ti, pi],
                         stats.sem_corr[ti, pi]))
    _write_csv(out, resolved,
               ("t", "kind", "id", "mean", "var", "cov", "corr",
                "se_mean", "se_var", "se_cov", "se_corr"), rows)
    written = [out]
    if resolved.get("trajectory"):
        tr_path = out + ".trajectory.csv"
        traj = stats.first_trajectory
        _write_csv(tr_path, resolved,
                   ("t",) + tuple(f"v{k}" for k in range(traj.shape[1])),
                   [(t, *traj[ti]) for ti, t in enumerate(stats.times)])
        written.append(tr_path)
    return written


def _cmd_compare(resolved: dict, out: str) -> list:
    orders = resolved.get("orders", ["exact", "order1"])
    params = _params_obj(resolved["params"])
    noise = _noise_obj(resolved["noise"])
    spec = spec_from_config(resolved["topology"])
    mu = _resolve_mu_cfg(params, resolved.get("branch"))
    i, j = resolved.get("pairs", [[0, 1]])[0]
    runs = {order: simulate.run(_sim_config(resolved, order)) for order in orders}
    times = next(iter(runs.values())).times
    h = build_propagator(spec, params, mu)
    rep = analytic.covariance_report(h, noise, i, j, times)

    def emit(name, per_order, analytic_col):
        path = f"{out}_{name}.csv"
        cols = ("t",) + tuple(orders) + ("analytic",)
        rows = [(t, *(per_order[o][ti] for o in orders), analytic_col[ti])
                for ti, t in enumerate(times)]
        header = dict(resolved)
        header["quantity"] = name
        _write_csv(path, header, cols, rows)
        return path

    pair_idx = {o: runs[o].pairs.index((i, j)) for o in orders}
    written = [
        emit("potential", {o: runs[o].mean[:, i] for o in orders},
             np.full_like(times, mu)),
        emit("var", {o: runs[o].var[:, i] for o in orders}, rep.var_i),
        emit("cov", {o: runs[o].cov[:, pair_idx[o]] for o in orders}, rep.cov),
        emit("corr", {o: runs[o].corr[:, pair_idx[o]] for o in orders}, rep.corr),
    ]
    return written


def _cmd_chaos_scan(resolved: dict, out: str) -> list:
    params = _params_obj(resolved["params"])
    noise = _noise_obj(resolved["noise"])
    mu = _resolve_mu_cfg(params, resolved.get("branch"))
    n = resolved["n"]
    nus = range(resolved.get("nu_min", 1), resolved.get("nu_max", n // 2) + 1)
    rows_out = []
    mc_at = set(resolved.get("mc_check", []))
    for row in analysis.chaos_scan(n, nus, resolved["t"], noise, params, mu):
        mc_corr, mc_se = "", ""
        if row.nu in mc_at:
            from .topology import Circulant
            cfg = simulate.SimConfig(
                topology=Circulant(n, frozenset(range(1, row.nu + 1))),
                params=params, noise=noise, t_max=resolved["t"],
                dt=resolved["dt"], n_trials=resolved["trials"],
                seed=resolved["seed"], order="exact", pairs=((0, 1),),
                mu_branch=resolved.get("branch"))
            stats = simulate.run_exact(cfg)
            mc_corr, mc_se = stats.corr[-1, 0], stats.sem_corr[-1, 0]
        rows_out.append((row.nu, row.m, row.corr, mc_corr, mc_se))
    _write_csv(out, resolved, ("nu", "m", "corr", "mc_corr", "mc_se"), rows_out)
    return [out]


def _cmd_input_scan(resolved: dict, out: str) -> list:
    base = _sim_config(resolved)
    rows = analysis.input_scan(resolved["inputs"], base)
    out_rows = []
    for r in rows:
        for ti, t in enumerate(r.stats.times):
            out_rows.append((r.i_base, t, r.stats.corr[ti, 0], r.stats.sem_corr[ti, 0],
                             r.max_abs_corr, r.sem_at_max))
    _write_csv(out, resolved,
               ("i_base", "t", "corr", "se_corr", "max_abs_corr", "se_at_max"),
               out_rows)
    return [out]


def _cmd_sync_solve(resolved: dict, out: str) -> list:
    sig = resolved["sigmoid"]
    sp = SigmoidParams(sig["t_max"], sig["slope"], sig["v_t"])
    sols = analysis.sync_constraint_solve(
        sp, resolved["free"],
        tau=resolved.get("tau"), lam=resolved.get("lam"),
        i_base=resolved.get("i_base"))
    rows = [(s.branch, s.params.tau, s.params.lam, s.params.i_base, s.mu,
             s.constraint_residual, s.a0) for s in sols]
    _write_csv(out, resolved,
               ("branch", "tau", "lam", "i_base", "mu", "residual", "a0"), rows)
    return [out]


def _cmd_sync_run(resolved: dict, out: str) -> list:
    params = _params_obj(resolved["params"])
    noise = _noise_obj(resolved["noise"])
    results = analysis.sync_experiment(
        resolved["sizes"], params, noise, t_max=resolved["t_max"],
        dt=resolved["dt"], n_trials=resolved["trials"], seed=resolved["seed"],
        threshold=resolved.get("threshold", 0.9))
    rows = []
    for n, (stats, tta) in results.items():
        for ti, t in enumerate(stats.times):
            rows.append((n, t, stats.corr[ti, 0], stats.sem_corr[ti, 0],
                         tta if math.isfinite(tta) else "inf"))
    _write_csv(out, resolved, ("n", "t", "corr", "se_corr", "time_to_threshold"), rows)
    return [out]


def _cmd_radius(resolved: dict, out: str) -> list:
    rows = []
    for lam in resolved["lam_values"]:
        for x0 in resolved["x0_values"]:
            rows.append((x0, lam,
                         convergence.sigmoid_radius(x0, lam, resolved.get("n_max", 512)),
                         convergence.arctangent_radius(x0, lam)))
    _write_csv(out, resolved, ("x0", "lam", "r_sigmoid", "r_arctan"), rows)
    return [out]


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "analytic-cov": _cmd_analytic_cov,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "chaos-scan": _cmd_chaos_scan,
    "input-scan": _cmd_input_scan,
    "sync-solve": _cmd_sync_solve,
    "sync-run": _cmd_sync_run,
    "radius": _cmd_radius,
}

# defaults that make each subcommand runnable with a minimal config
_DEFAULTS = {
    "spectrum": {"lam": 1.0},
    "analytic-cov": {"t_max": 10.0, "dt": 0.1, "pair": [0, 1]},
    "simulate": {"t_max": 10.0, "dt": 0.1, "trials": 10_000, "order": "exact"},
    "compare": {"t_max": 10.0, "dt": 0.1, "trials": 10_000,
                "orders": ["exact", "order1"]},
    "chaos-scan": {"t": 1.0, "dt": 0.1, "trials": 10_000, "mc_check": []},
    "input-scan": {"t_max": 10.0, "dt": 0.1, "trials": 50_000,
                   "inputs": [-5.0, 0.0, 5.0]},
    "sync-solve": {"free": "i_base",
                   "sigmoid": {"t_max": 1.0, "slope": 1.0, "v_t": 0.0}},
    "sync-run": {"t_max": 15.0, "dt": 0.1, "trials": 1000, "sizes": [5, 10, 20],
                 "threshold": 0.9},
    "radius": {"n_max": 512, "x0_values": [0.0], "lam_values": [1.0]},
}

_NEEDS_PARAMS = {"analytic-cov", "simulate", "compare", "chaos-scan",
                 "input-scan", "sync-run"}
_NEEDS_TOPOLOGY = {"spectrum", "analytic-cov", "simulate", "compare", "input-scan"}


def _dispatch(subcommand: str, resolved: dict, out: str) -> list:
    if subcommand not in _COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    return _COMMANDS[subcommand](resolved, out)


def _resolve(subcommand: str, file_cfg: dict, overrides: dict) -> dict:
    resolved = dict(_DEFAULTS[subcommand])
    resolved.update(file_cfg)
    for key, value in overrides.items():
        if value is not None:
            resolved[key] = value
    resolved["subcommand"] = subcommand
    resolved.setdefault("seed", 0)
    if subcommand in _NEEDS_PARAMS:
        resolved["params"] = _resolve_params(resolved.get("params", "table1"))
        resolved["noise"] = _resolve_noise(resolved.get("noise"))
    if subcommand in _NEEDS_TOPOLOGY:
        if "topology" not in resolved:
            raise ConfigError(f"{subcommand} needs a topology")
        # normalize so the header round-trips through the canonical encoding
        resolved["topology"] = spec_to_config(spec_from_config(resolved["topology"]))
    return resolved


def run(argv) -> int:
    parser = argparse.ArgumentParser(
        prog="ratecorr",
        description="correlation-structure experiments for stochastic rate networks")
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default="ratecorr_out.csv", help="output CSV path")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--dt", type=float, default=None)
    parser.add_argument("--t-max", dest="t_max", type=float, default=None)
    parser.add_argument("--branch", type=int, default=None,
                        help="stationary-branch index when several roots exist")
    parser.add_argument("--allow-irregular", action="store_true", default=None,
                        help="permit non-uniform in-degree (Monte Carlo only)")
    args = parser.parse_args(argv)

    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    overrides = {"seed": args.seed, "trials": args.trials, "dt": args.dt,
                 "t_max": args.t_max, "branch": args.branch,
                 "allow_irregular": args.allow_irregular}
    resolved = _resolve(args.subcommand, file_cfg, overrides)
    written = _dispatch(args.subcommand, resolved, args.out)
    for path in written:
        print(path)
    return 0


def main() -> None:
    try:
        sys.exit(run(sys.argv[1:]))
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        sys.exit(2)
    except RateCorrError as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        sys.exit(3)
