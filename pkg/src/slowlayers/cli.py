"""Command-line front end: config parsing, experiment orchestration, CSV output.

Subcommands: simulate | table1 | table2 | spectrum | hypotheses | coupled.
Configuration is a line-based ``key = value`` file with ``#`` comments;
unknown keys are hard errors (exit code 1).  Runs are deterministic for a
fixed config and seed, so reruns produce byte-identical CSVs.

Exit codes: 0 success, 1 config/usage error, 2 runtime abort (partial
outputs are left in place).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .grid import GridFunction, make_grid
from .models import BurgersModel, JinXinModel, default_initial_data
from .refdata import reference_table
from .reduction import ReductionContext
from .spectral import (assemble_linearized, check_hypotheses, eigenpairs,
                       lambda1_asymptotic)
from .steady import omega_asymptotic
from .evolve import IntegratorConfig, Trajectory, run_adaptive, simulate_coupled


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "yes", "1", "on"):
        return True
    if s.lower() in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s: str) -> List[float]:
    parts = [p for chunk in s.split(",") for p in chunk.split()]
    return [float(p) for p in parts]


# key -> (parser, default)
CONFIG_SCHEMA = {
    "model": (str, "burgers"),
    "epsilon": (_parse_floats, [0.1]),
    "ell": (float, 1.0),
    "u_star": (float, 1.0),
    "a_relax": (float, 1.0),
    "n_interior": (int, 399),
    "T": (float, 1.0),
    "output_times": (_parse_floats, []),
    "scheme": (str, "implicit"),
    "dt_init": (float, 1e-3),
    "dt_max": (float, 500.0),
    "rel_tol": (float, 1e-6),
    "abs_tol": (float, 1e-9),
    "seed": (int, 0),
    "project": (_parse_bool, False),
    "xi_values": (_parse_floats, [-0.4, -0.3, -0.2, -0.1, 0.0,
                                  0.1, 0.2, 0.3, 0.4]),
    "xi_max": (float, 0.45),
    "modes": (int, 6),
    "xi0": (float, -0.3),
    "mode": (str, "quasi_linear"),
    "v0_mode": (int, 2),
    "v0_amplitude": (float, 0.01),
}


def parse_config(path: Optional[str]) -> Dict[str, object]:
    cfg = {k: v for k, (_, v) in CONFIG_SCHEMA.items()}
    cfg["_set"] = set()
    if path is None:
        return cfg
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}")
    for ln, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
        parser, _ = CONFIG_SCHEMA[key]
        try:
            cfg[key] = parser(val)
            cfg["_set"].add(key)
        except ValueError as e:
            raise ConfigError(f"{path}:{ln}: bad value for {key!r}: {e}")
    return cfg


def _make_model(cfg: Dict[str, object], epsilon: float):
    name = str(cfg["model"]).lower()
    if name == "burgers":
        return BurgersModel(epsilon, float(cfg["ell"]), float(cfg["u_star"]))
    if name == "jinxin":
        return JinXinModel(epsilon, float(cfg["ell"]), float(cfg["a_relax"]),
                           float(cfg["u_star"]))
    raise ConfigError(f"unknown model {cfg['model']!r}")


def _integrator_config(cfg: Dict[str, object]) -> IntegratorConfig:
    return IntegratorConfig(dt_init=float(cfg["dt_init"]),
                            dt_max=float(cfg["dt_max"]),
                            rel_tol=float(cfg["rel_tol"]),
                            abs_tol=float(cfg["abs_tol"]),
                            scheme=str(cfg["scheme"]))


def _eps_tag(eps: float) -> str:
    return repr(eps).replace("-", "m")


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _snapshot_text(x: np.ndarray, vals: np.ndarray) -> str:
    return "\n".join(f"{xx!r} {vv!r}" for xx, vv in zip(x, vals)) + "\n"


# -- workers (module level so that process pools can pickle them) ------------


def _run_one_epsilon(cfg: Dict[str, object], eps: float,
                     T: float, output_times: Sequence[float]) -> Trajectory:
    m = _make_model(cfg, eps)
    grid = make_grid(-m.ell, m.ell, int(cfg["n_interior"]))
    s0 = default_initial_data(m, grid)
    ctx = None
    if bool(cfg["project"]):
        ctx = ReductionContext(m, grid, xi_max=float(cfg["xi_max"]))
    return run_adaptive(m, s0, T, _integrator_config(cfg),
                        output_times=output_times, ctx=ctx)


def _simulate_worker(args) -> Tuple[float, Trajectory]:
    cfg, eps = args
    outs = list(cfg["output_times"])
    return eps, _run_one_epsilon(cfg, eps, float(cfg["T"]), outs)


def _table_worker(args) -> Tuple[float, List[float], Trajectory]:
    cfg, eps, times = args
    traj = _run_one_epsilon(cfg, eps, max(times), times)
    xis = [traj.at_time(t) for t in times]
    return eps, xis, traj


def _map_jobs(fn, work, jobs: int):
    if jobs <= 1 or len(work) <= 1:
        return [fn(w) for w in work]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, work))


# -- subcommands --------------------------------------------------------------


def cmd_simulate(cfg: Dict[str, object], out: str, jobs: int) -> int:
    eps_list = list(cfg["epsilon"])
    if not eps_list:
        print("config error: empty epsilon list", file=sys.stderr)
        return 1
    results = _map_jobs(_simulate_worker, [(cfg, e) for e in eps_list], jobs)
    code = 0
    merged = ["epsilon," + Trajectory.CSV_HEADER]
    for eps, traj in sorted(results, key=lambda r: r[0]):
        tag = _eps_tag(eps)
        _write(os.path.join(out, f"trajectory_eps{tag}.csv"), traj.to_csv())
        for snap_t, state in traj.snapshots:
            x = state.u.grid.nodes
            base = os.path.join(out, f"snapshot_eps{tag}_t{snap_t!r}")
            _write(base + "_u.txt", _snapshot_text(x, state.u.values))
            if state.v is not None:
                _write(base + "_v.txt", _snapshot_text(x, state.v.values))
        for row in traj.to_csv().splitlines()[1:]:
            merged.append(f"{eps!r},{row}")
        if traj.aborted:
            print(f"run aborted for epsilon={eps}: {traj.flags}",
                  file=sys.stderr)
            code = 2
    _write(os.path.join(out, "simulate_merged.csv"), "\n".join(merged) + "\n")
    return code


# Without --long the table sweeps stop at desk scale: the smallest-epsilon
# columns at the longest horizons are multi-hour runs and are exercised only
# on demand.
_DESK_LIMITS = {"table1": (0.06, 1e5), "table2": (0.055, 1e4)}


def cmd_table(cfg: Dict[str, object], which: str, out: str, jobs: int,
              long_runs: bool = False) -> int:
    ref_eps, ref_times, ref_xi = reference_table(which)
    explicit = cfg.get("_set", set())
    eps_list = list(cfg["epsilon"]) if "epsilon" in explicit else list(ref_eps)
    times = (list(cfg["output_times"]) if "output_times" in explicit
             else list(ref_times))
    if not long_runs:
        eps_min, t_max = _DESK_LIMITS[which]
        if "epsilon" not in explicit:
            eps_list = [e for e in eps_list if e >= eps_min]
        if "output_times" not in explicit:
            times = [t for t in times if t <= t_max]
    if not eps_list:
        print("config error: empty epsilon list", file=sys.stderr)
        return 1
    if which == "table2" and str(cfg["model"]).lower() != "jinxin":
        cfg = dict(cfg)
        cfg["model"] = "jinxin"
    results = _map_jobs(_table_worker,
                        [(cfg, e, times) for e in eps_list], jobs)
    results.sort(key=lambda r: r[0])
    code = 0
    header = "t," + ",".join(f"eps={e!r}" for e, _, _ in results)
    rows, drows = [header], [header]
    for i, t in enumerate(times):
        vals = [xis[i] for _, xis, _ in results]
        rows.append(f"{t!r}," + ",".join(repr(v) for v in vals))
        ref_row = ref_xi.get(t)
        diffs = []
        for j, (e, _, _) in enumerate(results):
            if ref_row is not None and e in ref_eps:
                diffs.append(repr(vals[j] - ref_row[ref_eps.index(e)]))
            else:
                diffs.append("nan")
        drows.append(f"{t!r}," + ",".join(diffs))
    _write(os.path.join(out, f"{which}.csv"), "\n".join(rows) + "\n")
    _write(os.path.join(out, f"{which}_diff.csv"), "\n".join(drows) + "\n")
    for e, _, traj in results:
        if traj.aborted:
            print(f"run aborted for epsilon={e}: {traj.flags}", file=sys.stderr)
            code = 2
    return code


def cmd_spectrum(cfg: Dict[str, object], out: str) -> int:
    eps_list = list(cfg["epsilon"])
    if not eps_list:
        print("config error: empty epsilon list", file=sys.stderr)
        return 1
    xis = list(cfg["xi_values"])
    k = max(5, int(cfg["modes"]))
    lines = ["epsilon,xi," + ",".join(f"lambda{i}" for i in range(1, 6))
             + ",lambda1_asym,omega,ratio,failed"]
    total = failed = 0
    for eps in sorted(eps_list):
        m = _make_model(cfg, eps)
        grid = make_grid(-m.ell, m.ell, int(cfg["n_interior"]))
        for xi in xis:
            total += 1
            try:
                pairs = eigenpairs(assemble_linearized(xi, m, grid), k)
                lam = [float(l.real) for l in pairs.lam[:5]]
                asym = lambda1_asymptotic(xi, m)
                om = omega_asymptotic(xi, m)
                ratio = om / abs(lam[0]) if lam[0] != 0 else math.inf
                lines.append(f"{eps!r},{xi!r},"
                             + ",".join(repr(l) for l in lam)
                             + f",{asym!r},{om!r},{ratio!r},0")
            except Exception:
                failed += 1
                lines.append(f"{eps!r},{xi!r}," + ",".join(["nan"] * 8) + ",1")
    _write(os.path.join(out, "spectrum.csv"), "\n".join(lines) + "\n")
    return 0 if failed <= 0.1 * total else 2


def cmd_hypotheses(cfg: Dict[str, object], out: str) -> int:
    eps_list = sorted(cfg["epsilon"])
    if not eps_list:
        print("config error: empty epsilon list", file=sys.stderr)
        return 1
    m = _make_model(cfg, eps_list[0])
    grid = make_grid(-m.ell, m.ell, int(cfg["n_interior"]))
    rep = check_hypotheses(m, list(cfg["xi_values"]), eps_list, grid,
                           m_count=int(cfg["modes"]), seed=int(cfg["seed"]))
    _write(os.path.join(out, "hypotheses.csv"), rep.to_csv())
    summary = (f"h1={int(rep.h1_pass)} h2={int(rep.h2_pass)} "
               f"h3={int(rep.h3_pass)} h4={int(rep.h4_pass)} "
               f"gap_constant={rep.gap_constant!r} ratio_max={rep.ratio_max!r}")
    _write(os.path.join(out, "hypotheses_summary.txt"), summary + "\n")
    print(summary)
    return 0


def cmd_coupled(cfg: Dict[str, object], out: str) -> int:
    eps_list = list(cfg["epsilon"])
    if not eps_list:
        print("config error: empty epsilon list", file=sys.stderr)
        return 1
    mode = str(cfg["mode"])
    if mode not in ("quasi_linear", "complete"):
        print(f"config error: unknown mode {mode!r}", file=sys.stderr)
        return 1
    code = 0
    for eps in sorted(eps_list):
        m = _make_model(cfg, eps)
        grid = make_grid(-m.ell, m.ell, int(cfg["n_interior"]))
        ctx = ReductionContext(m, grid, xi_max=float(cfg["xi_max"]))
        xi0 = float(cfg["xi0"])
        phi = ctx.phik_at(xi0, int(cfg["v0_mode"]))
        v0 = GridFunction(grid, float(cfg["v0_amplitude"]) * phi.values)
        traj = simulate_coupled(xi0, v0, float(cfg["T"]), mode, ctx,
                                cfg=_integrator_config(cfg),
                                output_times=list(cfg["output_times"]))
        _write(os.path.join(out, f"coupled_{mode}_eps{_eps_tag(eps)}.csv"),
               traj.to_csv())
        if traj.aborted:
            print(f"coupled run aborted for epsilon={eps}: {traj.flags}",
                  file=sys.stderr)
            code = 2
    return code


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="slowlayers",
        description="Metastable internal-layer dynamics: simulation and "
                    "spectral analysis on [-ell, ell].")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "table1", "table2", "spectrum",
                 "hypotheses", "coupled"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None,
                        help="key = value config file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--jobs", type=int, default=1,
                        help="parallel epsilon sweep width")
        if name in ("table1", "table2"):
            sp.add_argument("--long", action="store_true",
                            help="include the smallest-epsilon / longest-"
                                 "horizon columns (multi-hour runs)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out, args.jobs)
        if args.command in ("table1", "table2"):
            return cmd_table(cfg, args.command, args.out, args.jobs,
                             long_runs=args.long)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.out)
        if args.command == "hypotheses":
            return cmd_hypotheses(cfg, args.out)
        if args.command == "coupled":
            return cmd_coupled(cfg, args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime abort: keep partial outputs
        print(f"runtime error: {e}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
