"""Command-line front end: key=value configs, subcommand dispatch, CSV and
plot-script emission, and a JSON run manifest for reproducibility.

Exit codes: 0 success, 2 configuration error, 3 solver error.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__, evolution, general_potential, limit, stationary
from .errors import ChradialError, ConfigError
from .grid import DensityField, build_grid, radial_integral
from .model import Params, PotentialSpec, pressure

FMT = "%.17g"  # bit-faithful float round-trips in every CSV


def _f(s: str) -> float:
    return float(s)


def _i(s: str) -> int:
    return int(s)


def _b(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _s(s: str) -> str:
    return s


def _floats(s: str) -> Tuple[float, ...]:
    return tuple(float(tok) for tok in s.split(",") if tok.strip())


def _eps(s: str):
    return "auto" if s == "auto" else float(s)


# key -> (caster, default, subcommands that accept it)
ALL = ("evolve", "stationary", "limit", "general", "sweep", "verify")
SCHEMA: Dict[str, Tuple[Callable[[str], Any], Any, Tuple[str, ...]]] = {
    "gamma": (_f, 4.0, ALL),
    "delta": (_f, 1e-2, ALL),
    "eps": (_eps, "auto", ("evolve", "verify")),
    "mass": (_f, 0.4, ALL),
    "r_b": (_f, 10.0, ALL),
    "r_max": (_f, 10.0, ("evolve", "verify")),
    "n_nodes": (_i, 300, ALL),
    "R": (_f, 0.0, ("stationary", "general", "sweep", "verify")),
    "potential": (_s, "quadratic", ALL),
    "dt": (_f, 1e-7, ("evolve", "verify")),
    "t_end": (_f, 2.11, ("evolve", "verify")),
    "growth_rate": (_f, 0.0, ("evolve", "verify")),
    "homeostatic_pressure": (_f, 1.0, ("evolve", "verify")),
    "output_every": (_i, 100000, ("evolve", "verify")),
    "adaptive_guard": (_b, True, ("evolve", "verify")),
    "ic": (_s, "truncated_arctan", ("evolve", "verify")),
    "ic_amplitude": (_f, 1.0, ("evolve", "verify")),
    "ic_center": (_f, 2.0, ("evolve", "verify")),
    "ic_width": (_f, 0.2, ("evolve", "verify")),
    "r_out": (_f, 0.0, ("limit",)),
    "gammas": (_floats, (10.0, 50.0, 250.0), ("sweep", "verify")),
    "deltas": (_floats, (1e-3, 1e-4, 1e-5, 1e-6, 1e-7), ("sweep", "verify")),
    "tol_root": (_f, 1e-12, ALL),
    "tol_newton": (_f, 1e-10, ALL),
    "verify_tol_scale": (_f, 1.0, ("verify",)),
}

POTENTIALS = {
    "quadratic": PotentialSpec.quadratic,
    "zero": PotentialSpec.zero,
    "r4": lambda: general_potential.TEST_POTENTIALS["r4"],
    "expm1": lambda: general_potential.TEST_POTENTIALS["expm1"],
}


@dataclass
class RunConfig:
    subcommand: str
    values: Dict[str, Any]
    output_dir: Path

    def __getitem__(self, key):
        return self.values[key]

    def __eq__(self, other):
        return (isinstance(other, RunConfig)
                and self.subcommand == other.subcommand
                and self.values == other.values)


@dataclass
class RunManifest:
    subcommand: str
    config: Dict[str, str]
    version: str
    duration_s: float = 0.0
    files: List[Dict[str, Any]] = field(default_factory=list)
    convergence: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    def write(self, out_dir: Path):
        payload = {
            "subcommand": self.subcommand,
            "config": self.config,
            "version": self.version,
            "duration_s": self.duration_s,
            "files": self.files,
            "convergence": self.convergence,
            "error": self.error,
        }
        (out_dir / "manifest.json").write_text(json.dumps(payload, indent=2) + "\n")


def _value_to_str(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return FMT % v
    if isinstance(v, tuple):
        return ",".join(FMT % x for x in v)
    return str(v)


def parse_config(subcommand: str, config_path: Optional[Path] = None,
                 overrides: Optional[Dict[str, str]] = None,
                 output_dir: Path = Path(".")) -> RunConfig:
    """Resolve defaults <- config file <- flag overrides; unknown keys and
    keys foreign to the subcommand are hard errors."""
    if subcommand not in ALL:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    raw: Dict[str, str] = {}
    if config_path is not None:
        try:
            lines = Path(config_path).read_text().splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {config_path}: {exc}")
        for lineno, line in enumerate(lines, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(
                    f"{config_path}:{lineno}: expected key=value, got {stripped!r}")
            key, _, val = stripped.partition("=")
            key, val = key.strip(), val.strip()
            if key not in SCHEMA:
                raise ConfigError(f"{config_path}:{lineno}: unknown key {key!r}")
            raw[key] = val
    for key, val in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown override key {key!r}")
        raw[key] = val

    values: Dict[str, Any] = {}
    for key, (cast, default, subs) in SCHEMA.items():
        if key in raw:
            if subcommand not in subs:
                raise ConfigError(
                    f"key {key!r} does not apply to subcommand {subcommand!r}")
            try:
                values[key] = cast(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}")
        elif subcommand in subs:
            values[key] = default
    if values.get("potential") not in (None, *POTENTIALS):
        raise ConfigError(
            f"potential must be one of {sorted(POTENTIALS)}, "
            f"got {values['potential']!r}")
    cfg = RunConfig(subcommand, values, Path(output_dir))
    _params_from(cfg)  # surface Params precondition violations as config errors
    return cfg


def _params_from(cfg: RunConfig, eps_value: float = 0.0) -> Params:
    v = cfg.values
    try:
        return Params(
            gamma=v["gamma"], delta=v["delta"], eps=eps_value,
            mass=v["mass"], r_b=v["r_b"],
            potential=POTENTIALS[v.get("potential", "quadratic")](),
            tol_root=v.get("tol_root", 1e-12),
            tol_newton=v.get("tol_newton", 1e-10))
    except ChradialError as exc:
        raise ConfigError(str(exc)) from exc


def _write_csv(out_dir: Path, name: str, header: str, rows) -> Path:
    path = out_dir / name
    with path.open("w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(FMT % x if isinstance(x, float) else str(x)
                              for x in row) + "\n")
    return path


def _emit_config(cfg: RunConfig, out_dir: Path) -> Dict[str, str]:
    echo = {k: _value_to_str(v) for k, v in sorted(cfg.values.items())}
    text = "\n".join(f"{k}={v}" for k, v in echo.items()) + "\n"
    (out_dir / "config_resolved.cfg").write_text(text)
    return echo


def _register(manifest: RunManifest, *paths: Path):
    for path in paths:
        manifest.files.append({"name": path.name,
                               "bytes": path.stat().st_size})


PLOT_SCRIPT = """\
# Four-panel view of an evolution run: density snapshots, pressure snapshots,
# mass history, energy history.  Run with: python3 plot.py
import csv
from collections import defaultdict
import matplotlib.pyplot as plt

snaps = defaultdict(lambda: ([], [], []))
with open("snapshots.csv") as fh:
    for row in csv.DictReader(fh):
        t = float(row["t"])
        snaps[t][0].append(float(row["r"]))
        snaps[t][1].append(float(row["n"]))
        snaps[t][2].append(float(row["p"]))
ts, ms, es = [], [], []
with open("diagnostics.csv") as fh:
    for row in csv.DictReader(fh):
        ts.append(float(row["t"]))
        ms.append(float(row["mass"]))
        es.append(float(row["energy"]))
fig, ax = plt.subplots(2, 2, figsize=(10, 8))
for t in sorted(snaps):
    r, n, p = snaps[t]
    ax[0, 0].plot(r, n, label=f"t={t:.3g}")
    ax[0, 1].plot(r, p, label=f"t={t:.3g}")
ax[0, 0].set(xlabel="r", ylabel="n")
ax[0, 1].set(xlabel="r", ylabel="p")
ax[0, 0].legend(fontsize=7)
ax[1, 0].plot(ts, ms)
ax[1, 0].set(xlabel="t", ylabel="mass")
ax[1, 1].plot(ts, es)
ax[1, 1].set(xlabel="t", ylabel="energy")
fig.tight_layout()
fig.savefig("evolution.png", dpi=150)
print("wrote evolution.png")
"""


def cmd_evolve(cfg: RunConfig, manifest: RunManifest) -> int:
    v = cfg.values
    out = cfg.output_dir
    grid = build_grid(v["r_max"], v["n_nodes"])
    eps = grid.h if v["eps"] == "auto" else v["eps"]
    p = _params_from(cfg, eps_value=eps)
    n0 = evolution.make_initial(v["ic"], grid, amplitude=v["ic_amplitude"],
                                center=v["ic_center"], width=v["ic_width"])
    source = None
    if v["growth_rate"] > 0.0:
        source = evolution.GrowthSpec(rate=v["growth_rate"],
                                      homeostatic_pressure=v["homeostatic_pressure"])
    ecfg = evolution.EvolutionConfig(
        dt=v["dt"], t_end=v["t_end"], source=source,
        output_every=v["output_every"], adaptive_guard=v["adaptive_guard"])
    snapshots, diags = evolution.run(n0, p, ecfg)

    snap_rows = []
    for snap in snapshots:
        pvals = pressure(snap.field.values, p.gamma)
        for r, n, pr in zip(grid.nodes, snap.field.values, pvals):
            snap_rows.append((snap.t, float(r), float(n), float(pr)))
    f1 = _write_csv(out, "snapshots.csv", "t,r,n,p", snap_rows)
    f2 = _write_csv(out, "diagnostics.csv",
                    "t,mass,energy,entropy,min_n,max_n,dt_used",
                    [(d.t, d.mass, d.energy, d.entropy, d.min_n, d.max_n,
                      d.dt_used) for d in diags])
    f3 = out / "plot.py"
    f3.write_text(PLOT_SCRIPT)
    _register(manifest, f1, f2, f3)
    manifest.convergence = {
        "steps": len(diags) - 1,
        "final_t": diags[-1].t,
        "final_mass": diags[-1].mass,
        "final_energy": diags[-1].energy,
        "eps_used": eps,
        "ic_defaults_non_normative": v["ic"] == "truncated_arctan",
    }
    return 0


def cmd_stationary(cfg: RunConfig, manifest: RunManifest) -> int:
    v = cfg.values
    p = _params_from(cfg)
    if v["R"] > 0.0:
        _, prof = stationary.find_lambda(v["R"], p, v["n_nodes"])
    else:
        prof = stationary.find_radius_for_mass(v["mass"], p, n_nodes=v["n_nodes"])
    grid = prof.n.grid
    from .model import chemical_potential
    mu = chemical_potential(grid, prof.n, p)
    pvals = pressure(prof.n.values, p.gamma)
    f1 = _write_csv(cfg.output_dir, "profile.csv", "r,n,p,mu",
                    [(float(r), float(n), float(pr), float(m)) for r, n, pr, m
                     in zip(grid.nodes, prof.n.values, pvals, mu.values)])
    summary = cfg.output_dir / "summary.txt"
    summary.write_text(
        f"R={FMT % prof.R}\nlambda={FMT % prof.lam}\nmass={FMT % prof.mass}\n"
        f"residual_neumann={FMT % prof.residual_neumann}\n")
    _register(manifest, f1, summary)
    manifest.convergence = {
        "newton_iters": prof.newton_iters,
        "bisect_iters": prof.bisect_iters,
        "residual_neumann": prof.residual_neumann,
        "R": prof.R, "lambda": prof.lam, "mass": prof.mass,
    }
    return 0


def cmd_limit(cfg: RunConfig, manifest: RunManifest) -> int:
    v = cfg.values
    R = limit.radius_for_mass(v["mass"], v["delta"])
    r_out = v["r_out"] if v["r_out"] > 0.0 else 1.5 * R
    prof = limit.build_profile(v["mass"], v["delta"], r_out, max(v["n_nodes"], 64))
    grid = prof.n_inc.grid
    f1 = _write_csv(cfg.output_dir, "limit_profile.csv", "r,n,p",
                    [(float(r), float(n), float(pr)) for r, n, pr
                     in zip(grid.nodes, prof.n_inc.values, prof.p_inc.values)])
    f2 = _write_csv(cfg.output_dir, "limit_summary.csv",
                    "R,R0,lambda_c,x_c,jump,mass",
                    [(prof.R, prof.R0, prof.lambda_c, prof.x_c, prof.jump,
                      prof.mass)])
    _register(manifest, f1, f2)
    manifest.convergence = {"R": prof.R, "R0": prof.R0,
                            "lambda_c": prof.lambda_c, "jump": prof.jump}
    return 0


def cmd_general(cfg: RunConfig, manifest: RunManifest) -> int:
    v = cfg.values
    V = POTENTIALS[v["potential"]]()
    if not V.increasing():
        raise ConfigError("general subcommand needs an increasing potential")
    R = v["R"] if v["R"] > 0.0 else 1.0
    prof = general_potential.build_general_profile(R, v["delta"], V)
    f1 = _write_csv(cfg.output_dir, "general_summary.csv",
                    "R,tau,R0,lambda,lambda_asymptote,ratio",
                    [(prof.R, prof.tau, prof.R0, prof.lam, prof.jump_asymptote,
                      prof.lam / prof.jump_asymptote)])
    _register(manifest, f1)
    manifest.convergence = {"tau": prof.tau, "lambda": prof.lam}
    return 0


def cmd_sweep(cfg: RunConfig, manifest: RunManifest) -> int:
    v = cfg.values
    rows = limit.gamma_sweep(v["mass"], v["delta"], v["gammas"],
                             n_nodes=max(v["n_nodes"], 64))
    f1 = _write_csv(cfg.output_dir, "gamma_sweep.csv",
                    "gamma,R_gamma,sup_err,R_err,p_at_R0,lambda_c,jump_asymptote",
                    [(r.gamma, r.R_gamma, r.sup_err, r.R_err, r.p_at_R0,
                      r.lambda_c, r.jump_asymptote) for r in rows])
    R = v["R"] if v["R"] > 0.0 else 1.0
    jump_rows = []
    for d in v["deltas"]:
        try:
            xc = limit.solve_xc(R, d)
            lam_c = 0.5 * R * R * xc
            asym = limit.jump_asymptotic(R, d)
            jump_rows.append((d, xc, lam_c, asym, lam_c / asym))
        except ChradialError:
            jump_rows.append((d, math.nan, math.nan, math.nan, math.nan))
    f2 = _write_csv(cfg.output_dir, "delta_sweep.csv",
                    "delta,x_c,lambda_c,jump_asymptote,ratio", jump_rows)
    _register(manifest, f1, f2)
    manifest.convergence = {
        "sweep_errors": [r.error for r in rows if r.error],
    }
    return 0


def cmd_verify(cfg: RunConfig, manifest: RunManifest) -> int:
    from .verify import run_checks
    scale = cfg.values["verify_tol_scale"]
    results = run_checks(tol_scale=scale)
    lines = []
    n_fail = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        if not ok:
            n_fail += 1
        lines.append(f"{name}: {status} ({detail})")
        print(lines[-1])
    report = cfg.output_dir / "verify_report.txt"
    report.write_text("\n".join(lines) + "\n")
    _register(manifest, report)
    manifest.convergence = {"failed": n_fail, "total": len(results)}
    if n_fail:
        manifest.error = f"{n_fail} verification checks failed"
    return 0 if n_fail == 0 else 3


DISPATCH = {
    "evolve": cmd_evolve,
    "stationary": cmd_stationary,
    "limit": cmd_limit,
    "general": cmd_general,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def _parse_argv(argv: List[str]):
    if not argv or argv[0] in ("-h", "--help"):
        print(__doc__)
        print("usage: chradial <subcommand> [--config FILE] [--key value ...] "
              "[--out DIR]")
        print("subcommands:", ", ".join(ALL))
        raise SystemExit(0)
    subcommand = argv[0]
    config_path = None
    out_dir = Path(".")
    overrides: Dict[str, str] = {}
    i = 1
    while i < len(argv):
        tok = argv[i]
        if not tok.startswith("--"):
            raise ConfigError(f"expected a --flag, got {tok!r}")
        if i + 1 >= len(argv):
            raise ConfigError(f"flag {tok} is missing its value")
        val = argv[i + 1]
        if tok == "--config":
            config_path = Path(val)
        elif tok == "--out":
            out_dir = Path(val)
        else:
            overrides[tok[2:]] = val
        i += 2
    return subcommand, config_path, overrides, out_dir


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        subcommand, config_path, overrides, out_dir = _parse_argv(argv)
        cfg = parse_config(subcommand, config_path, overrides, out_dir)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(subcommand=cfg.subcommand,
                           config=_emit_config(cfg, out_dir),
                           version=__version__)
    _register(manifest, out_dir / "config_resolved.cfg")
    t0 = time.perf_counter()
    try:
        status = DISPATCH[cfg.subcommand](cfg, manifest)
    except ConfigError as exc:
        manifest.error = str(exc)
        manifest.duration_s = time.perf_counter() - t0
        manifest.write(out_dir)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ChradialError as exc:
        manifest.error = f"{type(exc).__name__}: {exc}"
        manifest.duration_s = time.perf_counter() - t0
        manifest.write(out_dir)
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    manifest.duration_s = time.perf_counter() - t0
    manifest.write(out_dir)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
