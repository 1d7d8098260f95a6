"""Experiment orchestration: parse a run configuration, dispatch a
subcommand, emit CSV/JSON artifacts, exit nonzero when a contract fails.

Exit codes: 0 all contracts pass, 1 contract failure, 2 usage error,
3 invalid parameter range, 4 unwritable output directory.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .fock import (
    fock_vector,
    inner_product,
    realify,
    symmetric_kernel,
    unit_weight,
    weighted_norm,
)
from .operators import CutoffLaw, GeneratorParams
from .streams import stream

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_USAGE = 2
EXIT_RANGE = 3
EXIT_OUTDIR = 4

OUTDIR_ENV = "FOCKBURGERS_OUTDIR"

SUBCOMMANDS = ("verify-operators", "controlled", "backward", "ergodicity",
               "simulate", "martingale", "ito-trick", "report")


@dataclass
class RunConfig:
    command: str
    M: int = 8
    Nmax: int = 3
    m: int = 8
    d: int = 1
    theta: float = 1.0
    L: float = 1.0
    gamma: float = 0.5
    alpha: float = 2.0
    dt: float = 1e-4
    T: float = 0.5
    paths: int = 1000
    seed: int = 0
    scheme: str = "exponential-euler"
    outdir: str = "."
    rate_slack: float = 0.01
    ztol: float | None = None
    config: str | None = None
    extras: dict = field(default_factory=dict)

    def validate(self):
        if not 0.75 < self.theta <= 1.0:
            raise RangeError(f"theta = {self.theta} outside (3/4, 1]")
        if self.command == "controlled" and not 0.25 < self.gamma <= 0.5:
            raise RangeError(f"gamma = {self.gamma} outside (1/4, 1/2]")
        if min(self.M, self.Nmax, self.paths) < 1 or self.m < 0:
            raise RangeError("counts must be positive (m may be zero)")
        if self.dt <= 0 or self.T <= 0 or self.L < 1:
            raise RangeError("dt, T positive and L >= 1 required")


class RangeError(ValueError):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="fockburgers",
                                description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--M", type=int, help="mode truncation radius")
    p.add_argument("--Nmax", type=int, help="chaos truncation depth")
    p.add_argument("--m", type=int, help="Galerkin cutoff")
    p.add_argument("--d", type=int, help="species count")
    p.add_argument("--theta", type=float, help="fractional exponent in (3/4, 1]")
    p.add_argument("--L", type=float, help="cutoff level")
    p.add_argument("--gamma", type=float, help="construction smoothness")
    p.add_argument("--alpha", type=float, help="chaos weight exponent")
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scheme", choices=("exponential-euler", "exponential-midpoint"))
    p.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV} or .)")
    p.add_argument("--rate-slack", dest="rate_slack", type=float,
                   help="relative tolerance on the decay-rate contract")
    p.add_argument("--ztol", type=float,
                   help="standard-error multiple for statistical contracts "
                        "(default 3 for invariance, 4 for martingale cells)")
    return p


def _read_config_file(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise RangeError(f"bad config line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = val
    return out


def build_config(argv):
    args = _parser().parse_args(argv)
    cfg = RunConfig(command=args.command)
    if args.config:
        cfg.config = args.config
        file_vals = _read_config_file(args.config)
        for key, val in file_vals.items():
            if not hasattr(cfg, key):
                raise RangeError(f"unknown config key {key!r}")
            cur = getattr(cfg, key)
            typ = type(cur) if cur is not None else str
            setattr(cfg, key, typ(val))
    for key in ("M", "Nmax", "m", "d", "theta", "L", "gamma", "alpha", "dt",
                "T", "paths", "seed", "scheme", "outdir", "rate_slack", "ztol"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.outdir is None and cfg.outdir == "." and OUTDIR_ENV in os.environ:
        cfg.outdir = os.environ[OUTDIR_ENV]
    cfg.validate()
    return cfg


def _manifest(cfg, status, failure=None, results=None):
    return {
        "version": __version__,
        "command": cfg.command,
        "parameters": {k: v for k, v in asdict(cfg).items() if k != "extras"},
        "master_seed": cfg.seed,
        "csv_schemas": {
            "decay.csv": ["t", "norm", "bound"],
            "apriori.csv": ["t", "alpha", "lhs1", "rhs1", "lhs2", "rhs2", "fitted_C"],
            "invariance.csv": ["k", "mean_re", "mean_im", "var", "se"],
            "martingale.csv": ["s", "t", "G_id", "estimate", "se", "z"],
            "qv.csv": ["t", "realized", "target"],
            "sweep.csv": ["param", "value"],
            "itoscaling.csv": ["p", "T", "moment"],
        },
        "status": status,
        "failure": failure,
        "results": results or {},
    }


def _write_manifest(cfg, status, failure=None, results=None):
    path = os.path.join(cfg.outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(_manifest(cfg, status, failure, results), fh, indent=2,
                  sort_keys=True)
        fh.write("\n")


def _random_real_vector(rng, trunc, n_max, density):
    import itertools

    from .fock import make_kernel

    kers = []
    modes = [k for k in range(-trunc, trunc + 1) if k != 0]
    for n in range(1, n_max + 1):
        tups = list(itertools.combinations_with_replacement(modes, n))
        take = [t for t in tups if rng.random() < density] or [tups[0]]
        entries = [(t, complex(rng.standard_normal(), rng.standard_normal()))
                   for t in take]
        kers.append(make_kernel(n, entries, trunc))
    return realify(fock_vector(kers, trunc, n_max))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_verify_operators(cfg):
    from .controlled import apply_generator, solve_controlled
    from .operators import apply_drift_lower, apply_drift_raise
    from .sim import energy_identity_check

    rng = stream(cfg.seed, "verify-operators")
    params = GeneratorParams(galerkin=cfg.m, theta=cfg.theta)
    worst_adj = worst_diss = worst_energy = 0.0
    for _ in range(50):
        n = int(rng.integers(1, min(cfg.Nmax, 3)))
        phi = _random_real_vector(rng, cfg.M, n, 0.15)
        psi = _random_real_vector(rng, cfg.M, n + 1, 0.1)
        psi = fock_vector([psi.kernel(n + 1)], cfg.M, n + 1)
        lhs = inner_product(psi, apply_drift_raise(phi, params, out_n_max=n + 1))
        rhs = -inner_product(apply_drift_lower(psi, params), phi)
        worst_adj = max(worst_adj, abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-30))
    cutoff = CutoffLaw(level=cfg.L, theta=cfg.theta)
    w = unit_weight(cfg.Nmax + 1)
    for _ in range(20):
        sharp = _random_real_vector(rng, cfg.M, cfg.Nmax, 0.1)
        pair = solve_controlled(sharp, params, cutoff, w, cfg.gamma)
        gen = apply_generator(pair, params)
        lhs = inner_product(pair.phi, gen)
        rhs = -weighted_norm(pair.phi, w, 0.5) ** 2
        worst_diss = max(worst_diss, abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-30))
        l_en, r_en = energy_identity_check(pair.phi, w)
        worst_energy = max(worst_energy, abs(l_en - r_en) / (l_en + r_en + 1e-30))
    results = {"adjointness_defect": worst_adj,
               "dissipativity_defect": worst_diss,
               "energy_identity_defect": worst_energy}
    ok = worst_adj <= 1e-10 and worst_diss <= 1e-10 and worst_energy <= 1e-10
    return ok, results, []


def _cmd_controlled(cfg):
    from .controlled import estimate_contraction, solve_controlled

    w = unit_weight(cfg.Nmax + 1)
    levels = [cfg.L * (4 ** i) for i in range(4)]
    factors = []
    for lvl in levels:
        cutoff = CutoffLaw(level=lvl, theta=cfg.theta)
        factors.append(estimate_contraction(
            GeneratorParams(galerkin=None, theta=cfg.theta), cutoff, w,
            cfg.gamma, trunc=int(16 * lvl), n_max=2))
    slope = float(np.polyfit(np.log(levels), np.log(factors), 1)[0])
    rng = stream(cfg.seed, "controlled")
    sharp = _random_real_vector(rng, cfg.M, cfg.Nmax, 0.15)
    pair = solve_controlled(sharp, GeneratorParams(galerkin=cfg.m, theta=cfg.theta),
                            CutoffLaw(level=cfg.L, theta=cfg.theta), w, cfg.gamma)
    results = {"levels": levels, "factors": factors, "slope": slope,
               "picard_residual": pair.residual}
    rows = [("sweep.csv", [("param", "value")] + list(zip(levels, factors)))]
    ok = -0.65 <= slope <= -0.35 and pair.residual <= 1e-10
    return ok, results, rows


def _solve_decay(cfg, control=False):
    from .backward import solve_backward

    rng = stream(cfg.seed, "backward-initial")
    if control:
        phi0 = fock_vector([symmetric_kernel(
            1, [((1,), 0.5), ((-1,), 0.5)], cfg.M)], cfg.M, cfg.Nmax)
        params = GeneratorParams(galerkin=0, theta=cfg.theta)
    else:
        phi0 = _random_real_vector(rng, cfg.M, cfg.Nmax, 0.1)
        params = GeneratorParams(galerkin=cfg.m, theta=cfg.theta)
    return solve_backward(phi0, cfg.T, cfg.dt, params, scheme=cfg.scheme)


def _cmd_backward(cfg):
    from .backward import apriori_report, write_apriori_csv, write_decay_csv

    traj = _solve_decay(cfg)
    reports = [apriori_report(traj, a) for a in (0.0, cfg.alpha)]
    decay_path = os.path.join(cfg.outdir, "decay.csv")
    apriori_path = os.path.join(cfg.outdir, "apriori.csv")
    write_decay_csv(traj, decay_path)
    write_apriori_csv(reports, apriori_path)
    results = {"fitted_C": {str(r["alpha"]): r["fitted_C"] for r in reports}}
    ok = all(math.isfinite(r["fitted_C"]) for r in reports)
    return ok, results, []


def _cmd_ergodicity(cfg):
    from .backward import ergodic_decay, write_decay_csv

    rate_target = 4 * math.pi ** 2
    traj = _solve_decay(cfg)
    write_decay_csv(traj, os.path.join(cfg.outdir, "decay.csv"))
    rate = ergodic_decay(traj)
    control = _solve_decay(cfg, control=True)
    control_rate = ergodic_decay(control)
    results = {"rate": rate, "control_rate": control_rate,
               "target": rate_target}
    ok = (rate >= rate_target * (1 - cfg.rate_slack)
          and abs(control_rate - rate_target) <= 0.005 * rate_target)
    return ok, results, []


def _cmd_simulate(cfg):
    from .sim import invariance_test, simulate, write_invariance_csv

    params = GeneratorParams(galerkin=cfg.m, theta=cfg.theta, species=cfg.d)
    batch = simulate("stationary", cfg.T, cfg.dt, params, cfg.seed,
                     paths=cfg.paths, radius=max(cfg.m, cfg.M),
                     store_stride=max(1, int(round(cfg.T / cfg.dt)) // 8))
    rep = invariance_test(batch)
    write_invariance_csv(rep, os.path.join(cfg.outdir, "invariance.csv"))
    ztol = cfg.ztol if cfg.ztol is not None else 3.0
    results = {"max_var_z": rep["max_var_z"],
               "drift_orthogonality": batch.drift_orth_max,
               "flagged_paths": int(batch.flags.sum()), "ztol": ztol}
    ok = rep["max_var_z"] <= ztol and batch.drift_orth_max <= 1e-12
    return ok, results, []


def _cmd_martingale(cfg):
    from .sim import (
        bounded_conditioning,
        constant_conditioning,
        defect_correlator,
        martingale_test,
        qv_estimate,
        simulate,
        write_martingale_csv,
        write_qv_csv,
    )

    params = GeneratorParams(galerkin=cfg.m, theta=cfg.theta)
    radius = max(cfg.m, cfg.M)
    f = fock_vector([symmetric_kernel(
        1, [((1,), -0.5j), ((-1,), 0.5j)], radius)], radius)
    batch = simulate("stationary", cfg.T, cfg.dt, params, cfg.seed,
                     paths=cfg.paths, radius=radius, store_stride=4,
                     stream_name="martingale")
    n = len(batch.times) - 1
    edges = [round(i * n / 8) for i in range(9)]
    wrong = GeneratorParams(galerkin=max(1, cfg.m // 2), theta=cfg.theta)
    gs = {"const": constant_conditioning,
          "tanh": bounded_conditioning(f),
          "defect": defect_correlator(f, params, wrong, radius)}
    rep = martingale_test(batch, f, edges, gs, observable="linear")
    # the negative control concentrates on cells near the defect correlation
    # time and needs a healthy path count to be loud
    dt_neg = min(cfg.dt, 2.5e-4)
    neg_batch = simulate("stationary", 60 * dt_neg, dt_neg, params, cfg.seed,
                         paths=max(cfg.paths, 4000), radius=radius,
                         store_stride=1, stream_name="martingale-control")
    n2 = len(neg_batch.times) - 1
    edges2 = [round(i * n2 / 12) for i in range(13)]
    neg = martingale_test(neg_batch, f, edges2,
                          {"defect": defect_correlator(f, params, wrong, radius)},
                          gen_params=wrong, observable="linear-wrong-cutoff")
    realized, target = qv_estimate(batch, f)
    write_martingale_csv([rep, neg], os.path.join(cfg.outdir, "martingale.csv"))
    write_qv_csv([{"t": batch.times[-1], "realized": realized, "target": target}],
                 os.path.join(cfg.outdir, "qv.csv"))
    neg_z = float(np.max(np.abs(neg.combined_z())))
    ztol = cfg.ztol if cfg.ztol is not None else 4.0
    results = {"max_abs_z": rep.max_abs_z(),
               "negative_control_z": neg_z,
               "qv_realized": realized, "qv_target": target, "ztol": ztol}
    ok = (rep.max_abs_z() <= ztol and neg_z > ztol
          and abs(realized - target) <= 0.05 * target)
    return ok, results, []


def _cmd_ito_trick(cfg):
    from .sim import ito_trick_probe

    params = GeneratorParams(galerkin=cfg.m, theta=cfg.theta)
    phi = fock_vector([symmetric_kernel(
        2, [((1, 2), 0.5), ((-1, -2), 0.5)], cfg.M)], cfg.M)
    horizons = [cfg.T, 2 * cfg.T, 4 * cfg.T]
    rows_all = []
    slopes = {}
    for p in (2.0, 4.0):
        slope, rows = ito_trick_probe(phi, p, horizons, params, cfg.seed,
                                      paths=cfg.paths, dt=cfg.dt)
        slopes[str(p)] = slope
        rows_all += [(p, r["T"], r["moment"]) for r in rows]
    path = os.path.join(cfg.outdir, "itoscaling.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["p", "T", "moment"])
        for p, T, mom in rows_all:
            wr.writerow([repr(float(p)), repr(float(T)), repr(float(mom))])
    ok = slopes["2.0"] <= 1.2 and slopes["4.0"] <= 2.2
    return ok, {"slopes": slopes}, []


def _cmd_report(cfg):
    path = os.path.join(cfg.outdir, "manifest.json")
    if not os.path.exists(path):
        raise RangeError(f"no manifest at {path}")
    with open(path) as fh:
        man = json.load(fh)
    print(f"command: {man['command']}  status: {man['status']}")
    for key, val in man.get("results", {}).items():
        print(f"  {key}: {val}")
    for name in man.get("csv_schemas", {}):
        f = os.path.join(cfg.outdir, name)
        if os.path.exists(f):
            with open(f) as fh:
                nrows = sum(1 for _ in fh) - 1
            print(f"  {name}: {nrows} rows")
    return man["status"] == "ok", {"reported": man["command"]}, []


_DISPATCH = {
    "verify-operators": _cmd_verify_operators,
    "controlled": _cmd_controlled,
    "backward": _cmd_backward,
    "ergodicity": _cmd_ergodicity,
    "simulate": _cmd_simulate,
    "martingale": _cmd_martingale,
    "ito-trick": _cmd_ito_trick,
    "report": _cmd_report,
}


def run(argv):
    """Entry point; returns the process exit code."""
    try:
        cfg = build_config(argv)
    except SystemExit as err:  # argparse usage failure
        return EXIT_USAGE if err.code else EXIT_OK
    except RangeError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RANGE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RANGE
    if not os.path.isdir(cfg.outdir) or not os.access(cfg.outdir, os.W_OK):
        print(f"error: output directory {cfg.outdir!r} is not writable",
              file=sys.stderr)
        return EXIT_OUTDIR
    try:
        ok, results, extra_rows = _DISPATCH[cfg.command](cfg)
        for name, rows in extra_rows:
            with open(os.path.join(cfg.outdir, name), "w", newline="") as fh:
                wr = csv.writer(fh)
                for row in rows:
                    wr.writerow([x if isinstance(x, str) else repr(float(x))
                                 for x in row])
        if cfg.command != "report":
            _write_manifest(cfg, "ok" if ok else "failed",
                            failure=None if ok else "contract failed",
                            results=_jsonable(results))
        for key, val in _jsonable(results).items():
            print(f"{key}: {val}")
        print("status:", "ok" if ok else "FAILED")
        return EXIT_OK if ok else EXIT_CONTRACT
    except RangeError as err:
        _write_manifest(cfg, "failed", failure=str(err))
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RANGE
    except Exception as err:  # noqa: BLE001 - the manifest records the reason
        _write_manifest(cfg, "failed", failure=f"{type(err).__name__}: {err}")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONTRACT


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
