"""Command-line front end: build, simulate, converge, verify.

Every command reads one JSON config (see :mod:`tracechain.config`), writes
deterministic CSV/JSON reports into ``--out`` and embeds the exact config
plus its hash into every report.  Exit codes: 0 success, 2 validation
error, 3 failed numerical assertion, 4 I/O error.

With ``--no-timestamp`` the provenance timestamp is omitted and wall-time
columns are zeroed, making outputs byte-identical across runs with the
same config and seed.  Unless ``--no-plots`` is given, report commands
also render PNG figures next to the delimited output.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

from . import __version__
from .config import config_sha256, load_config
from .convergence import adjoint_identities_check, convergence_sweep, project
from .errors import CheckFailed, ConfigError, TraceChainError
from .linalg import capacity, solve_shifted
from .reference import make_reference, self_consistency_gap
from .scale_speed import CosineMode
from .simulate import (
    dynkin_martingale_residual,
    ensemble_hitting,
    ensemble_occupation,
    ensemble_states_at,
    holding_times_by_state,
    path_to_csv,
    simulate_path,
)
from .trace_chain import build_trace_chain, generator_matrix

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ASSERTION = 3
EXIT_IO = 4


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _provenance(cfg, timestamp):
    prov = {
        "tool": "tracechain",
        "version": __version__,
        "config_sha256": config_sha256(cfg.raw),
    }
    if timestamp:
        prov["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return prov


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_build(cfg, outdir, opts):
    cfg.require("scale", "partition")
    scale = cfg.build_scale()
    speed = cfg.build_speed()
    part = cfg.build_partition()
    chain = build_trace_chain(part, scale, speed)
    payload = {
        "provenance": _provenance(cfg, opts.timestamp),
        "config": cfg.raw,
        "chain": chain.to_dict(),
    }
    _write_json(os.path.join(outdir, "chain.json"), payload)
    print(f"wrote chain.json ({chain.n_states} states)")
    return EXIT_OK


def cmd_simulate(cfg, outdir, opts):
    cfg.require("scale", "partition")
    scale = cfg.build_scale()
    speed = cfg.build_speed()
    part = cfg.build_partition()
    chain = build_trace_chain(part, scale, speed)
    sim = cfg.simulation()
    seed = opts.seed if opts.seed is not None else sim["seed"]
    horizon = float(sim["horizon"])

    paths = []
    paths_dir = os.path.join(outdir, "paths")
    os.makedirs(paths_dir, exist_ok=True)
    for r in range(int(sim["sample_paths"])):
        path = simulate_path(chain, sim["initial"], horizon, seed, stream=r)
        buf = io.StringIO()
        path_to_csv(path, buf)
        with open(os.path.join(paths_dir, f"path_{r:04d}.csv"), "w",
                  encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        paths.append(path)

    replicas = int(sim["replicas"])
    law = ensemble_states_at(chain, horizon, replicas, seed, init=sim["initial"])
    counts = np.bincount(law, minlength=chain.n_states)
    left_half = np.nonzero(chain.grid < 0.5)[0]
    occ = ensemble_occupation(chain, left_half, horizon, replicas,
                              seed + 1, init=sim["initial"])
    stats_payload = {
        "provenance": _provenance(cfg, opts.timestamp),
        "config": cfg.raw,
        "seed": int(seed),
        "replicas": replicas,
        "horizon": horizon,
        "paths_exported": int(sim["sample_paths"]),
        "empirical_law_at_horizon": counts.tolist(),
        "stationary_weights": chain.stationary_weights.tolist(),
        "occupation_left_half": {
            "estimate": float(np.mean(occ)),
            "stderr": float(np.std(occ, ddof=1) / np.sqrt(replicas)),
        },
    }
    _write_json(os.path.join(outdir, "simulate_stats.json"), stats_payload)
    if opts.plots:
        from .figures import paths_figure
        paths_figure(paths, os.path.join(outdir, "fig_paths.png"))
    print(f"wrote {len(paths)} path files and simulate_stats.json")
    return EXIT_OK


def cmd_converge(cfg, outdir, opts):
    cfg.require("scale", "test_functions", "lambdas", "resolutions", "reference")
    scale = cfg.build_scale()
    speed = cfg.build_speed()
    funcs = cfg.build_test_functions()
    lams = cfg.lambdas()
    resolutions = cfg.resolutions()
    ref_spec = cfg.reference_spec()

    def run(u, lam):
        reference = make_reference(ref_spec["kind"], scale, speed, lam, u,
                                   modes=ref_spec.get("modes", 64),
                                   n_ref=ref_spec.get("n_ref", 4096))
        report = convergence_sweep(scale, speed, u, lam, resolutions, reference)
        gap = None
        if ref_spec["kind"] == "fine_grid":
            gap, _ = self_consistency_gap(reference)
        return report, gap

    tasks = [(u, lam) for u in funcs for lam in lams]
    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(lambda t: run(*t), tasks))
    else:
        results = [run(*t) for t in tasks]

    rows = []
    failures = []
    reports = []
    for (u, lam), (report, gap) in zip(tasks, results):
        reports.append(report)
        for rec in report.records:
            rows.append([report.label, lam, rec.n, rec.err_l2, rec.err_e1,
                         rec.energy_chain, rec.energy_reference,
                         rec.wall_time if opts.timestamp else 0.0])
        errs = report.err_l2
        if np.any(np.diff(errs) >= 0.0):
            failures.append(f"{report.label} lam={lam:g}: err_l2 not strictly decreasing")
        if np.any(np.diff(report.err_e1) >= 0.0):
            failures.append(f"{report.label} lam={lam:g}: err_e1 not strictly decreasing")
        if gap is not None and gap > float(np.min(errs)):
            failures.append(
                f"{report.label} lam={lam:g}: oracle self-consistency gap {gap:g} "
                f"exceeds the smallest reported error {float(np.min(errs)):g}"
            )

    _write_csv(os.path.join(outdir, "convergence.csv"),
               ["test_function", "lambda", "n", "err_l2", "err_e1",
                "energy_chain", "energy_reference", "wall_time_s"],
               rows)
    payload = {
        "provenance": _provenance(cfg, opts.timestamp),
        "config": cfg.raw,
        "reference": ref_spec,
        "rows": [dict(zip(["test_function", "lambda", "n", "err_l2", "err_e1",
                           "energy_chain", "energy_reference", "wall_time_s"],
                          row)) for row in rows],
        "failures": failures,
    }
    _write_json(os.path.join(outdir, "convergence.json"), payload)
    if opts.plots:
        from .figures import convergence_figure
        convergence_figure(reports, os.path.join(outdir, "fig_convergence.png"))
    if failures:
        for msg in failures:
            print(f"FAIL {msg}", file=sys.stderr)
        return EXIT_ASSERTION
    print(f"wrote convergence.csv ({len(rows)} rows), all error trends decreasing")
    return EXIT_OK


def _verify_checks(cfg, opts):
    scale = cfg.build_scale()
    speed = cfg.build_speed()
    part = cfg.build_partition()
    chain = build_trace_chain(part, scale, speed)
    op = generator_matrix(chain)
    sim = cfg.simulation()
    capc = cfg.capacity()
    seed = opts.seed if opts.seed is not None else sim["seed"]
    checks = []

    def record(name, value, threshold, passed, detail=""):
        checks.append({"name": name, "value": float(value),
                       "threshold": float(threshold), "passed": bool(passed),
                       "detail": detail})

    tol = 1e-12

    ident = adjoint_identities_check(part, speed, trials=100, seed=seed)
    record("transfer_identities", ident.max_deviation, tol,
           ident.max_deviation <= tol,
           "adjoint, left inverse and isometry deviations over 100 random trials")

    rowsum = float(np.max(np.abs(op.matvec(np.ones(chain.n_states)))))
    scale_mag = max(1.0, float(np.max(chain.rates)))
    record("generator_row_sums", rowsum, tol * scale_mag,
           rowsum <= tol * scale_mag, "sup |L 1|")

    det_bal = float(np.max(np.abs(chain.masses[:-1] * op.sup
                                  - chain.masses[1:] * op.sub)))
    record("detailed_balance", det_bal, tol * scale_mag,
           det_bal <= tol * scale_mag, "m_i L(i,i+1) - m_{i+1} L(i+1,i)")

    lam = 1.0
    g1 = solve_shifted(op, lam, np.ones(chain.n_states))
    dev = float(np.max(np.abs(lam * g1 - 1.0)))
    record("resolvent_conservation", dev, tol, dev <= tol, "lam G_lam 1 = 1")

    mass_dev = abs(chain.total_mass - speed.total_mass)
    record("mass_conservation", mass_dev, tol, mass_dev <= tol,
           "sum of cell masses equals the full measure")

    # Holding-time KS and jump-direction checks on a moderately long path.
    path = simulate_path(chain, "stationary", 50.0, seed, stream=101)
    holdings = holding_times_by_state(path)
    worst_p = 1.0
    for s, sample in holdings.items():
        if sample.size >= 50:
            ks = stats.kstest(sample, "expon", args=(0.0, 1.0 / chain.rates[s]))
            worst_p = min(worst_p, ks.pvalue)
    record("holding_time_ks", worst_p, 1e-3, worst_p > 1e-3,
           "worst per-state KS p-value against the exponential law")

    # Capacity bound: MC hitting probability against e^T sqrt(m(I)) Cap^(1/2).
    lo, hi = capc["window"]
    targets = np.nonzero((chain.grid >= lo) & (chain.grid <= hi))[0]
    if targets.size:
        cap, _ = capacity(chain, targets)
        for horizon in capc["horizons"]:
            sample = ensemble_hitting(chain, targets, float(horizon),
                                      int(capc["replicas"]), seed + 7)
            est = sample.probability
            bound = (np.exp(horizon) * np.sqrt(speed.total_mass) * np.sqrt(cap)
                     + 4.0 * est.stderr)
            mc_prob = est.estimate * speed.total_mass
            record(f"capacity_bound_T{horizon:g}", mc_prob, bound,
                   mc_prob <= bound,
                   f"Cap={cap:.6g}, hits={est.estimate:.4f}")

    # Martingale residual for f = G_1 (projected cosine data).
    f = solve_shifted(op, 1.0, project(part, speed, CosineMode(1)))
    res = dynkin_martingale_residual(chain, f, min(0.5, sim["horizon"]),
                                     min(int(sim["replicas"]), 20000), seed + 11)
    record("martingale_residual", abs(res.estimate), 4.0 * res.stderr,
           abs(res.estimate) <= 4.0 * res.stderr,
           f"estimate {res.estimate:.3e} with stderr {res.stderr:.3e}")

    return checks


def cmd_verify(cfg, outdir, opts):
    cfg.require("scale", "partition")
    try:
        checks = _verify_checks(cfg, opts)
    except TraceChainError as exc:
        payload = {
            "provenance": _provenance(cfg, opts.timestamp),
            "config": cfg.raw,
            "checks": [],
            "error": str(exc),
            "passed": False,
        }
        _write_json(os.path.join(outdir, "verify_report.json"), payload)
        raise
    passed = all(c["passed"] for c in checks)
    payload = {
        "provenance": _provenance(cfg, opts.timestamp),
        "config": cfg.raw,
        "checks": checks,
        "passed": passed,
    }
    _write_json(os.path.join(outdir, "verify_report.json"), payload)
    for c in checks:
        status = "pass" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: value={c['value']:.3e} threshold={c['threshold']:.3e}")
    if not passed:
        return EXIT_ASSERTION
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tracechain",
        description="Markov chain approximations of reflected 1-d diffusions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("build", "build a trace chain and write it as JSON"),
        ("simulate", "simulate sample paths and write statistics"),
        ("converge", "run a resolvent-convergence sweep"),
        ("verify", "run the property suite and report pass/fail"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent sub-tasks")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit timestamps and zero wall-time columns")
        p.add_argument("--no-plots", action="store_true",
                       help="skip PNG figure rendering")
    return parser


_HANDLERS = {
    "build": cmd_build,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "verify": cmd_verify,
}


class _Options:
    def __init__(self, args):
        self.seed = args.seed
        self.threads = max(1, args.threads)
        self.timestamp = not args.no_timestamp
        self.plots = not args.no_plots


def main(argv=None):
    args = _build_parser().parse_args(argv)
    opts = _Options(args)
    try:
        cfg = load_config(args.config)
        outdir = args.out
        os.makedirs(outdir, exist_ok=True)
        # Apply the output section unless flags already disabled things.
        out_cfg = cfg.outputs()
        if not out_cfg.get("timestamp", True):
            opts.timestamp = False
        if not out_cfg.get("plots", True):
            opts.plots = False
        return _HANDLERS[args.command](cfg, outdir, opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except TraceChainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
