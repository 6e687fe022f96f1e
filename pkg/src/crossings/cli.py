"""Batch front end: experiment configs, built-in suites, seeded reports.

Config files are TOML.  Top level: ``seed`` (required unless --seed is
given), optional ``out``; then one ``[[experiment]]`` table per run, each
with a ``kind`` from the registry (see --list) and that kind's parameters.
Example::

    seed = 42

    [[experiment]]
    kind = "stationarity"
    law = { kind = "gaussian", sigma = 1.0 }
    n_samples = 100000

Every experiment draws its own seed from the master seed by the index split
``SeedSequence(master, spawn_key=(index,))``, so verdicts are independent of
thread count and execution order.  Reports stream to ``report.jsonl`` (first
record carries the config hash and master seed), a human-readable summary
goes to ``summary.txt`` and stdout, and distribution-curve CSVs are written
next to them.  Exit code 0 when everything passed, 1 when anything failed or
aborted, 2 for config errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from . import finitelab as fl
from . import verify as V
from .laws import law_from_spec

OUT_ENV = "CROSSINGS_OUT"


class ConfigError(Exception):
    """Schema violation; message names the offending field."""


# ---------------------------------------------------------------------------
# experiment registry

def _law(spec, field="law"):
    if spec is None:
        raise ConfigError(f"missing field: {field}")
    try:
        return law_from_spec(spec)
    except KeyError as err:
        raise ConfigError(f"missing field: {err.args[0]}") from err
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad {field}: {err}") from err


def _need(exp, *names):
    for name in names:
        if name not in exp:
            raise ConfigError(f"experiment {exp.get('kind', '?')!r}: missing field: {name}")
    return [exp[name] for name in names]


def _run_stationarity(exp, seed):
    (n,) = _need(exp, "n_samples")
    return [V.stationarity_test(_law(exp.get("law")), int(n), seed,
                                horizon=exp.get("horizon"),
                                tolerance=exp.get("tolerance"))]


def _run_alternation(exp, seed):
    (n,) = _need(exp, "n_samples")
    return [V.alternation_test(_law(exp.get("law")), int(n), seed,
                               horizon=exp.get("horizon"))]


def _run_lln(exp, seed):
    n, start = _need(exp, "n_crossings", "start")
    return [V.lln_overshoots(_law(exp.get("law")), int(n), float(start), seed,
                             tolerance=float(exp.get("tolerance", 0.02)))]


def _run_clt(exp, seed):
    n_steps, n_rep, start = _need(exp, "n_steps", "n_replicas", "start")
    return [V.clt_level_crossings(
        _law(exp.get("law")), int(n_steps), int(n_rep), float(start), seed,
        tolerance=float(exp.get("tolerance", 0.05)),
        mean_tolerance=float(exp.get("mean_tolerance", 0.02)))]


def _run_expected(exp, seed):
    levels, n = _need(exp, "levels", "n_excursions")
    return [V.expected_upcrossings(_law(exp.get("law")), list(levels), int(n),
                                   seed, horizon=exp.get("horizon"),
                                   tolerance=float(exp.get("tolerance", 0.05)))]


def _run_kac(exp, seed):
    window, n = _need(exp, "window", "n_excursions")
    return [V.kac_mc_test(_law(exp.get("law")), list(window), int(n), seed,
                          horizon=exp.get("horizon"),
                          tolerance=float(exp.get("tolerance", 0.05)))]


def _run_hopf(exp, seed):
    w1, w2, n = _need(exp, "window_1", "window_2", "n_entrances")
    return [V.hopf_ratio_test(_law(exp.get("law")),
                              [tuple(p) for p in w1], [tuple(p) for p in w2],
                              int(n), seed,
                              max_steps=int(exp.get("max_steps", 10**11)),
                              tolerance=float(exp.get("tolerance", 0.10)))]


def _run_cross_oracle(exp, seed):
    n_chains, n_states, n_events = _need(exp, "n_chains", "n_states", "n_events")
    return [V.cross_oracle_kernels(int(n_chains), int(n_states), int(n_events),
                                   seed, tolerance=float(exp.get("tolerance", 0.01)))]


def _run_exact(exp, seed):
    n_inst, n_states = _need(exp, "n_instances", "n_states")
    return V.exact_identity_reports(int(n_inst), int(n_states), seed,
                                    tol=float(exp.get("tol", 1e-10)),
                                    involution_tol=float(exp.get("involution_tol", 1e-12)))


def _run_finite_identities(exp, seed):
    if "chain" not in exp:
        raise ConfigError("experiment 'finite_identities': missing field: chain")
    try:
        chain, part = fl.chain_from_spec(exp["chain"])
    except KeyError as err:
        raise ConfigError(f"missing field: {err.args[0]}") from err
    except ValueError as err:
        raise ConfigError(f"bad chain: {err}") from err
    t0 = time.time()
    res = fl.identity_residuals(chain, part)
    tol = float(exp.get("tol", 1e-10))
    reports = []
    for name, resid in res.items():
        t = float(exp.get("involution_tol", 1e-12)) if name == "dual_involution" else tol
        reports.append(V.ExperimentReport(
            name=f"chain:{name}", law=f"supplied({chain.n} states)", seed=seed,
            sizes={"n_states": chain.n}, statistic=resid, target=0.0,
            tolerance=t, censor_rate=0.0,
            verdict="pass" if resid <= t else "fail",
            runtime_s=(time.time() - t0) / len(res), details={}))
    return reports


REGISTRY = {
    "stationarity": (_run_stationarity,
                     "one-step stationarity of the entrance chain into [0,inf)"),
    "alternation": (_run_alternation,
                    "overshoot alternation between the two sides of zero"),
    "lln_overshoots": (_run_lln,
                       "ergodic average of |overshoot| against its closed-form limit"),
    "clt_level_crossings": (_run_clt,
                            "normalized crossing counts against the half-normal law"),
    "expected_upcrossings": (_run_expected,
                             "unit expected level crossings per stationary cycle"),
    "kac_occupation": (_run_kac,
                       "occupation reconstruction of the Haar measure over cycles"),
    "hopf_ratio": (_run_hopf,
                   "visit-ratio test of the d>=2 orthant entrance chain (slow)"),
    "cross_oracle": (_run_cross_oracle,
                     "empirical subchain kernels vs the exact finite-chain kernels"),
    "exact_identities": (_run_exact,
                         "exact identity suite over seeded random finite chains"),
    "finite_identities": (_run_finite_identities,
                          "exact identity checks for one supplied chain table"),
}


# ---------------------------------------------------------------------------
# built-in suites

def _gauss():
    return {"kind": "gaussian", "sigma": 1.0}


def _lat2():
    return {"kind": "lattice", "entries": [[-1, "2/3"], [2, "1/3"]]}


def _rade():
    return {"kind": "lattice", "entries": [[-1, "1/2"], [1, "1/2"]]}


def _simple2d():
    q = "1/4"
    return {"kind": "lattice",
            "entries": [[[1, 0], q], [[-1, 0], q], [[0, 1], q], [[0, -1], q]]}


def builtin_suite(name: str, include_optional: bool = False) -> list[dict]:
    if name == "exact":
        return [
            {"kind": "exact_identities", "n_instances": 100, "n_states": 6},
            {"kind": "finite_identities",
             "chain": {"p": [["0", "1", "0"], ["0", "0", "1"], ["1", "0", "0"]],
                       "partition": [1, 2]}},
        ]
    if name == "mc-fast":
        return [
            {"kind": "stationarity", "law": _gauss(), "n_samples": 20000},
            {"kind": "stationarity", "law": _lat2(), "n_samples": 20000},
            {"kind": "alternation", "law": _gauss(), "n_samples": 20000},
            {"kind": "alternation", "law": _lat2(), "n_samples": 20000},
            {"kind": "lln_overshoots", "law": _rade(), "n_crossings": 2000,
             "start": 0.0, "tolerance": 0.05},
            {"kind": "lln_overshoots", "law": _lat2(), "n_crossings": 2000,
             "start": 0.0, "tolerance": 0.05},
            {"kind": "lln_overshoots", "law": _gauss(), "n_crossings": 2000,
             "start": 7.3, "tolerance": 0.05},
        ]
    if name == "mc-full":
        exps = [
            {"kind": "exact_identities", "n_instances": 100, "n_states": 6},
            {"kind": "stationarity", "law": _gauss(), "n_samples": 100000},
            {"kind": "alternation", "law": _gauss(), "n_samples": 100000},
            {"kind": "alternation", "law": _lat2(), "n_samples": 100000},
        ]
        for law in (_rade(), _lat2(), _gauss()):
            for start in (0.0, 37.0, -101.0) if law != _gauss() else (0.0, 7.3, -14.2):
                exps.append({"kind": "lln_overshoots", "law": law,
                             "n_crossings": 10000, "start": start})
        for law in (_rade(), _lat2(), _gauss()):
            exps.append({"kind": "clt_level_crossings", "law": law,
                         "n_steps": 10000, "n_replicas": 10000, "start": 0.0})
        for law in (_rade(), _lat2()):
            exps.append({"kind": "expected_upcrossings", "law": law,
                         "levels": [0, 1, 2, 5], "n_excursions": 1000000})
            exps.append({"kind": "kac_occupation", "law": law,
                         "window": [-3, -2, -1, 0, 1, 2, 3],
                         "n_excursions": 1000000})
        exps.append({"kind": "cross_oracle", "n_chains": 10, "n_states": 5,
                     "n_events": 100000})
        if include_optional:
            exps.append({"kind": "hopf_ratio", "law": _simple2d(),
                         "window_1": [[0, 0]], "window_2": [[1, 0]],
                         "n_entrances": 1000000, "max_steps": 10**11})
        return exps
    raise ConfigError(f"unknown suite {name!r} (choose exact, mc-fast, mc-full)")


# ---------------------------------------------------------------------------
# driver

def _child_seed(master: int, index: int) -> int:
    state = np.random.SeedSequence(master, spawn_key=(index,)).generate_state(2, np.uint64)
    return (int(state[0]) << 64) | int(state[1])


def _run_one(index: int, exp: dict, master_seed: int):
    kind = exp.get("kind")
    if kind is None:
        raise ConfigError(f"experiment #{index}: missing field: kind")
    if kind not in REGISTRY:
        raise ConfigError(f"experiment #{index}: unknown kind {kind!r}")
    runner, _ = REGISTRY[kind]
    return runner(exp, _child_seed(master_seed, index))


def run_experiments(experiments: list[dict], master_seed: int, out_dir: str,
                    threads: int = 1, config_bytes: bytes = b"") -> int:
    os.makedirs(out_dir, exist_ok=True)
    jsonl_path = os.path.join(out_dir, "report.jsonl")
    header = {
        "package": "crossings",
        "version": __version__,
        "master_seed": master_seed,
        "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
        "n_experiments": len(experiments),
    }
    reports = []
    exit_code = 0
    with open(jsonl_path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        fh.flush()
        try:
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    futures = [pool.submit(_run_one, i, exp, master_seed)
                               for i, exp in enumerate(experiments)]
                    batches = [f.result() for f in futures]
            else:
                batches = [_run_one(i, exp, master_seed)
                           for i, exp in enumerate(experiments)]
            for i, batch in enumerate(batches):
                for rep in batch:
                    reports.append(rep)
                    fh.write(json.dumps(rep.to_dict()) + "\n")
                    fh.flush()
                    _write_curves(rep, out_dir, len(reports))
        except KeyboardInterrupt:
            fh.flush()
            print("interrupted; partial results flushed", file=sys.stderr)
            return 1
    lines = _summary_lines(reports)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    if any(not r.passed for r in reports):
        exit_code = 1
    return exit_code


def _write_curves(rep, out_dir: str, idx: int) -> None:
    curve = rep.details.get("curve")
    if not curve:
        return
    path = os.path.join(out_dir, f"clt_curve_{idx:03d}.csv")
    with open(path, "w") as fh:
        fh.write(f"# {rep.name} law={rep.law} seed={rep.seed}\n")
        fh.write("y,empirical_cdf,target_cdf\n")
        for y, e, t in zip(curve["y"], curve["empirical"], curve["target"]):
            fh.write(f"{y},{e},{t}\n")


def _summary_lines(reports) -> list[str]:
    w_name = max([len(r.name) for r in reports] + [10])
    w_law = max([len(r.law) for r in reports] + [6])
    lines = [f"{'experiment':<{w_name}}  {'law':<{w_law}}  verdict  "
             f"{'statistic':>12}  {'tolerance':>10}  {'censor':>8}  {'time':>7}"]
    for r in reports:
        lines.append(
            f"{r.name:<{w_name}}  {r.law:<{w_law}}  {r.verdict:<7}  "
            f"{r.statistic:>12.4e}  {r.tolerance:>10.3g}  "
            f"{r.censor_rate:>8.1e}  {r.runtime_s:>6.1f}s")
    n_pass = sum(r.passed for r in reports)
    lines.append(f"passed {n_pass}/{len(reports)}")
    return lines


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config not found: {path}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"config parse error in {path}: {err}") from err


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crossings",
        description="entrance-chain verification suites for random walks and finite chains")
    parser.add_argument("--list", action="store_true",
                        help="list available experiment kinds and exit")
    parser.add_argument("--config", metavar="PATH", help="TOML experiment config")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides the config seed)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads over independent experiments")
    parser.add_argument("--out", default=None,
                        help=f"output dir (default: ${OUT_ENV} or ./reports)")
    parser.add_argument("--optional", action="store_true",
                        help="include optional slow experiments in built-in suites")
    parser.add_argument("command", nargs="*", metavar="suite NAME",
                        help="run a built-in suite: exact, mc-fast, mc-full")
    args = parser.parse_args(argv)

    if args.list:
        for kind, (_, desc) in REGISTRY.items():
            print(f"{kind:<22} {desc}")
        return 0

    out_dir = args.out or os.environ.get(OUT_ENV) or "reports"
    try:
        if args.config:
            cfg = _load_config(args.config)
            experiments = cfg.get("experiment", [])
            if not experiments:
                raise ConfigError("config has no [[experiment]] tables")
            seed = args.seed if args.seed is not None else cfg.get("seed")
            if seed is None:
                raise ConfigError("missing field: seed (config or --seed)")
            out_dir = args.out or cfg.get("out") or out_dir
            with open(args.config, "rb") as fh:
                config_bytes = fh.read()
            return run_experiments(experiments, int(seed), out_dir,
                                   threads=args.threads, config_bytes=config_bytes)
        if args.command:
            if args.command[0] != "suite" or len(args.command) != 2:
                raise ConfigError("usage: crossings suite {exact|mc-fast|mc-full}")
            if args.seed is None:
                raise ConfigError("missing field: seed (--seed is required for suites)")
            experiments = builtin_suite(args.command[1], include_optional=args.optional)
            blob = json.dumps({"suite": args.command[1],
                               "experiments": experiments}).encode()
            return run_experiments(experiments, args.seed, out_dir,
                                   threads=args.threads, config_bytes=blob)
        parser.print_help()
        return 2
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
