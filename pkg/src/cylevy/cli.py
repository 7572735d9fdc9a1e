"""Batch command line front end.

Subcommands ``check``, ``simulate``, ``invariant``, ``irreducibility`` and
``heat`` read a JSON config, write CSV/JSON artifacts into ``--out`` and
exit with a code that shell pipelines can branch on.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import ConfigError, config_sha256, resolve_config
from .criteria import cylindrical_criterion, ou_criterion, sufficient_check
from .cylindrical import (
    Ball,
    OUModel,
    convergence_to_invariant,
    h_norm_profile,
    irreducibility_estimate,
    sample_invariant,
)
from .heat_example import HeatScenario, run_scenario
from .levy_measure import measure_from_record
from .model import beta_from_record, spectrum_from_record
from .numerics import QuadratureError, Verdict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_INCONCLUSIVE = 4
EXIT_NUMERIC = 5


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


class _Run:
    def __init__(self, command, cfg, out, threads):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.sha = config_sha256(cfg)
        self.files = []
        self.results = {}
        os.makedirs(out, exist_ok=True)

    @property
    def seed(self) -> int:
        return int(self.cfg["seed"])

    def write_csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write(f"# seed={self.seed} config_sha256={self.sha}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        with open(os.path.join(self.out, name), "w", newline="") as fh:
            fh.write(buf.getvalue())
        self.files.append(name)

    def write_json(self, name, obj):
        with open(os.path.join(self.out, name), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        self.files.append(name)

    def manifest(self, status):
        self.write_json("manifest.json", {
            "command": self.command,
            "config": self.cfg,
            "config_sha256": self.sha,
            "seed": self.seed,
            "threads": self.threads,
            "version": __version__,
            "status": status,
            "results": self.results,
            "outputs": sorted(self.files),
        })


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _model(cfg) -> OUModel:
    spectrum = spectrum_from_record(cfg["model"])
    measure = measure_from_record(cfg["measure"])
    return OUModel(spectrum, measure, eps=float(cfg["eps"]), gaussian=bool(cfg["gaussian"]))


def cmd_check(run: _Run) -> int:
    c = run.cfg["check"]
    model = _model(run.cfg)
    m, sp = model.measure, model.spectrum
    cyl = cylindrical_criterion(m, sp, n_max=c["n_max"], tol=c["tol"])
    ou = ou_criterion(m, sp, n_max=c["n_max"], tol=c["tol"], t0=c["t0"])
    suff = sufficient_check(m, sp, n_max=c["n_max"], tol=c["tol"])
    report = {"cylindrical": cyl.to_dict(), "ou": ou.to_dict(), "sufficient": suff.to_dict()}
    run.write_json("check_report.json", report)
    run.write_csv("cylindrical_terms.csv", ["n", "term", "partial_sum"], cyl.rows())
    run.write_csv("ou_terms.csv", ["n", "term", "partial_sum"], ou.rows())
    run.results = {"cylindrical": cyl.verdict.verdict.value, "ou": ou.verdict.verdict.value,
                   "sufficient_applies": suff.applies}
    v = ou.verdict.verdict
    if v is Verdict.CONVERGED or suff.applies:
        return EXIT_OK
    return EXIT_DIVERGED if v is Verdict.DIVERGED else EXIT_INCONCLUSIVE


_STATS_HEADER = ["quantity", "n_or_N", "time", "value"]


def cmd_simulate(run: _Run) -> int:
    c = run.cfg["simulate"]
    model = _model(run.cfg)
    grid = sorted(set(int(n) for n in c["N_grid"]))
    st = h_norm_profile(model, c["x0"], c["t"], grid, c["M"], run.seed, run.threads)
    run.write_csv("simulate_stats.csv", _STATS_HEADER, st.rows())
    run.results = {"median_S": {str(N): st.median(N) for N in grid}}
    return EXIT_OK


def cmd_invariant(run: _Run) -> int:
    c = run.cfg["invariant"]
    model = _model(run.cfg)
    suff = sufficient_check(model.measure, model.spectrum)
    run.results["sufficient_applies"] = suff.applies
    if model.is_stable:
        st = convergence_to_invariant(model, c["x0"], sorted(c["times"]), c["N_modes"], c["M"],
                                      run.seed, run.threads)
        run.write_csv("invariant_ks.csv", _STATS_HEADER, st.rows())
        run.results["ks_last"] = [float(v) for v in st.ks[-1]]
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            X = sample_invariant(model, c["N_modes"], c["M"], run.seed, run.threads)
        S = np.cumsum(X * X, axis=1)
        q = np.quantile(S, [0.25, 0.5, 0.75], axis=0)
        rows = [(name, n + 1, math.nan, float(q[i, n]))
                for n in range(c["N_modes"]) for i, name in enumerate(("S_q25", "S_q50", "S_q75"))]
        run.write_csv("invariant_stats.csv", _STATS_HEADER, rows)
        run.results["note"] = "invariant law sampled by long-horizon stepping"
    return EXIT_OK


def cmd_irreducibility(run: _Run) -> int:
    c = run.cfg["irreducibility"]
    model = _model(run.cfg)
    ball = Ball(tuple(c["ball"]["center"]), float(c["ball"]["radius"]))
    res = irreducibility_estimate(model, c["x0"], ball, c["t"], c["N_modes"], c["M"],
                                  run.seed, run.threads)
    run.write_json("irreducibility.json", res.to_dict())
    run.write_csv("irreducibility.csv", _STATS_HEADER, res.rows())
    run.results = {"label": res.label, "wilson_low": res.wilson_low, "p_hat": res.p_hat}
    return EXIT_OK


def cmd_heat(run: _Run) -> int:
    c = run.cfg["heat"]
    measure = measure_from_record(run.cfg["measure"])
    beta = beta_from_record(run.cfg["model"]["beta"])
    s = HeatScenario(d=c["d"], N_modes=c["N_modes"], measure=measure, beta=beta,
                     x0=tuple(c["x0"]), grid_n=c["grid_n"], eps=float(run.cfg["eps"]))
    res = run_scenario(s, sorted(c["times"]), c["M"], run.seed, run.threads, n_max=c["n_max"])
    header = [f"xi_{i + 1}" for i in range(s.d)] + ["u"]
    for i, snap in enumerate(res.snapshots):
        run.write_csv(f"heat_snapshot_{i:03d}.csv", header, snap.rows())
    rows = [r for st in res.stats for r in st.rows()]
    run.write_csv("heat_stats.csv", _STATS_HEADER, rows)
    run.write_json("heat_criterion.json", res.criterion.to_dict())
    run.results = {"ou_verdict": res.criterion.verdict.verdict.value,
                   "snapshot_times": [snap.t for snap in res.snapshots]}
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "invariant": cmd_invariant,
    "irreducibility": cmd_irreducibility,
    "heat": cmd_heat,
}


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cylevy", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON config file")
        s.add_argument("--seed", type=_seed, default=None, help="master seed (overrides config)")
        s.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        s.add_argument("--out", default="out", help="output directory")
    return p


def _error(kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = resolve_config(raw, args.seed)
        # build the model eagerly so malformed records are config errors
        _model(cfg)
        if args.command == "irreducibility" and "ball" not in cfg["irreducibility"]:
            raise ConfigError("irreducibility: 'ball' is required")
    except (OSError, json.JSONDecodeError, ConfigError, ValueError, KeyError, TypeError) as exc:
        _error("config", f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG
    run = _Run(args.command, cfg, args.out, args.threads)
    try:
        code = COMMANDS[args.command](run)
    except (QuadratureError, FloatingPointError, RuntimeError, ArithmeticError) as exc:
        _error("numerical", f"{type(exc).__name__}: {exc}")
        run.manifest("numerical failure")
        return EXIT_NUMERIC
    except ValueError as exc:
        _error("config", f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG
    run.manifest({EXIT_OK: "ok", EXIT_DIVERGED: "diverged",
                  EXIT_INCONCLUSIVE: "inconclusive"}.get(code, str(code)))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
