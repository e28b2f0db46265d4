"""Command-line driver: ``subspace-consensus {run,check,sweep}``.

Exit codes: 0 when every requested check passed, 1 on any violation, 2 on a
malformed scenario or bad arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as an
from . import geometry as geo
from .dynamics import ExecutionTrace, WeightError, run
from .scenario import ConfigError, ScenarioConfig, dump_config, load_config, write_trace_csv

log = logging.getLogger("subspace_consensus")

TRACE_FILE = "trace.csv"
METRICS_FILE = "metrics.csv"
MANIFEST_FILE = "manifest.json"
REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.txt"
SWEEP_FILE = "sweep.json"


# ---------------------------------------------------------------------------
# verifier registry

def _k(cfg: ScenarioConfig, params: dict) -> int:
    k = params.get("k", cfg.adversary.k)
    if k is None:
        raise ValueError("verifier needs k (set adversary.k or the verifier's k)")
    return int(k)


def _tol(params, default):
    return float(params.get("tol", default))


def _v_weights(cfg, trace, params):
    return an.verify_weights(trace())


def _v_nonexpansion(cfg, trace, params):
    return an.verify_non_expansion(trace(), tol=_tol(params, 1e-9))


def _v_halfspace_formula(cfg, trace, params):
    return an.verify_halfspace_formula(
        trials=int(params.get("trials", 100)),
        seed=int(params.get("seed", cfg.adversary.seed)),
        samples=int(params.get("samples", 100_000)),
        d=int(params.get("d", max(cfg.d, 1))),
        tol=_tol(params, 1e-3),
    )


def _v_halfspace_zone(cfg, trace, params):
    return an.verify_halfspace_zone(
        trace(), trials=int(params.get("trials", 50)), seed=int(params.get("seed", cfg.adversary.seed)),
        tol=_tol(params, 1e-9),
    )


def _v_segment_bounds(cfg, trace, params):
    return an.verify_segment_bounds(trials=int(params.get("trials", 50)), seed=int(params.get("seed", cfg.adversary.seed)))


def _v_volume_contraction(cfg, trace, params):
    return an.verify_volume_contraction(trace(), tol=_tol(params, 1e-9))


def _v_decomposition(cfg, trace, params):
    return an.verify_decomposition(trace(), tol=_tol(params, 1e-12))


def _v_projection_validity(cfg, trace, params):
    return an.verify_projection_validity(trace(), tol=_tol(params, 1e-10))


def _v_thickness_contraction(cfg, trace, params):
    return an.verify_thickness_contraction(trace(), tol=_tol(params, 1e-9))


def _v_product_reduction(cfg, trace, params):
    return an.verify_product_reduction(
        cfg.n,
        _k(cfg, params),
        trials=int(params.get("trials", 1000)),
        seed=int(params.get("seed", cfg.adversary.seed)),
        length=params.get("length"),
        extra_edge_prob=cfg.adversary.extra_edge_prob,
    )


def _v_impossibility(cfg, trace, params):
    if "s" in params:
        s = int(params["s"])
    elif cfg.adversary.kind == "impossibility":
        s = cfg.adversary.k - 1
    else:
        s = 0
    return an.verify_impossibility(cfg.n, s, cfg.rounds, cfg.rule)


def _v_convergence_bound(cfg, trace, params):
    return an.run_convergence_bound(
        cfg.adversary, cfg.rule, cfg.x0, float(params.get("eps", 1e-2)), cfg.relay_rounds, rounds=cfg.rounds
    )


def _v_limit_subspace(cfg, trace, params):
    return an.verify_limit_subspace(
        trace(), _k(cfg, params), window=int(params.get("window", 20)), tol=_tol(params, 1e-6)
    )


VERIFIERS = {
    "weights": _v_weights,
    "nonexpansion": _v_nonexpansion,
    "lemma1": _v_halfspace_formula,
    "lemma2": _v_halfspace_zone,
    "lemma6": _v_segment_bounds,
    "lemma7": _v_volume_contraction,
    "lemma9": _v_decomposition,
    "lemma10": _v_projection_validity,
    "lemma13": _v_thickness_contraction,
    "theorem1": _v_product_reduction,
    "theorem2": _v_impossibility,
    "theorem3": _v_convergence_bound,
    "theorem4": _v_limit_subspace,
}

# descriptive names accepted in scenarios; reports keep the short claim id
ALIASES = {
    "halfspace_formula": "lemma1",
    "halfspace_zone": "lemma2",
    "segment_bounds": "lemma6",
    "volume_contraction": "lemma7",
    "decomposition": "lemma9",
    "projection_validity": "lemma10",
    "thickness_contraction": "lemma13",
    "product_reduction": "theorem1",
    "impossibility": "theorem2",
    "convergence_bound": "theorem3",
    "limit_subspace": "theorem4",
}


# ---------------------------------------------------------------------------
# outputs

def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def round_metrics(trace: ExecutionTrace) -> list[dict]:
    """Per-state metrics; round-specific columns are empty for ``t = 0``."""
    rows = []
    x0 = trace.states[0]
    rows.append(dict(t=0, volume=geo.hull_volume(x0), thickness=None, diameter=geo.diameter(x0),
                     affine_dim=geo.affine_dim(x0), alpha=None, m_set="", edges=""))
    for rec in trace.records:
        cur = trace.after(rec.t)
        thick = None
        if rec.m_set:
            proj = geo.direction_projection(trace.before(rec.t)[list(rec.m_set)])
            thick = geo.thickness(cur, proj)
        rows.append(dict(
            t=rec.t,
            volume=geo.hull_volume(cur),
            thickness=thick,
            diameter=geo.diameter(cur),
            affine_dim=geo.affine_dim(cur),
            alpha=rec.alpha,
            m_set=" ".join(map(str, rec.m_set)),
            edges=";".join(f"{i}>{j}" for i, j in rec.round.graph.edge_list()),
        ))
    return rows


def write_metrics_csv(path: Path, rows: list[dict]) -> None:
    cols = ["t", "volume", "thickness", "diameter", "affine_dim", "alpha", "m_set", "edges"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([
                r["t"], _fmt(r["volume"]), _fmt(r["thickness"]), _fmt(r["diameter"]),
                r["affine_dim"], _fmt(r["alpha"]), r["m_set"], r["edges"],
            ])


def _out_dir(cfg: ScenarioConfig, override: str | None) -> Path:
    if override:
        return Path(override)
    if cfg.output is not None:
        return cfg.output
    return Path("out")


def _manifest(cfg: ScenarioConfig, files: list[str], command: str) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": cfg.adversary.seed,
        "weights_seed": cfg.rule.seed,
        "n": cfg.n,
        "d": cfg.d,
        "rounds": cfg.rounds,
        "relay_rounds": cfg.relay_rounds,
        "files": files,
        "config": cfg.raw,
    }


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _report_info(rep: an.Report) -> dict:
    info = {}
    for key, val in rep.info.items():
        if key == "trace":
            continue
        if key == "ratios":
            val = {str(t): float(r) for t, r in val.items()}
        info[key] = val
    return info


# ---------------------------------------------------------------------------
# commands

def cmd_run(cfg: ScenarioConfig, out: Path) -> ExecutionTrace:
    out.mkdir(parents=True, exist_ok=True)
    trace = run(cfg.adversary, cfg.rule, cfg.x0, cfg.rounds, cfg.relay_rounds)
    write_trace_csv(out / TRACE_FILE, trace.states)
    write_metrics_csv(out / METRICS_FILE, round_metrics(trace))
    (out / "scenario.yaml").write_text(dump_config(cfg))
    _write_json(out / MANIFEST_FILE, _manifest(cfg, [TRACE_FILE, METRICS_FILE, "scenario.yaml"], "run"))
    return trace


def run_checks(cfg: ScenarioConfig, tol: float | None = None) -> list[an.Report]:
    """Run every verifier of ``cfg`` on one fresh trace; errors become failed reports."""
    unknown = [v.id for v in cfg.verifiers if ALIASES.get(v.id, v.id) not in VERIFIERS]
    if unknown:
        known = sorted(VERIFIERS) + sorted(ALIASES)
        raise ConfigError("verifiers", f"unknown verifier id(s) {unknown}; known: {known}")
    cache = {}

    def trace():
        if "trace" not in cache:
            cache["trace"] = run(cfg.adversary, cfg.rule, cfg.x0, cfg.rounds, cfg.relay_rounds)
        return cache["trace"]

    reports = []
    for v in cfg.verifiers:
        params = dict(v.params)
        if tol is not None:
            params["tol"] = tol
        try:
            rep = VERIFIERS[ALIASES.get(v.id, v.id)](cfg, trace, params)
        except WeightError as exc:
            rep = an.Report("weights")
            rep.flag(0, False, note=f"invalid weights: {exc}")
        except ValueError as exc:
            rep = an.Report(ALIASES.get(v.id, v.id))
            rep.flag(0, False, note=f"precondition failed: {exc}")
        reports.append(rep)
    return reports


def write_check(out: Path, cfg: ScenarioConfig, reports: list[an.Report]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    records = [r.as_dict() for rep in reports for r in rep.records]
    payload = {
        "passed": all(rep.passed for rep in reports),
        "claims": [
            {
                "claim": rep.claim,
                "passed": rep.passed,
                "checks": len(rep.records),
                "violations": len(rep.violations),
                "skipped": len(rep.skipped),
                "worst_margin": rep.worst_margin,
                "info": _report_info(rep),
            }
            for rep in reports
        ],
        "records": records,
    }
    _write_json(out / REPORT_FILE, payload)
    (out / SUMMARY_FILE).write_text("\n".join(rep.summary() for rep in reports) + "\n")
    _write_json(out / MANIFEST_FILE, _manifest(cfg, [REPORT_FILE, SUMMARY_FILE], "check"))


def cmd_check(cfg: ScenarioConfig, out: Path, tol: float | None = None) -> list[an.Report]:
    reports = run_checks(cfg, tol)
    write_check(out, cfg, reports)
    return reports


def cmd_sweep(cfg: ScenarioConfig, out: Path, seeds: int, tol: float | None = None) -> dict:
    """Check ``seeds`` seed-shifted copies of the scenario and aggregate."""
    if seeds < 1:
        raise ValueError(f"seeds must be >= 1, got {seeds}")
    per_claim: dict[str, dict] = {}
    ratios: list[float] = []
    for offset in range(seeds):
        cfg_i = cfg.with_seed_offset(offset)
        reports = cmd_check(cfg_i, out / f"seed_{offset:04d}", tol)
        for rep in reports:
            agg = per_claim.setdefault(rep.claim, {"runs": 0, "failed_runs": 0, "violations": 0, "worst_margin": None})
            agg["runs"] += 1
            agg["failed_runs"] += int(not rep.passed)
            agg["violations"] += len(rep.violations)
            wm = rep.worst_margin
            if wm == wm and (agg["worst_margin"] is None or wm < agg["worst_margin"]):
                agg["worst_margin"] = wm
            if rep.claim == "lemma7":
                ratios.extend(float(r) for r in rep.info.get("ratios", {}).values())
    summary = {
        "seeds": seeds,
        "passed": all(a["failed_runs"] == 0 for a in per_claim.values()),
        "claims": per_claim,
    }
    if ratios:
        summary["volume_ratio"] = {
            "count": len(ratios),
            "min": min(ratios),
            "median": statistics.median(ratios),
            "max": max(ratios),
        }
    _write_json(out / SWEEP_FILE, summary)
    return summary


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subspace-consensus", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("run", "simulate a scenario and write trace, metrics and manifest"),
        ("check", "run the scenario's verifiers on a fresh trace"),
        ("sweep", "run the checks over a range of seeds and aggregate"),
    ]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="scenario YAML file")
        sp.add_argument("--out", help="output directory (default: scenario 'output' or ./out)")
        if name != "run":
            sp.add_argument("--tol", type=float, help="override every verifier tolerance")
        if name == "sweep":
            sp.add_argument("--seeds", type=int, default=10, help="number of seeds (default 10)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        out = _out_dir(cfg, args.out)
        if args.command == "run":
            trace = cmd_run(cfg, out)
            print(f"wrote {trace.rounds} rounds to {out}")
            return 0
        if args.command == "check":
            reports = cmd_check(cfg, out, args.tol)
            for rep in reports:
                print(rep.summary())
            return 0 if all(rep.passed for rep in reports) else 1
        summary = cmd_sweep(cfg, out, args.seeds, args.tol)
        for claim, agg in summary["claims"].items():
            print(f"{claim:<10} runs={agg['runs']} failed_runs={agg['failed_runs']} "
                  f"violations={agg['violations']} worst_margin={agg['worst_margin']}")
        if "volume_ratio" in summary:
            vr = summary["volume_ratio"]
            print(f"volume ratio: min={vr['min']:.4g} median={vr['median']:.4g} max={vr['max']:.4g} (n={vr['count']})")
        return 0 if summary["passed"] else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (WeightError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
