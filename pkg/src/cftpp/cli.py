"""``cftpp`` command line: samplers, counterfactuals, epidemic tools and batch experiments.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
Data goes to files or stdout; progress and diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cf_poisson import counterfactual_poisson, sample_plausible_rejections
from .errors import CftppError, ConfigError
from .hawkes import DEFAULT_EVENT_CAP, ORIGINS, counterfactual_hawkes_trace, parse_params, sample_hawkes
from .intensity import ConstantIntensity, intensity_from_config
from .randomness import Label, make_stream
from .thinning import lewis_sample, read_events_csv, write_events_csv, write_record_json


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- helpers

def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _prepare_file(path: str, force: bool) -> Path:
    p = Path(path)
    if p.exists() and not force:
        raise UsageError(f"{p} exists; pass --force to overwrite")
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _prepare_dir(path: str, force: bool) -> Path:
    p = Path(path)
    if p.exists():
        if not p.is_dir():
            raise UsageError(f"{p} exists and is not a directory")
        if any(p.iterdir()) and not force:
            raise UsageError(f"{p} is not empty; pass --force to overwrite")
    p.mkdir(parents=True, exist_ok=True)
    return p


def _read_json(text_or_path: str):
    """Inline JSON (starting with ``{``) or a path to a JSON file."""
    try:
        if text_or_path.lstrip().startswith("{"):
            return json.loads(text_or_path)
        return json.loads(Path(text_or_path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {text_or_path!r}: {exc}") from exc


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _g(v: float) -> str:
    return "inf" if math.isinf(v) else repr(float(v))


# ---------------------------------------------------------------- point processes

def cmd_simulate_poisson(a) -> None:
    if a.intensity:
        lam = intensity_from_config(_read_json(a.intensity), a.rbf_form)
    elif a.kind == "constant":
        if a.rate is None:
            raise UsageError("--kind constant needs --rate")
        lam = ConstantIntensity(a.rate)
    else:
        raise UsageError("--kind rbf needs --intensity <json>")
    lam_max = a.lambda_max if a.lambda_max is not None else lam.upper_bound(a.horizon)
    record = lewis_sample(lam, lam_max, a.horizon, make_stream(a.seed, (Label.REALIZATION, 0)))
    out = _prepare_file(a.out, a.force)
    write_events_csv(out, record.accepted)
    if a.record:
        write_record_json(_prepare_file(a.record, a.force), record)
    _log(f"{len(record.accepted)} events written to {out}")


def cmd_simulate_hawkes(a) -> None:
    params = parse_params(a.params)
    lam_max = a.lambda_max if a.lambda_max is not None else params.peak()
    seq, assignment = sample_hawkes(params, lam_max, a.horizon,
                                    make_stream(a.seed, (Label.REALIZATION, 0)), a.event_cap)
    out = _prepare_file(a.out, a.force)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "parent"])
        for t, p in zip(seq.times.tolist(), assignment.parents.tolist()):
            w.writerow([repr(t), "" if p < 0 else p])
    _log(f"{len(seq)} events written to {out}")


def cmd_cf_poisson(a) -> None:
    lam_m = intensity_from_config(_read_json(a.factual), a.rbf_form)
    lam_cf = intensity_from_config(_read_json(a.counterfactual), a.rbf_form)
    observed = read_events_csv(a.observed, a.horizon)
    out = _prepare_dir(a.out, a.force)
    shared = None
    if a.share_rejections:
        shared = sample_plausible_rejections(lam_m, observed, a.lambda_max, a.horizon,
                                             make_stream(a.seed, (Label.REALIZATION, 0)))
    with open(out / "counterfactual.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "t"])
        for c in range(a.replicates):
            s = make_stream(a.seed, (Label.REALIZATION, 0), (Label.REPLICATE, c))
            seq = counterfactual_poisson(lam_m, lam_cf, observed, a.lambda_max, a.horizon, s,
                                         a.mode, a.k, rejections=shared)
            w.writerows((c, repr(t)) for t in seq.times.tolist())
    _write_json(out / "meta.json", {"command": "cf-poisson", "seed": a.seed, "replicates": a.replicates,
                                    "lambda_max": a.lambda_max, "horizon": a.horizon, "mode": a.mode,
                                    "share_rejections": a.share_rejections})
    _log(f"{a.replicates} counterfactual realizations written to {out}")


def cmd_cf_hawkes(a) -> None:
    p_m, p_cf = parse_params(a.factual), parse_params(a.counterfactual)
    observed = read_events_csv(a.observed, a.horizon)
    lam_max = a.lambda_max if a.lambda_max is not None else max(p_m.peak(), p_cf.peak())
    out = _prepare_dir(a.out, a.force)
    n_trunc = 0
    with open(out / "counterfactual.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "t", "origin"])
        for c in range(a.replicates):
            s = make_stream(a.seed, (Label.REALIZATION, 0), (Label.REPLICATE, c))
            tr = counterfactual_hawkes_trace(p_m, p_cf, observed, lam_max, a.horizon, s, a.mode, a.k,
                                             a.event_cap)
            n_trunc += tr.truncated
            w.writerows((c, repr(t), ORIGINS[o]) for t, o in zip(tr.events.times.tolist(), tr.origin.tolist()))
    _write_json(out / "meta.json", {"command": "cf-hawkes", "seed": a.seed, "replicates": a.replicates,
                                    "lambda_max": lam_max, "horizon": a.horizon, "mode": a.mode,
                                    "n_truncated": n_trunc})
    if n_trunc:
        _log(f"warning: {n_trunc} realizations hit the event cap and were truncated")
    _log(f"{a.replicates} counterfactual realizations written to {out}")


# ---------------------------------------------------------------- epidemics

def _geography(a):
    from .sir import bundled_geography, load_geography
    return load_geography(a.geography) if a.geography else bundled_geography()


def _probs(a):
    from .sir import SbmProbabilities
    return SbmProbabilities.from_dict(_read_json(a.probs)) if a.probs else SbmProbabilities()


def _sir_params(a):
    from .sir import SirParams
    return SirParams(a.beta, a.delta)


def cmd_sir_simulate(a) -> None:
    from .sir import generate_network, sample_outbreak, seed_nodes
    from .sir.epidemic import write_network_csv, write_nodes_csv, write_outbreak_csv
    geo, params = _geography(a), _sir_params(a)
    net = generate_network(geo, _probs(a), make_stream(a.seed, (Label.NETWORK, 0)))
    seeds = seed_nodes(geo, net, make_stream(a.seed, (Label.SEEDING, 0)))
    ob = sample_outbreak(net, params, seeds, a.horizon, make_stream(a.seed, (Label.REALIZATION, 0)))
    out = _prepare_dir(a.out, a.force)
    write_outbreak_csv(out / "outbreak.csv", ob, net)
    write_network_csv(out / "edges.csv", net)
    write_nodes_csv(out / "nodes.csv", net)
    _write_json(out / "meta.json", {"command": "sir simulate", "seed": a.seed, "horizon": a.horizon,
                                    "beta": params.beta, "delta": params.delta,
                                    "n_nodes": net.n_nodes, "n_edges": int(net.edges.shape[0]),
                                    "infected": ob.size})
    _log(f"outbreak with {ob.size} infections on {net.n_nodes} nodes written to {out}")


def cmd_sir_counterfactual(a) -> None:
    from .sir import apply_intervention, counterfactual_outbreak, intervention_from_config
    from .sir.epidemic import read_network_csv, read_outbreak_csv, write_outbreak_csv
    src = Path(a.observed)
    for name in ("outbreak.csv", "edges.csv", "nodes.csv"):
        if not (src / name).exists():
            raise UsageError(f"{src} lacks {name}; pass the output directory of 'sir simulate'")
    horizon = a.horizon
    if horizon is None:
        meta = src / "meta.json"
        horizon = json.loads(meta.read_text())["horizon"] if meta.exists() else math.inf
    params = _sir_params(a)
    iv = intervention_from_config(_read_json(a.intervention)) if a.intervention else None
    net = read_network_csv(src / "edges.csv", src / "nodes.csv")
    ob = read_outbreak_csv(src / "outbreak.csv", horizon)
    ob.validate()
    out = _prepare_dir(a.out, a.force)
    rows = []
    for c in range(a.replicates):
        s = make_stream(a.seed, (Label.REALIZATION, 0), (Label.REPLICATE, c))
        net_cf, rates, act = apply_intervention(iv, ob, net, params, s.child(Label.INTERVENTION, 0))
        cf = counterfactual_outbreak(net, net_cf, params.beta, rates, ob, params, horizon, s, a.mode, a.k)
        write_outbreak_csv(out / f"cf_{c}.csv", cf, net)
        rows.append((c, _g(act), cf.size, ob.size, repr(1 - cf.size / ob.size)))
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "activation_time", "cf_infected", "observed_infected", "reduction"])
        w.writerows(rows)
    _write_json(out / "meta.json", {"command": "sir counterfactual", "seed": a.seed, "horizon": horizon,
                                    "intervention": _read_json(a.intervention) if a.intervention else None,
                                    "replicates": a.replicates})
    _log(f"mean reduction {np.mean([float(r[4]) for r in rows]):.3f} over {a.replicates} replicates")


def cmd_sir_r0(a) -> None:
    from .sir import estimate_r0, generate_network
    from .sir.calibration import WHO_R0
    net = generate_network(_geography(a), _probs(a), make_stream(a.seed, (Label.NETWORK, 0)))
    r0 = estimate_r0(net, _sir_params(a), a.runs, make_stream(a.seed, (Label.REPLICATE, 0)))
    out = _prepare_file(a.out, a.force)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["country", "mean", "ci_low", "ci_high", "target"])
        for c, (m, lo, hi) in r0.items():
            w.writerow([c, repr(m), repr(lo), repr(hi), WHO_R0.get(c, "")])
    for c, (m, lo, hi) in r0.items():
        _log(f"{c}: R0 {m:.3f} ({lo:.3f} - {hi:.3f})")


def cmd_sir_calibrate(a) -> None:
    from .sir import calibrate
    from .sir.calibration import WHO_R0
    grid = _read_json(a.grid)
    if not isinstance(grid, dict):
        raise ConfigError("grid must map probability fields to lists of values")
    targets = _read_json(a.targets) if a.targets else WHO_R0
    best, table = calibrate(_geography(a), targets, grid, make_stream(a.seed), _sir_params(a),
                            a.runs, _probs(a))
    out = _prepare_dir(a.out, a.force)
    with open(out / "calibration.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(table[0]))
        w.writeheader()
        w.writerows(table)
    from dataclasses import asdict
    _write_json(out / "best_probs.json", asdict(best))
    _log(f"best probabilities written to {out / 'best_probs.json'}")


# ---------------------------------------------------------------- experiments and validation

def _scenario_source(name: str) -> str:
    """A path, or the name of a bundled config (``fig2a_hawkes_up`` or ``fig2a_hawkes_up.json``)."""
    if Path(name).exists() or name.lstrip().startswith("{"):
        return name
    from importlib import resources
    stem = name[:-5] if name.endswith(".json") else name
    bundled = resources.files("cftpp") / "configs" / f"{stem}.json"
    if bundled.is_file():
        return str(bundled)
    raise UsageError(f"no such config file or bundled config: {name}")


def cmd_experiment_run(a) -> None:
    from .experiments import ScenarioConfig, run_scenario, scenario_network, write_outputs
    raw = _read_json(_scenario_source(a.config))
    if not isinstance(raw, dict):
        raise ConfigError("scenario config must be a JSON object")
    if a.seed is not None:
        raw["seed"] = a.seed
    if raw.get("seed") is None:
        raise UsageError("no seed: pass --seed or set 'seed' in the config")
    cfg = ScenarioConfig.from_dict(raw)
    out = _prepare_dir(a.out, a.force)
    t0 = time.perf_counter()
    step = max(1, cfg.n_observed // 20)

    def progress(done, total):
        if done % step == 0 or done == total:
            _log(f"  {done}/{total} factual realizations")

    summary, results = run_scenario(cfg, a.threads, progress)
    wall = time.perf_counter() - t0
    net = scenario_network(cfg) if cfg.process == "sir" else None
    write_outputs(out, cfg, summary, results, wall, net)
    if a.figures:
        from .plotting import plot_summary
        plot_summary(summary, out / "figures", cfg.name)
    for g in summary.groups:
        _log(f"{g.name:>5} [{g.count_range[0]}, {g.count_range[1]}]: observed {g.mean_observed:.2f}, "
             f"counterfactual {g.mean_cf:.2f}, change {100 * g.rel_change:+.1f}%")
    if summary.n_truncated:
        _log(f"warning: {summary.n_truncated} counterfactual realizations were truncated at the event cap")


def cmd_validate(a) -> int:
    from .validation import run_checks
    results = run_checks(a.seed, quick=not a.full)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 2


# ---------------------------------------------------------------- parser

def _common(p, seed_required=True):
    p.add_argument("--seed", type=_seed, required=seed_required, help="master seed (64-bit)")
    p.add_argument("--force", action="store_true", help="overwrite existing output")


def _cf_opts(p):
    p.add_argument("--mode", choices=("exact", "montecarlo"), default="exact")
    p.add_argument("--k", type=_positive_int, default=100, help="Monte-Carlo abduction samples")


def _sir_opts(p):
    p.add_argument("--geography", help="geography JSON (default: bundled synthetic West Africa)")
    p.add_argument("--probs", help="SBM probabilities, JSON file or inline object")
    p.add_argument("--beta", type=float, default=1 / 15.3)
    p.add_argument("--delta", type=float, default=1 / 11.4)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cftpp", description="Counterfactual temporal point processes.")
    ap.add_argument("--version", action="version", version=f"cftpp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate-poisson", help="sample an inhomogeneous Poisson process by thinning")
    p.add_argument("--kind", choices=("constant", "rbf"), default="constant")
    p.add_argument("--rate", type=float)
    p.add_argument("--intensity", help="intensity JSON, file or inline object")
    p.add_argument("--rbf-form", choices=("gaussian", "literal"))
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--out", required=True, help="events CSV")
    p.add_argument("--record", help="also write the full thinning record as JSON")
    _common(p)
    p.set_defaults(func=cmd_simulate_poisson)

    p = sub.add_parser("simulate-hawkes", help="sample a Hawkes process")
    p.add_argument("--params", required=True, help="mu,alpha,omega")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--event-cap", type=_positive_int, default=DEFAULT_EVENT_CAP)
    p.add_argument("--out", required=True, help="events CSV (columns t,parent)")
    _common(p)
    p.set_defaults(func=cmd_simulate_hawkes)

    p = sub.add_parser("cf-poisson", help="counterfactuals of an observed Poisson sequence")
    p.add_argument("--factual", required=True, help="factual intensity JSON")
    p.add_argument("--counterfactual", required=True, help="counterfactual intensity JSON")
    p.add_argument("--rbf-form", choices=("gaussian", "literal"))
    p.add_argument("--observed", required=True, help="events CSV with a t column")
    p.add_argument("--lambda-max", type=float, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--replicates", type=_positive_int, default=1)
    p.add_argument("--share-rejections", action="store_true",
                   help="reuse one sample of rejected candidates for every replicate")
    p.add_argument("--out", required=True, help="output directory")
    _cf_opts(p)
    _common(p)
    p.set_defaults(func=cmd_cf_poisson)

    p = sub.add_parser("cf-hawkes", help="counterfactuals of an observed Hawkes sequence")
    p.add_argument("--factual", required=True, help="mu,alpha,omega")
    p.add_argument("--counterfactual", required=True, help="mu,alpha,omega")
    p.add_argument("--observed", required=True, help="events CSV with a t column")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--replicates", type=_positive_int, default=1)
    p.add_argument("--event-cap", type=_positive_int, default=DEFAULT_EVENT_CAP)
    p.add_argument("--out", required=True, help="output directory")
    _cf_opts(p)
    _common(p)
    p.set_defaults(func=cmd_cf_hawkes)

    sir = sub.add_parser("sir", help="networked SIR epidemics")
    ssub = sir.add_subparsers(dest="sir_command", required=True, parser_class=_Parser)
    p = ssub.add_parser("simulate", help="generate a network and sample an outbreak")
    _sir_opts(p)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--out", required=True, help="output directory")
    _common(p)
    p.set_defaults(func=cmd_sir_simulate)

    p = ssub.add_parser("counterfactual", help="counterfactual outbreaks under an intervention")
    p.add_argument("--observed", required=True, help="output directory of 'sir simulate'")
    p.add_argument("--intervention", help="intervention JSON, file or inline object (default: identity)")
    p.add_argument("--beta", type=float, default=1 / 15.3)
    p.add_argument("--delta", type=float, default=1 / 11.4)
    p.add_argument("--horizon", type=float, help="default: the observed run's horizon")
    p.add_argument("--replicates", "--runs", dest="replicates", type=_positive_int, default=20)
    p.add_argument("--out", required=True, help="output directory")
    _cf_opts(p)
    _common(p)
    p.set_defaults(func=cmd_sir_counterfactual)

    p = ssub.add_parser("r0", help="estimate per-country R0 by simulation")
    _sir_opts(p)
    p.add_argument("--runs", type=_positive_int, default=1000)
    p.add_argument("--out", required=True, help="CSV path")
    _common(p)
    p.set_defaults(func=cmd_sir_r0)

    p = ssub.add_parser("calibrate", help="grid-search SBM probabilities against R0 targets")
    _sir_opts(p)
    p.add_argument("--grid", required=True, help="JSON mapping probability fields to value lists")
    p.add_argument("--targets", help="JSON mapping country codes to R0 (default: WHO estimates)")
    p.add_argument("--runs", type=_positive_int, default=200)
    p.add_argument("--out", required=True, help="output directory")
    _common(p)
    p.set_defaults(func=cmd_sir_calibrate)

    exp = sub.add_parser("experiment", help="batch scenarios")
    esub = exp.add_subparsers(dest="exp_command", required=True, parser_class=_Parser)
    p = esub.add_parser("run", help="run a scenario config")
    p.add_argument("config", help="scenario JSON path or bundled config name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    _common(p, seed_required=False)
    p.set_defaults(func=cmd_experiment_run)

    p = sub.add_parser("validate", help="run the built-in oracle and property checks")
    p.add_argument("--seed", type=_seed, default=20240601)
    p.add_argument("--full", action="store_true", help="larger sample sizes")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _log(str(exc))
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        rc = args.func(args)
    except (UsageError, ConfigError) as exc:
        _log(f"error: {exc}")
        return 1
    except (CftppError, ValueError, OSError) as exc:
        _log(f"error: {type(exc).__name__}: {exc}")
        return 2
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
