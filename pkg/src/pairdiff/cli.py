"""Command-line entry point: ``pairdiff {graph,predict,simulate,sweep,verify}``.

Exit status is 0 on success, 1 for domain errors (invalid parameters,
infeasible experiments, failed verification) and 2 for usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import graphlab as gl
from . import montecarlo as mc
from . import thresholds as th
from .channel import haplotype_channel, outlier_channel, sbm_channel
from .config import get, parse_config, require
from .divergence import divergence_profile
from .errors import ConfigError, DomainError, PreconditionViolated

DEFAULT_SEED = 0
MANIFEST_VERSION = 1
EXPERIMENT_KEYS = {"graph", "channel", "truth_mode", "decoder", "restarts", "trials", "tie_policy", "seed", "sweep"}


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc


def _write_text(path: str, text: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def _seed(args, cfg: dict | None = None) -> int:
    if args.seed is not None:
        return int(args.seed)
    if cfg and "seed" in cfg:
        return int(cfg["seed"])
    return DEFAULT_SEED


# ---------------------------------------------------------------------------
# graph


def cmd_graph(args) -> int:
    spec = {"model": args.model}
    for key in ("n", "w", "rows", "cols", "p", "r"):
        val = getattr(args, key)
        if val is not None:
            spec[key] = val
    if args.model == "ring":
        spec["circular"] = not args.line
    g = gl.build_graph(spec, _seed(args), ())
    if g.n < 2:
        summary = [f"n={g.n}", f"edges={g.n_edges}"]
    else:
        summary = gl.cut_profile(g, strict=False).summary_lines()
    if args.out:
        _write_text(args.out, gl.format_graph(g))
    else:
        sys.stdout.write(gl.format_graph(g))
    print("\n".join(summary))
    return 0


# ---------------------------------------------------------------------------
# predict


def _float(cfg, key, default=None):
    val = get(cfg, key, default)
    if val is None:
        raise ConfigError(f"missing required key {key!r}")
    try:
        return float(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key {key!r} must be numeric, got {val!r}") from exc


def _int(cfg, key, default=None):
    v = _float(cfg, key, default)
    if v != int(v):
        raise ConfigError(f"key {key!r} must be an integer, got {v!r}")
    return int(v)


def _optional(reports: list, skipped: list, name: str, fn, *a, **kw) -> None:
    try:
        reports.append(fn(*a, **kw))
    except PreconditionViolated as exc:
        skipped.append((name, str(exc)))


def _er_reports(reports, skipped, cfg, n, M, p_obs, channel) -> None:
    delta = _float(cfg, "delta", 1.0)
    eps = _float(cfg, "epsilon", 0.1)
    zeta = _float(cfg, "zeta", 0.0)
    alpha = _float(cfg, "alpha", 0.5)
    prof = divergence_profile(channel, alphas=[alpha], zetas=[zeta])
    reports.append(th.er_achievability(n, M, p_obs, prof, delta))
    if np.isfinite(prof.kl_min):
        reports.append(th.er_converse_kl(n, p_obs, prof.kl_min, prof.m_kl[zeta], zeta, min(eps, 0.5)))
    _optional(reports, skipped, "er_converse_hellinger", th.er_converse_hellinger,
              n, p_obs, prof.hel_min[alpha], alpha, eps, zeta)
    return prof


def predict_reports(cfg: dict, seed: int = DEFAULT_SEED) -> tuple[list, list, dict]:
    """Reports, skipped (name, reason) pairs and extra scalar outputs for a scenario config."""
    (scenario,) = require(cfg, "scenario")
    reports: list[th.ThresholdReport] = []
    skipped: list[tuple[str, str]] = []
    extra: dict[str, float] = {}
    if scenario == "outlier":
        n, M = _int(cfg, "n"), _int(cfg, "M")
        p_true = _float(cfg, "p_true")
        p_obs = _float(cfg, "p_obs", 1.0)
        reports += th.outlier_conditions(n, M, p_obs, p_true, _float(cfg, "epsilon", 0.1))
        prof = _er_reports(reports, skipped, cfg, n, M, p_obs, outlier_channel(M, p_true))
    elif scenario == "sbm":
        a, b, n = _float(cfg, "a"), _float(cfg, "b"), _int(cfg, "n")
        reports += th.sbm_conditions(a, b, n)
        prof = _er_reports(reports, skipped, cfg, n, 2, 1.0, sbm_channel(a, b, n))
    elif scenario == "haplotype":
        theta, L, n = _float(cfg, "theta"), _int(cfg, "L"), _int(cfg, "n")
        model = get(cfg, "model", "ring")
        p_obs = get(cfg, "p_obs")
        consts = get(cfg, "c", {}) or {}
        reports += th.haplotype_conditions(
            theta, L, n, None if p_obs is None else float(p_obs), model, consts, _int(cfg, "w", 1)
        )
        prof = divergence_profile(haplotype_channel(theta, L))
    elif scenario == "generic":
        (gspec, cspec) = require(cfg, "graph", "channel")
        g = gl.build_graph(gspec, seed)
        ch = mc.build_channel(cspec, gspec)
        eps = _float(cfg, "epsilon", 0.1)
        zeta = _float(cfg, "zeta", 0.0)
        alpha = _float(cfg, "alpha", 0.5)
        prof = divergence_profile(ch, alphas=[alpha], zetas=[zeta])
        cp = gl.cut_profile(g)
        reports.append(th.cut_achievability(g.n, ch.M, cp.mincut, cp.tau_cut, prof.sup_alpha_term, _float(cfg, "delta", 1.0)))
        if np.isfinite(prof.kl_min):
            reports.append(th.cut_converse_kl(cp.mincut, cp.d_max, cp.tau_cut, prof.kl_min, prof.m_kl[zeta], g.n, zeta, min(eps, 0.5)))
        _optional(reports, skipped, "degree_converse_hellinger", th.degree_converse_hellinger,
                  cp.d_max, g.n, prof.hel_min[alpha], alpha, eps)
        p_obs = mc._p_obs(gspec)
        if p_obs is not None:
            _er_reports(reports, skipped, cfg, g.n, ch.M, p_obs, ch)
        extra.update(mincut=cp.mincut, tau_cut=cp.tau_cut, d_max=cp.d_max)
        n = g.n
    else:
        raise ConfigError(f"unknown scenario {scenario!r} (expected generic, outlier, sbm or haplotype)")
    extra.update(kl_min=prof.kl_min, hel_half_min=prof.hel_half, sup_alpha_term=prof.sup_alpha_term)
    if prof.hel_half > 0:
        extra["min_sample_complexity"] = th.min_sample_complexity(n, prof.hel_half)
    return reports, skipped, extra


def cmd_predict(args) -> int:
    cfg = parse_config(_read_text(args.config))
    reports, skipped, extra = predict_reports(cfg, _seed(args, cfg))
    blocks = ["\n".join(r.lines()) for r in reports]
    blocks += [f"name={name}\nskipped={reason}" for name, reason in skipped]
    blocks.append("\n".join(f"{k}={v!r}" for k, v in extra.items()))
    print("\n\n".join(blocks))
    if args.jsonl:
        _write_text(args.jsonl, "".join(json.dumps(r.as_dict(), sort_keys=True) + "\n" for r in reports))
    return 0


# ---------------------------------------------------------------------------
# simulate / sweep


def _load_experiment(path: str) -> tuple[dict, dict | None]:
    """(config, manifest or None).  A manifest's config snapshot is used verbatim."""
    cfg = parse_config(_read_text(path))
    if "manifest_version" in cfg:
        snap = cfg.get("config")
        if not isinstance(snap, dict):
            raise ConfigError("manifest has no config snapshot")
        return snap, cfg
    return cfg, None


def experiment_from_config(cfg: dict, seed: int, trials: int | None) -> mc.ExperimentConfig:
    unknown = set(cfg) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    gspec, cspec = require(cfg, "graph", "channel")
    if not isinstance(gspec, dict) or not isinstance(cspec, dict):
        raise ConfigError("graph and channel must be sections (graph.model=..., channel.family=...)")
    return mc.ExperimentConfig(
        graph_spec=gspec,
        channel_spec=cspec,
        truth_mode=str(cfg.get("truth_mode", "uniform")),
        decoder=str(cfg.get("decoder", "exhaustive")),
        restarts=int(cfg.get("restarts", 8)),
        trials=int(trials if trials is not None else cfg.get("trials", 100)),
        master_seed=seed,
        tie_policy=str(cfg.get("tie_policy", "strict")),
    )


def _snapshot(exp: mc.ExperimentConfig, sweep_spec: dict | None) -> dict:
    snap = {
        "graph": exp.graph_spec,
        "channel": exp.channel_spec,
        "truth_mode": exp.truth_mode,
        "decoder": exp.decoder,
        "restarts": exp.restarts,
        "trials": exp.trials,
        "tie_policy": exp.tie_policy,
        "seed": exp.master_seed,
    }
    if sweep_spec is not None:
        snap["sweep"] = sweep_spec
    return snap


def _versions() -> dict:
    return {"pairdiff": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _write_manifest(path: str, command: str, snap: dict, seed: int, outputs: list[str], jobs: int, started: float) -> None:
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config": snap,
        "master_seed": seed,
        "versions": _versions(),
        "outputs": outputs,
        "jobs": jobs,
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    _write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    started = time.time()
    cfg, _ = _load_experiment(args.config)
    cfg = {k: v for k, v in cfg.items() if k != "sweep"}
    exp = experiment_from_config(cfg, _seed(args, cfg), args.trials)
    jobs = mc.resolve_jobs(args.jobs)
    est = mc.estimate_error_prob(exp, jobs=jobs)
    csv = "pe,ci_low,ci_high,trials,errors,tie_trials,truth_mode\n"
    csv += f"{est.p_e_hat!r},{est.ci_low!r},{est.ci_high!r},{est.trials},{est.errors},{est.tie_trials},{est.truth_mode}\n"
    out = args.out or "simulate.csv"
    _write_text(out, csv)
    manifest = args.manifest or out + ".manifest.json"
    _write_manifest(manifest, "simulate", _snapshot(exp, None), exp.master_seed, [out], jobs, started)
    print(f"pe={est.p_e_hat!r}\nci_low={est.ci_low!r}\nci_high={est.ci_high!r}\ntrials={est.trials}\ncsv={out}\nmanifest={manifest}")
    return 0


def cmd_sweep(args) -> int:
    started = time.time()
    cfg, _ = _load_experiment(args.config)
    exp = experiment_from_config(cfg, _seed(args, cfg), args.trials)
    param, values = require(cfg, "sweep.param", "sweep.values")
    if not isinstance(values, list):
        values = [values]
    try:
        values = [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise ConfigError("sweep.values must be numbers") from exc
    jobs = mc.resolve_jobs(args.jobs)
    result = mc.sweep(exp, str(param), values, jobs=jobs)
    out = args.out or "sweep.csv"
    _write_text(out, result.to_csv())
    outputs = [out]
    if args.plot:
        from .svgplot import render_sweep

        _write_text(args.plot, render_sweep(result, title=str(param)))
        outputs.append(args.plot)
    manifest = args.manifest or out + ".manifest.json"
    _write_manifest(manifest, "sweep", _snapshot(exp, {"param": param, "values": values}), exp.master_seed, outputs, jobs, started)
    sys.stdout.write(result.to_csv())
    print(f"manifest={manifest}")
    return 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    from . import verify

    only = [s.strip() for s in args.only.split(",") if s.strip()] if args.only else None
    return 0 if verify.run(only) else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairdiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pairdiff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=False):
        p.add_argument("--seed", type=int, default=None, help=f"master seed (default {DEFAULT_SEED})")
        if jobs:
            p.add_argument("--jobs", type=int, default=None, help="worker processes (default: $PAIRDIFF_JOBS or CPU count)")

    g = sub.add_parser("graph", help="generate a measurement graph and print its cut profile")
    g.add_argument("--model", required=True, choices=["complete", "ring", "grid", "bridge", "er", "geometric"])
    g.add_argument("--n", type=int)
    g.add_argument("--w", type=int)
    g.add_argument("--line", action="store_true", help="ring without wraparound")
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--r", type=float)
    g.add_argument("--out", help="write the edge list here instead of stdout")
    common(g)
    g.set_defaults(func=cmd_graph)

    p = sub.add_parser("predict", help="evaluate recovery conditions for a scenario config")
    p.add_argument("config")
    p.add_argument("--jsonl", help="also write reports as JSON lines")
    common(p)
    p.set_defaults(func=cmd_predict)

    for name, func, help_ in (
        ("simulate", cmd_simulate, "estimate the error probability of one experiment"),
        ("sweep", cmd_sweep, "estimate the error probability across a parameter sweep"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="key=value / JSON config, or a manifest from an earlier run")
        s.add_argument("--out", help="CSV output path")
        s.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
        s.add_argument("--trials", type=int)
        if name == "sweep":
            s.add_argument("--plot", help="SVG output path")
        common(s, jobs=True)
        s.set_defaults(func=func)

    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("--only", help="comma-separated groups or property names")
    common(v)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except ConfigError as exc:
        print(f"pairdiff: configuration error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"pairdiff: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
