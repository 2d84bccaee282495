"""Experiment CLI: configuration, orchestration, and CSV/JSON persistence.

Subcommands: certify, strip, coherence, condition, recon, recon-sweep,
mcdiarmid, noise, bounds.  Every output file carries the matrix spec, the
master seed, and a short hash of the full configuration so rows can be
joined back to the run that produced them.  Identical configurations
produce byte-identical outputs: per-trial generators are derived from the
trial index alone, and aggregation is keyed by index.

Exit codes: 0 success, 1 a checked property failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .concentration import gaussian_tail_S, mcdiarmid_empirical
from .ensembles import SensingMatrix, matrix_from_spec, subsample_columns
from .recon import measure, quadratic_reconstruct, sample_signal, sample_values
from .stripcheck import (bound_report, certify, coherence_stats,
                         condition_experiment, strip_delta, strip_montecarlo)


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field path."""


@dataclass
class ExperimentConfig:
    experiment: str
    matrix: dict | None
    seed: int = 0
    trials: int = 1000
    k: int | None = None
    k_range: tuple | None = None
    epsilon: float = 0.5
    eta: float = 1.0
    sigma: float = 0.01
    gamma: float = 0.1
    gammas: tuple = ()
    rho: float | None = None
    value_model: str = "sphere"
    mode: str = "exhaustive"
    tol: float = 1e-9
    offset: int = 1
    k_max: int | None = None
    stop_eps: float | None = None
    mc_config: str = "halfsum"
    w: int = 2
    out: str = "."
    fmt: str = "csv"
    threads: int = 1
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "extras"}
        d.update(self.extras)
        return d

    def hash(self) -> str:
        # output location, row format and worker count never change results,
        # so they stay out of the provenance hash
        d = {k: v for k, v in self.to_dict().items()
             if k not in ("out", "fmt", "threads")}
        blob = json.dumps(d, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class ExperimentRecord:
    config: dict
    config_hash: str
    summary: dict
    rows: list
    version: str
    wall_time_s: float

    def to_json(self) -> str:
        return json.dumps({
            "config": self.config,
            "config_hash": self.config_hash,
            "summary": self.summary,
            "version": self.version,
            "wall_time_s": self.wall_time_s,
        }, indent=2, default=str)


def _build_matrix(cfg: ExperimentConfig) -> SensingMatrix:
    if cfg.matrix is None:
        raise ConfigError("matrix: a matrix family description is required")
    try:
        mat = matrix_from_spec(cfg.matrix)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"matrix: {exc}") from exc
    sub = cfg.extras.get("subsample_cols")
    if sub:
        mat = subsample_columns(mat, int(sub), int(cfg.extras.get("subsample_seed", 0)))
    return mat


class _OutputSink:
    """Tracks files written by a run so failures leave nothing behind."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.paths: list = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.out_dir, name)
        self.paths.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.paths:
            try:
                os.remove(p)
            except OSError:
                pass


def _write_rows(sink: _OutputSink, name: str, header, rows, cfg: ExperimentConfig,
                matrix_spec) -> str:
    """Rows to CSV (or JSON per --format); one provenance comment line."""
    prov = (f"# spec={json.dumps(matrix_spec, sort_keys=True) if matrix_spec else 'none'}"
            f" seed={cfg.seed} config={cfg.hash()}")
    if cfg.fmt == "json":
        p = sink.path(name.rsplit(".", 1)[0] + ".json")
        with open(p, "w") as fh:
            json.dump({"provenance": prov, "columns": list(header),
                       "rows": rows}, fh, indent=1, default=str)
        return p
    p = sink.path(name)
    with open(p, "w") as fh:
        fh.write(prov + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")
    return p


def _finish(sink: _OutputSink, cfg: ExperimentConfig, matrix_spec, summary: dict,
            rows: list, t0: float) -> ExperimentRecord:
    rec = ExperimentRecord(
        config=cfg.to_dict(), config_hash=cfg.hash(), summary=summary,
        rows=rows, version=__version__, wall_time_s=round(time.time() - t0, 3),
    )
    with open(sink.path("summary.json"), "w") as fh:
        fh.write(rec.to_json())
    return rec


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def run_certify(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    mat = _build_matrix(cfg)
    cert = certify(mat, mode=cfg.mode, tol=cfg.tol, seed=cfg.seed)
    with open(sink.path("certificate.json"), "w") as fh:
        fh.write(cert.to_json())
    summary = {
        "passed": cert.passed(),
        "st3_eta": cert.st3_eta,
        "max_column_sum_sq": cert.max_column_sum_sq,
    }
    rec = _finish(sink, cfg, mat.spec(), summary, [], t0)
    print(f"certify {mat.spec()}  passed={cert.passed()}  "
          f"eta={cert.st3_eta:.6f}  max|S|^2={cert.max_column_sum_sq:.6g}")
    return rec, (0 if cert.passed() else 1)


def run_strip(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    mat = _build_matrix(cfg)
    if cfg.k is None:
        raise ConfigError("k: required for the strip experiment")
    res = strip_montecarlo(mat, cfg.k, cfg.epsilon, cfg.value_model,
                           cfg.trials, cfg.seed)
    h = cfg.hash()
    rows = [(h, t, repr(float(d)), int(v))
            for t, (d, v) in enumerate(zip(res["distortions"], res["violated"]))]
    _write_rows(sink, "strip.csv", ("config", "trial", "distortion", "violated"),
                rows, cfg, mat.spec())
    try:
        delta = strip_delta(mat.n_rows, mat.n_cols, cfg.k, cfg.epsilon, cfg.eta)
    except ValueError:
        delta = None
    fr = res["failure_rate"]
    ok = None
    if delta is not None and delta < 1.0:
        sig = math.sqrt(max(fr * (1 - fr), 1.0 / cfg.trials) / cfg.trials)
        ok = fr <= delta + 3.0 * sig
    summary = {"failure_rate": fr, "delta": delta, "bound_respected": ok,
               "mean_distortion": float(np.mean(res["distortions"]))}
    rec = _finish(sink, cfg, mat.spec(), summary, rows, t0)
    print(f"strip k={cfg.k} eps={cfg.epsilon}: failure_rate={fr:.5f} "
          f"delta={'n/a' if delta is None else f'{delta:.5f}'} ok={ok}")
    return rec, (0 if ok in (True, None) else 1)


def run_coherence(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    mat = _build_matrix(cfg)
    if cfg.k is None:
        raise ConfigError("k: required for the coherence experiment")
    try:
        delta = strip_delta(mat.n_rows, mat.n_cols, cfg.k, cfg.epsilon, cfg.eta)
    except ValueError:
        delta = None
    res = coherence_stats(mat, cfg.k, trials=cfg.trials, seed=cfg.seed,
                          w=cfg.w, eta=cfg.eta,
                          delta=min(delta, 0.999999) if delta else None)
    h = cfg.hash()
    thr = res["threshold"]
    rows = [(h, t, repr(float(s)), int(thr is not None and s > thr))
            for t, s in enumerate(res["samples"])]
    _write_rows(sink, "coherence.csv", ("config", "trial", "coherence", "exceeded"),
                rows, cfg, mat.spec())
    ok = None
    if delta is not None and delta < 1.0 and res["tail_fraction"] is not None:
        tf = res["tail_fraction"]
        sig = math.sqrt(max(tf * (1 - tf), 1.0 / cfg.trials) / cfg.trials)
        ok = tf <= delta + 3.0 * sig
    summary = {"mean": res["mean"], "expected_mean": res["expected_mean"],
               "max": res["max"], "threshold": thr,
               "tail_fraction": res["tail_fraction"], "delta": delta,
               "bound_respected": ok}
    rec = _finish(sink, cfg, mat.spec(), summary, rows, t0)
    print(f"coherence k={cfg.k}: mean={res['mean']:.6f} "
          f"(expected {res['expected_mean']:.6f}) tail={res['tail_fraction']} ok={ok}")
    return rec, (0 if ok in (True, None) else 1)


def run_condition(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    mat = _build_matrix(cfg)
    ks = list(range(cfg.k_range[0], cfg.k_range[1] + 1)) if cfg.k_range else [cfg.k or 2]
    h = cfg.hash()
    rows = []
    summary_per_k = {}
    for k in ks:
        res = condition_experiment(mat, k, trials=cfg.trials, seed=cfg.seed)
        for t, cval in enumerate(res["conds"]):
            rows.append((h, k, t, repr(float(cval))))
        summary_per_k[k] = {"mean": res["mean"], "std": res["std"],
                            "n_singular": res["n_singular"]}
    _write_rows(sink, "condition.csv", ("config", "k", "trial", "cond"),
                rows, cfg, mat.spec())
    rec = _finish(sink, cfg, mat.spec(), {"per_k": summary_per_k}, rows, t0)
    print(f"condition: k={ks[0]}..{ks[-1]} trials={cfg.trials} written")
    return rec, 0


def run_recon(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    mat = _build_matrix(cfg)
    k = cfg.k or 1
    sig = sample_signal(mat.n_cols, k, cfg.value_model, seed=cfg.seed)
    f = measure(mat, sig, noise="measurement" if cfg.sigma > 0 else "none",
                sigma=cfg.sigma, seed=cfg.seed + 1)
    res = quadratic_reconstruct(mat, f, k_max=cfg.k_max or k,
                                stop_eps=cfg.stop_eps)
    res.success = res.matches(sig, rtol=1e-6 if cfg.sigma == 0 else 1e-2)
    payload = {
        "config": cfg.hash(),
        "true_support": [i for i, _ in sig.entries],
        "recovered_support": [i for i, _ in res.signal.entries],
        "iterations": [
            {k2: (repr(v) if isinstance(v, complex) else v) for k2, v in it.items()}
            for it in res.iterations
        ],
        "residual_norm": res.residual_norm,
        "method": res.method,
        "success": res.success,
    }
    with open(sink.path("recon.json"), "w") as fh:
        json.dump(payload, fh, indent=1)
    rec = _finish(sink, cfg, mat.spec(), {"success": res.success,
                                          "residual": res.residual_norm}, [], t0)
    print(f"recon k={k}: success={res.success} residual={res.residual_norm:.3e}")
    return rec, (0 if res.success else 1)


def _sweep_task(args):
    spec, k, trial, seed, value_model, noise_sigma = args
    mat = _sweep_matrix(json.dumps(spec, sort_keys=True))
    sig = sample_signal(mat.n_cols, k, value_model, seed=seed)
    f = measure(mat, sig, noise="measurement" if noise_sigma > 0 else "none",
                sigma=noise_sigma, seed=seed + 1)
    t0 = time.time()
    res = quadratic_reconstruct(mat, f, k_max=k)
    wall = time.time() - t0
    err = _recon_error(res, sig)
    success = res.matches(sig, rtol=1e-6) if noise_sigma == 0 else err <= 1e-2
    return k, trial, bool(success), err, wall


_SWEEP_CACHE: dict = {}


def _sweep_matrix(spec_json: str) -> SensingMatrix:
    mat = _SWEEP_CACHE.get(spec_json)
    if mat is None:
        mat = matrix_from_spec(json.loads(spec_json))
        _SWEEP_CACHE[spec_json] = mat
    return mat


def _recon_error(res, sig) -> float:
    recovered = dict(res.signal.entries)
    err2 = 0.0
    for i, v in sig.entries:
        err2 += abs(recovered.pop(i, 0.0) - v) ** 2
    err2 += sum(abs(v) ** 2 for v in recovered.values())
    return math.sqrt(err2) / max(sig.norm(), 1e-300)


def run_recon_sweep(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    mat = _build_matrix(cfg)
    if cfg.k_range is None:
        raise ConfigError("k: a k range like 1..48 is required for recon-sweep")
    ks = list(range(cfg.k_range[0], cfg.k_range[1] + 1))
    spec = mat.spec()
    m_label = mat.params.get("m", 0)
    tasks = []
    for k in ks:
        for trial in range(cfg.trials):
            seed = trial_seed_for_sweep(cfg.seed, k, trial)
            tasks.append((spec, k, trial, seed, cfg.value_model, cfg.sigma))
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_sweep_task, tasks, chunksize=8))
    else:
        results = [_sweep_task(t) for t in tasks]
    results.sort(key=lambda r: (r[0], r[1]))
    h = cfg.hash()
    rows = [(h, m_label, k, trial, int(s), repr(float(e)), repr(round(w, 6)))
            for k, trial, s, e, w in results]
    _write_rows(sink, "recon_sweep.csv",
                ("config", "m", "k", "trial", "success", "error", "wall_time"),
                rows, cfg, spec)
    curve = {}
    for k, trial, s, e, w in results:
        curve.setdefault(k, []).append(s)
    rates = {k: float(np.mean(v)) for k, v in curve.items()}
    with open(sink.path("success_vs_k.dat"), "w") as fh:
        fh.write(f"# success rate vs sparsity; config={h}\n")
        for k in ks:
            fh.write(f"{k} {rates[k]:.6f}\n")
    rec = _finish(sink, cfg, spec, {"success_rate_by_k": rates}, rows, t0)
    print("recon-sweep:", " ".join(f"{k}:{rates[k]:.2f}" for k in ks))
    return rec, 0


def trial_seed_for_sweep(master: int, k: int, trial: int) -> int:
    blob = hashlib.sha256(f"{master}:{k}:{trial}".encode()).digest()
    return int.from_bytes(blob[:6], "little")


def _mcdiarmid_setup(name: str, seed: int):
    """The three packaged (fn, c) configurations for the empirical harness."""
    if name == "halfsum":
        ground = 2000
        m = 10
        labels = np.where(np.arange(ground) % 2 == 0, 1.0, -1.0)

        def fn(tup):
            return 0.5 * labels[tup].sum(axis=1)

        return fn, ground, m, np.ones(m)
    if name in ("energy", "coherence"):
        from .ensembles import build_delsarte_goethals
        mat = build_delsarte_goethals(5, 0)
        dense = mat.dense()  # (N, C)
        n = mat.n_rows
        k = 3
        if name == "energy":
            rng = np.random.Generator(np.random.PCG64(seed ^ 0xA1FA))
            alpha = sample_values(rng, k, "sphere")
            c = np.array([
                4.0 / math.sqrt(n) * abs(alpha[l]) *
                sum(abs(alpha[j]) for j in range(k) if j != l)
                for l in range(k)
            ])

            def fn(tup):
                cols = dense.T[tup]          # (T, k, N)
                f = np.einsum("k,tkn->tn", alpha, cols) / math.sqrt(n)
                return np.sum(np.abs(f) ** 2, axis=1)

            return fn, mat.n_cols, k, c
        w0 = 1  # fixed column, flat index 1
        phiw = dense[:, w0]
        inner = np.abs(dense.conj().T @ phiw) ** 2 / (n * n)  # (C,)

        def fn(tup):
            return inner[tup].sum(axis=1)

        # ground set excludes w0 by shifting indices past it
        def fn_shifted(tup):
            shifted = np.where(tup >= w0, tup + 1, tup)
            return inner[shifted].sum(axis=1)

        return fn_shifted, mat.n_cols - 1, k, np.full(k, 2.0 / n)
    raise ConfigError(f"mc_config: unknown configuration {name!r}")


def run_mcdiarmid(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    fn, ground, m, c = _mcdiarmid_setup(cfg.mc_config, cfg.seed)
    gammas = cfg.gammas or (cfg.gamma,)
    h = cfg.hash()
    rows = []
    all_ok = True
    for g in gammas:
        res = mcdiarmid_empirical(fn, ground, m, c, g, trials=cfg.trials,
                                  seed=cfg.seed)
        rows.append((h, cfg.mc_config, repr(float(g)),
                     repr(res["empirical_tail"]), repr(res["bound"]),
                     int(res["pass"])))
        all_ok = all_ok and res["pass"]
    _write_rows(sink, "mcdiarmid.csv",
                ("config", "setup", "gamma", "empirical_tail", "bound", "pass"),
                rows, cfg, None)
    rec = _finish(sink, cfg, None, {"all_pass": all_ok}, rows, t0)
    print(f"mcdiarmid {cfg.mc_config}: all_pass={all_ok}")
    return rec, (0 if all_ok else 1)


def run_noise(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    mat = _build_matrix(cfg)
    if cfg.k is None:
        raise ConfigError("k: required for the noise experiment")
    eps_prime = 1.0 - math.sqrt(1.0 - cfg.epsilon)
    delta = strip_delta(mat.n_rows, mat.n_cols, cfg.k, cfg.epsilon, cfg.eta)
    violations = 0
    rows = []
    h = cfg.hash()
    alpha_norm = None
    for t in range(cfg.trials):
        sig = sample_signal(mat.n_cols, cfg.k, cfg.value_model,
                            seed=trial_seed_for_sweep(cfg.seed, 0, t))
        f = measure(mat, sig, noise="measurement", sigma=cfg.sigma,
                    seed=trial_seed_for_sweep(cfg.seed, 1, t))
        a2 = sig.norm() ** 2
        alpha_norm = math.sqrt(a2)
        e = float(np.sum(np.abs(f.values) ** 2))
        lo = (1 - eps_prime - cfg.gamma) ** 2 * a2
        hi = (1 + eps_prime + cfg.gamma) ** 2 * a2
        bad = not (lo <= e <= hi)
        violations += bad
        rows.append((h, t, repr(e / a2), int(bad)))
    _write_rows(sink, "noise.csv", ("config", "trial", "energy_ratio", "violated"),
                rows, cfg, mat.spec())
    tail = 2.0 * (delta + gaussian_tail_S(cfg.gamma * alpha_norm / cfg.sigma,
                                          mat.n_rows))
    rate = violations / cfg.trials
    sig3 = 3.0 * math.sqrt(max(rate * (1 - rate), 1.0 / cfg.trials) / cfg.trials)
    ok = rate <= tail + sig3
    summary = {"violation_rate": rate, "bound": tail, "ok": ok,
               "eps_prime": eps_prime, "delta": delta}
    rec = _finish(sink, cfg, mat.spec(), summary, rows, t0)
    print(f"noise: violation_rate={rate:.5f} bound={tail:.5f} ok={ok}")
    return rec, (0 if ok else 1)


def run_bounds(cfg: ExperimentConfig, sink: _OutputSink) -> tuple:
    t0 = time.time()
    mat = _build_matrix(cfg) if cfg.matrix else None
    n = mat.n_rows if mat else cfg.extras.get("n_rows")
    c = mat.n_cols if mat else cfg.extras.get("n_cols")
    if not n or not c:
        raise ConfigError("matrix: needed to size the bounds")
    rep = bound_report(n, c, cfg.k or 1, cfg.epsilon, cfg.eta)
    payload = rep.to_dict()
    if cfg.rho is not None:
        payload["sharpened_delta"] = rep.sharpened_delta(cfg.rho)
        payload["rho"] = cfg.rho
    with open(sink.path("bounds.json"), "w") as fh:
        json.dump(payload, fh, indent=2)
    rec = _finish(sink, cfg, mat.spec() if mat else None, payload, [], t0)
    print(json.dumps(payload, indent=2))
    return rec, 0


def run_experiment(cfg: ExperimentConfig) -> tuple:
    """Dispatch to a runner; on failure every partial output is removed."""
    runner = _RUNNERS.get(cfg.experiment)
    if runner is None:
        raise ConfigError(f"experiment: unknown kind {cfg.experiment!r}")
    sink = _OutputSink(cfg.out)
    try:
        return runner(cfg, sink)
    except BaseException:
        sink.cleanup()
        raise


_RUNNERS = {
    "certify": run_certify,
    "strip": run_strip,
    "coherence": run_coherence,
    "condition": run_condition,
    "recon": run_recon,
    "recon-sweep": run_recon_sweep,
    "mcdiarmid": run_mcdiarmid,
    "noise": run_noise,
    "bounds": run_bounds,
}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _parse_k_range(text: str) -> tuple:
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
    else:
        lo = hi = int(text)
    if lo < 1 or hi < lo:
        raise ConfigError(f"k: bad range {text!r}")
    return lo, hi


def _matrix_spec_from_args(args) -> dict | None:
    fam = args.family
    if fam is None:
        return None
    if fam == "chirp":
        if args.p is None:
            raise ConfigError("matrix.p: required for the chirp family")
        return {"family": "chirp", "params": {"p": args.p}}
    if fam == "dg":
        if args.m is None:
            raise ConfigError("matrix.m: required for the dg family")
        return {"family": "dg", "params": {"m": args.m, "r": args.r or 0}}
    if fam == "dg_full":
        if args.m is None:
            raise ConfigError("matrix.m: required for the dg_full family")
        return {"family": "dg_full", "params": {"m": args.m}}
    if fam == "bch":
        if args.m is None or args.t is None:
            raise ConfigError("matrix.m/matrix.t: required for the bch family")
        return {"family": "bch", "params": {"m": args.m, "t": args.t}}
    if fam == "fourier":
        if args.n_rows is None or args.n_cols is None:
            raise ConfigError("matrix.N/matrix.C: required for the fourier family")
        return {"family": "fourier",
                "params": {"C": args.n_cols, "N": args.n_rows},
                "seed": args.matrix_seed or 0}
    if fam == "gaussian":
        if args.n_rows is None or args.n_cols is None:
            raise ConfigError("matrix.N/matrix.C: required for the gaussian family")
        return {"family": "gaussian",
                "params": {"N": args.n_rows, "C": args.n_cols},
                "seed": args.matrix_seed or 0}
    raise ConfigError(f"matrix.family: unknown family {fam!r}")


def _config_from_args(args) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
    matrix = _matrix_spec_from_args(args) or base.get("matrix")
    k_range = None
    k = None
    if args.k is not None:
        k_range = _parse_k_range(args.k)
        k = k_range[0]
        if k_range[0] == k_range[1]:
            k_range = k_range if args.experiment in ("condition", "recon-sweep") else None
    elif "k" in base:
        k = int(base["k"])
    elif "k_range" in base:
        k_range = tuple(base["k_range"])
        k = k_range[0]
    gammas = ()
    if args.gammas:
        gammas = tuple(float(x) for x in args.gammas.split(","))
    elif "gammas" in base:
        gammas = tuple(base["gammas"])

    def pick(name, flag, default):
        return flag if flag is not None else base.get(name, default)

    cfg = ExperimentConfig(
        experiment=args.experiment,
        matrix=matrix,
        seed=int(pick("seed", args.seed, 0)),
        trials=int(pick("trials", args.trials, 1000)),
        k=k,
        k_range=k_range,
        epsilon=float(pick("epsilon", args.epsilon, 0.5)),
        eta=float(pick("eta", args.eta, 1.0)),
        sigma=float(pick("sigma", args.sigma, 0.0)),
        gamma=float(pick("gamma", args.gamma, 0.1)),
        gammas=gammas,
        rho=args.rho if args.rho is not None else base.get("rho"),
        value_model=pick("value_model", args.value_model, "sphere"),
        mode=pick("mode", args.mode, "exhaustive"),
        tol=float(pick("tol", args.tol, 1e-9)),
        k_max=args.k_max if args.k_max is not None else base.get("k_max"),
        stop_eps=args.stop_eps if args.stop_eps is not None else base.get("stop_eps"),
        mc_config=pick("mc_config", args.mc_config, "halfsum"),
        w=int(pick("w", args.w, 2)),
        out=pick("out", args.out, "."),
        fmt=pick("format", args.format, "csv"),
        threads=int(pick("threads", args.threads, 1)),
    )
    if cfg.experiment in ("strip", "coherence", "noise") and cfg.k is None:
        raise ConfigError("k: required for this experiment")
    if cfg.value_model not in ("sphere", "gaussian", "unimodular"):
        raise ConfigError(f"value_model: unknown model {cfg.value_model!r}")
    if cfg.trials < 1:
        raise ConfigError("trials: must be at least 1")
    return cfg


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--family", choices=["chirp", "dg", "dg_full", "bch",
                                          "fourier", "gaussian"])
    sub.add_argument("--p", type=int, help="chirp prime")
    sub.add_argument("--m", type=int, help="index-space dimension")
    sub.add_argument("--r", type=int, help="Delsarte-Goethals level")
    sub.add_argument("--t", type=int, help="BCH strength")
    sub.add_argument("--n-rows", type=int, help="rows for fourier/gaussian")
    sub.add_argument("--n-cols", type=int, help="columns for fourier/gaussian")
    sub.add_argument("--matrix-seed", type=int, help="seed for random families")
    sub.add_argument("--seed", type=int, help="master experiment seed")
    sub.add_argument("--trials", type=int)
    sub.add_argument("--k", help="sparsity, or a range like 1..48")
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--eta", type=float)
    sub.add_argument("--sigma", type=float)
    sub.add_argument("--gamma", type=float)
    sub.add_argument("--gammas", help="comma-separated gamma sweep")
    sub.add_argument("--rho", type=float)
    sub.add_argument("--value-model", dest="value_model",
                     choices=["sphere", "gaussian", "unimodular"])
    sub.add_argument("--mode", choices=["exhaustive", "sampled"])
    sub.add_argument("--tol", type=float)
    sub.add_argument("--k-max", dest="k_max", type=int)
    sub.add_argument("--stop-eps", dest="stop_eps", type=float)
    sub.add_argument("--mc-config", dest="mc_config",
                     choices=["halfsum", "energy", "coherence"])
    sub.add_argument("--w", type=int, help="fixed probe column (1-based)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--format", choices=["csv", "json"])
    sub.add_argument("--threads", type=int)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stripcs",
        description="Deterministic compressed sensing experiments")
    subs = parser.add_subparsers(dest="experiment", required=True)
    for name in _RUNNERS:
        _add_common(subs.add_parser(name))
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        rec, code = run_experiment(cfg)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
