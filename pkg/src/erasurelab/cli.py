"""Command-line entry point: ``erasurelab <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 infeasible schedule,
4 enumeration budget exceeded.
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from . import ldp, montecarlo as mc, oracle, report
from .channel import AdditiveChannel, GeneralDmc, blahut_arimoto, cond_info_variance, load_matrix
from .coding import Codebook, RegimeParams, code_size, sample_codebook, threshold
from .decoder import ForneyDecoder, InfoSpectrumDecoder
from .errors import (
    AmbiguousCaidError, BudgetExceededError, ErasureLabError, InfeasibleScheduleError, ValidationError,
)
from .probmodel import NoiseDistribution, varentropy
from .typesys import types_csv_rows

log = logging.getLogger("erasurelab")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 2, 3, 4
ESTIMATORS = ("E1", "E2_reweight", "E2_exchange", "cgf", "oracle")


class ConfigError(ErasureLabError):
    pass


@dataclass
class ChannelSpec:
    d: Optional[int] = None
    noise: Optional[list] = None
    matrix: Optional[str] = None

    def build(self):
        if (self.noise is None) == (self.matrix is None):
            raise ConfigError("channel needs exactly one of 'noise' or 'matrix'")
        if self.noise is not None:
            ch = AdditiveChannel(NoiseDistribution(tuple(self.noise)))
        else:
            ch = load_matrix(self.matrix)
        d = ch.d if isinstance(ch, AdditiveChannel) else ch.n_outputs
        if self.d is not None and self.d != d:
            raise ConfigError(f"channel d={self.d} does not match the distribution (d={d})")
        return ch


@dataclass
class RegimeSpec:
    t: float
    a: float
    b: float


@dataclass
class ExperimentConfig:
    channel: ChannelSpec
    regime: RegimeSpec
    n_grid: list
    trials: int
    seed: int = 0
    estimators: list = field(default_factory=lambda: ["E1", "E2_reweight"])
    output: str = "."
    workers: int = 1
    M: Optional[int] = None
    sampler: str = "auto"
    cgf_u: list = field(default_factory=lambda: [1.0])

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        for key, sub in (("channel", ChannelSpec), ("regime", RegimeSpec)):
            if key not in raw:
                raise ConfigError(f"config is missing '{key}'")
            raw[key] = _strict(sub, raw[key], key)
        cfg = _strict(cls, raw, "config")
        cfg.validate()
        return cfg

    def validate(self):
        if not self.n_grid or any(int(n) != n or n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be a nonempty list of positive integers")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad:
            raise ConfigError(f"unknown estimators {sorted(bad)}; choose from {ESTIMATORS}")
        ch = self.channel.build()
        if not isinstance(ch, AdditiveChannel):
            add = ch.as_additive()
            if add is None:
                raise ConfigError("simulation needs an additive (circulant) channel")
        try:
            for n in self.n_grid:
                RegimeParams(int(n), self.regime.t, self.regime.a, self.regime.b, 0.0)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
        if self.sampler not in ("auto", "direct", "types"):
            raise ConfigError(f"unknown sampler {self.sampler!r}")

    def additive_channel(self):
        ch = self.channel.build()
        return ch if isinstance(ch, AdditiveChannel) else ch.as_additive()


def _strict(cls, raw, where):
    if not isinstance(raw, dict):
        raise ConfigError(f"'{where}' must be a JSON object")
    names = {f.name for f in fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {sorted(unknown)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _noise_arg(text):
    return NoiseDistribution.parse(text)


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _channel_from_args(args):
    if getattr(args, "matrix", None):
        ch = load_matrix(args.matrix)
    elif getattr(args, "noise", None) is not None:
        ch = AdditiveChannel(args.noise)
    else:
        raise ConfigError("give --noise or --matrix")
    d = ch.d if isinstance(ch, AdditiveChannel) else ch.n_outputs
    if getattr(args, "d", None) is not None and args.d != d:
        raise ConfigError(f"--d {args.d} does not match the channel (d={d})")
    return ch


def _emit(args, name, rows, columns):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        report.save_csv(os.path.join(args.out, name), rows, columns)
    else:
        report.write_csv(sys.stdout, rows, columns)


def cmd_capacity(args):
    ch = _channel_from_args(args)
    res = blahut_arimoto(ch, tol=args.tol, max_iter=args.max_iter)
    v = cond_info_variance(ch, res.input_dist)
    row = {
        "capacity": res.capacity,
        "input_dist": " ".join(report.fmt(float(p)) for p in res.input_dist),
        "iterations": res.iterations,
        "gap": res.gap,
        "variance_at_caid": v,
    }
    _emit(args, "capacity.csv", [row], list(row))
    return EXIT_OK


def _prediction_rows(pred, n_grid, d, seed, capacity, M_override=None):
    rows = []
    key = {"t": pred.t, "a": pred.a, "b": pred.b, "d": d, "seed": seed}
    if not n_grid:
        coeffs = [
            ("E1", pred.e1_exponent if pred.regime == "md" else pred.e1_limit,
             "e1_exponent" if pred.regime == "md" else "e1_limit"),
            ("E2", pred.e2_leading, "e2_leading"),
            ("E2", pred.e2_second_order, "e2_second_order"),
        ]
        for est, val, kind in coeffs:
            rows.append({**key, "n": "", "estimator": est, "predicted": val, "kind": kind})
        return rows
    for n in n_grid:
        params = RegimeParams(n, pred.t, pred.a, pred.b, capacity)
        try:
            M = M_override or code_size(params)
        except InfeasibleScheduleError:
            M = "infeasible"
        base = {**key, "n": n, "M": M}
        rows.append({**base, "estimator": "E1", "predicted": pred.e1_value(n), "kind": "probability"})
        neglog = pred.e2_neglog_lower(n)
        rows.append({**base, "estimator": "E2_reweight", "predicted": math.exp(-neglog), "kind": "probability_upper"})
        rows.append({**base, "estimator": "E2_exchange", "predicted": math.exp(-neglog), "kind": "probability_upper"})
    return rows


def cmd_predict(args):
    ch = _channel_from_args(args)
    pred = ldp.predict_direct(ch, args.a, args.b, args.t, assume_unique_caid=args.assume_unique_caid)
    if isinstance(ch, AdditiveChannel):
        d, cap = ch.d, ch.capacity
    else:
        d, cap = ch.n_outputs, blahut_arimoto(ch).capacity
    rows = _prediction_rows(pred, args.n_grid or [], d, "", cap)
    _emit(args, "predictions.csv", rows, report.PREDICTION_COLUMNS)
    return EXIT_OK


def _build_decoder(args, M):
    if args.decoder == "forney":
        if args.T is None:
            raise ConfigError("forney decoder needs --T")
        return ForneyDecoder(args.T), args.T
    if args.b is None or args.t is None:
        raise ConfigError("infospec decoder needs --b and --t")
    dec = InfoSpectrumDecoder(args.code_size or M, args.b, args.t)
    return dec, dec.level(args.n)


def cmd_oracle(args):
    ch = _channel_from_args(args)
    if args.codebook:
        cb = Codebook.load(args.codebook)
        n, M, seed = cb.n, cb.M, cb.seed
        args.n = n
    else:
        if args.n is None or args.M is None:
            raise ConfigError("oracle needs --n and --M (or --codebook)")
        n, M, seed = args.n, args.M, args.seed
    decoder, thr = _build_decoder(args, M)
    if args.ensemble:
        res = oracle.exact_ensemble(n, ch.d, M, ch, decoder)
        seed = "ensemble"
    else:
        if not args.codebook:
            cb = sample_codebook(n, ch.d, M, args.seed)
        res = oracle.exact_error_probs(cb, ch, decoder)
    row = {
        "n": n, "d": ch.d, "M": M, "noise": " ".join(report.fmt(p) for p in ch.noise.probs),
        "seed": seed, "decoder": decoder.name, "threshold": thr,
        "p_total": res.total, "p_undetected": res.undetected,
    }
    _emit(args, "oracle.csv", [row], report.ORACLE_COLUMNS)
    return EXIT_OK


def cmd_cgf(args):
    ch = _channel_from_args(args)
    params = RegimeParams(args.n, args.t, args.a, args.b, ch.capacity)
    cfg = mc.McConfig.from_regime(ch, params, M=args.M, sampler=args.sampler)
    F = mc.fn_samples(cfg, args.trials, args.seed, mc.P_MEASURE, args.workers)
    us = np.array(args.u)
    cgf = mc.empirical_cgf(F, us / args.n ** args.t)
    V = varentropy(ch.noise)
    scale = args.n ** (1.0 - 2.0 * args.t)
    rows = [
        {"n": args.n, "t": args.t, "a": args.a, "M": cfg.M, "seed": args.seed, "u": float(u),
         "theta": float(th), "phi": float(v), "predicted": (-args.a * u + u * u * V / 2.0) * scale}
        for u, th, v in zip(us, cgf.theta_grid, cgf.values)
    ]
    _emit(args, "cgf.csv", rows, ["n", "t", "a", "M", "seed", "u", "theta", "phi", "predicted"])
    return EXIT_OK


def cmd_ge(args):
    prob = ldp.quadratic_problem(args.slope0, args.curvature, args.x, theta0=args.theta0, nu1=args.nu1)
    sol = ldp.ge_rate(prob)
    row = {"slope0": args.slope0, "curvature": args.curvature, "x": args.x, "y0": sol.y0,
           "rate": sol.rate, "leading_term": sol.leading_term, "status": sol.status}
    _emit(args, "ge.csv", [row], list(row))
    return EXIT_OK


def cmd_concentration(args):
    row = {
        "L": args.L, "M1": args.M1, "M2": args.M2, "s": args.s, "eps": args.eps,
        "bound": oracle.concentration_bound(args.L, args.M1, args.M2, args.s, args.eps),
        "exact": oracle.exact_EN_s(args.L, args.M1, args.M2, args.s),
    }
    _emit(args, "concentration.csv", [row], list(row))
    return EXIT_OK


def cmd_types(args):
    P = args.noise
    if P is not None and P.d != args.d:
        raise ConfigError("--noise length must equal --d")
    rows = list(types_csv_rows(args.n, args.d, P))
    _emit(args, "types.csv", rows, ["counts", "entropy", "divergence", "log_size"])
    return EXIT_OK


def run_experiment(cfg, out_dir):
    """Run every estimator over the n-grid; write measurements, predictions and a summary."""
    ch = cfg.additive_channel()
    V = varentropy(ch.noise)
    t, a, b = cfg.regime.t, cfg.regime.a, cfg.regime.b
    pred = ldp.predict(a, b, t, V) if (t == 0.5 or a > b) else None
    meas, preds, per_n = [], [], []
    exit_code = EXIT_OK
    feasible = 0
    for n in cfg.n_grid:
        n = int(n)
        params = RegimeParams(n, t, a, b, ch.capacity)
        entry = {"n": n, "T_n": threshold(params), "level": params.level}
        try:
            M = cfg.M or code_size(params)
        except InfeasibleScheduleError as exc:
            entry.update(status="infeasible", reason=str(exc))
            per_n.append(entry)
            log.warning("%s", exc)
            continue
        feasible += 1
        entry.update(status="ok", M=M)
        key = {"n": n, "t": t, "a": a, "b": b, "d": ch.d, "seed": cfg.seed, "M": M}
        mcfg = mc.McConfig(ch, n, M, params.level, cfg.sampler, t, a, b)
        started = time.perf_counter()
        gaps = {}
        F = None
        if {"E1", "E2_reweight", "cgf"} & set(cfg.estimators):
            F = mc.fn_samples(mcfg, cfg.trials, cfg.seed, mc.P_MEASURE, cfg.workers)
        results = {}
        if "E1" in cfg.estimators:
            results["E1"] = mc.e1_from_samples(F, params.level)
        if "E2_reweight" in cfg.estimators:
            results["E2_reweight"] = mc.e2_reweight_from_samples(F, params.level)
        if "E2_exchange" in cfg.estimators:
            Fq = mc.fn_samples(mcfg, cfg.trials, cfg.seed, mc.Q_MEASURE, cfg.workers)
            results["E2_exchange"] = mc.e2_exchange_from_samples(Fq, params.level, M)
        for name, est in results.items():
            meas.append({**key, "estimator": name, "estimate": est.estimate, "std_error": est.std_error,
                         "ci_radius": est.ci_radius, "trials": est.trials, "hits": est.hits})
        if "cgf" in cfg.estimators:
            cgf = mc.empirical_cgf(F, np.array(cfg.cgf_u) / n ** t)
            for u, val in zip(cfg.cgf_u, cgf.values):
                name = f"cgf_u={report.fmt(float(u))}"
                meas.append({**key, "estimator": name, "estimate": float(val), "trials": cfg.trials})
                target = (-a * u + u * u * V / 2.0) * n ** (1.0 - 2.0 * t)
                preds.append({**key, "estimator": name, "predicted": target, "kind": "cgf_leading"})
                gaps[name] = float(val) - target
        if "oracle" in cfg.estimators:
            try:
                ex = oracle.exact_ensemble(n, ch.d, M, ch, ForneyDecoder(threshold(params)))
                meas.append({**key, "estimator": "E1_exact", "estimate": ex.total})
                meas.append({**key, "estimator": "E2_exact", "estimate": ex.undetected})
            except BudgetExceededError as exc:
                entry["oracle"] = f"skipped: {exc}"
                exit_code = max(exit_code, EXIT_OK)
        if pred is not None:
            for row in _prediction_rows(pred, [n], ch.d, cfg.seed, ch.capacity, M_override=M):
                if row["estimator"] in results:
                    preds.append(row)
            if "E1" in results:
                gaps["E1"] = results["E1"].estimate - pred.e1_value(n)
            for name in ("E2_reweight", "E2_exchange"):
                est = results.get(name)
                if est is not None and est.estimate > 0:
                    gaps[name + "_neglog_per_scale_minus_b"] = -math.log(est.estimate) / n ** (1 - t) - b
        entry["gaps"] = gaps
        entry["wall_time_ms"] = round(1000.0 * (time.perf_counter() - started), 3)
        per_n.append(entry)
    os.makedirs(out_dir, exist_ok=True)
    report.save_csv(os.path.join(out_dir, "measurements.csv"), meas, report.MEASUREMENT_COLUMNS)
    report.save_csv(os.path.join(out_dir, "predictions.csv"), preds, report.PREDICTION_COLUMNS)
    summary = {
        "config": {"channel": cfg.channel.__dict__, "regime": cfg.regime.__dict__, "n_grid": cfg.n_grid,
                   "trials": cfg.trials, "seed": cfg.seed, "estimators": cfg.estimators,
                   "workers": cfg.workers, "sampler": cfg.sampler},
        "capacity": ch.capacity, "varentropy": V, "per_n": per_n,
    }
    report.save_json(os.path.join(out_dir, "summary.json"), summary)
    if feasible == 0:
        return EXIT_INFEASIBLE
    return exit_code


def cmd_simulate(args):
    if not args.config:
        raise ConfigError("simulate needs --config")
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    cfg = ExperimentConfig.from_dict(raw)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    out = args.out or cfg.output
    return run_experiment(cfg, out)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    common.add_argument("--workers", type=int, default=None, help="worker processes")
    common.add_argument("--out", help="output directory (default: stdout for single tables)")
    common.add_argument("-v", "--verbose", action="store_true")

    chan = argparse.ArgumentParser(add_help=False)
    chan.add_argument("--d", type=int)
    chan.add_argument("--noise", type=_noise_arg, help="comma-separated noise probabilities")
    chan.add_argument("--matrix", help="plain-text transition matrix file")

    p = argparse.ArgumentParser(prog="erasurelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("capacity", parents=[common, chan], help="Blahut-Arimoto capacity")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=10_000)
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("predict", parents=[common, chan], help="closed-form regime predictions")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--n-grid", type=_ints)
    s.add_argument("--assume-unique-caid", action="store_true")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo experiment from a config")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("oracle", parents=[common, chan], help="exact error probabilities")
    s.add_argument("--n", type=int)
    s.add_argument("--M", type=int)
    s.add_argument("--decoder", choices=["forney", "infospec"], default="forney")
    s.add_argument("--T", type=float)
    s.add_argument("--b", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--code-size", type=int)
    s.add_argument("--codebook", help="ERLB codebook file")
    s.add_argument("--ensemble", action="store_true", help="average over the uniform ensemble")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("cgf", parents=[common, chan], help="empirical CGF of F_n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--b", type=float, default=None)
    s.add_argument("--M", type=int)
    s.add_argument("--u", type=_floats, default=[1.0])
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--sampler", choices=["auto", "direct", "types"], default="auto")
    s.set_defaults(func=cmd_cgf)

    s = sub.add_parser("ge", parents=[common], help="shifted Gartner-Ellis rate for a quadratic nu2")
    s.add_argument("--slope0", type=float, required=True, help="nu2'(0)")
    s.add_argument("--curvature", type=float, required=True, help="nu2''")
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--theta0", type=float, default=0.0)
    s.add_argument("--nu1", type=float, default=0.0)
    s.set_defaults(func=cmd_ge)

    s = sub.add_parser("concentration", parents=[common], help="binomial E[N^s] vs its lower bound")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--M1", type=int, required=True)
    s.add_argument("--M2", type=int, required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.set_defaults(func=cmd_concentration)

    s = sub.add_parser("types", parents=[common], help="list n-types with H, D, log|T|")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--noise", type=_noise_arg)
    s.set_defaults(func=cmd_types)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command != "simulate":
        if args.seed is None:
            args.seed = 0
        if args.workers is None:
            args.workers = 1
    if args.command == "cgf" and args.b is None:
        args.b = min(args.a, 1.0) / 2.0 if args.a > 0 else 0.1
    try:
        return args.func(args)
    except InfeasibleScheduleError as exc:
        print(f"erasurelab: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetExceededError as exc:
        print(f"erasurelab: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ValidationError, AmbiguousCaidError) as exc:
        print(f"erasurelab: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
