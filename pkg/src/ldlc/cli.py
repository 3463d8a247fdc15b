"""Command-line front end: lattice generation, word-error-rate sweeps,
noise-threshold search, and a mixture-reduction demo.

Subcommands
-----------
gen          draw a Latin-square lattice code and write its check matrix
simulate     run an AWGN word-error-rate sweep, CSV + JSON-sidecar output
threshold    bisect for the lowest convergent SNR via density evolution
reduce-demo  reduce a Gaussian mixture read from JSON and report stats

Every flag can also be supplied through ``--config FILE`` (a flat JSON
object keyed by the long flag names with dashes replaced by underscores);
explicit flags win over config-file values.  The default seed comes from
the ``LDLC_SEED`` environment variable when set, else 0.  Every output
file embeds the fully resolved configuration.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bp, channel, lattice, mcde
from .gmix import GaussianMixture, ReductionParams, gql, reduce

SEED_ENV_VAR = "LDLC_SEED"


class UsageError(Exception):
    """Bad or missing parameters; maps to exit code 2."""


class NumericalError(Exception):
    """Computation failed (singular draw, invalid bracket); exit code 3."""


# ---------------------------------------------------------------------------
# config resolution


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def _resolve(args: argparse.Namespace, defaults: dict, required: tuple[str, ...]) -> dict:
    """Merge flag values over config-file values over hard defaults.

    A flag left at its argparse default (None) falls back to the config
    file, then to ``defaults``; keys listed in ``required`` must end up
    with a value from one of those sources.
    """
    cfg = _load_config(getattr(args, "config", None))
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    resolved = {}
    for key, hard in defaults.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            resolved[key] = flag_val
        elif key in cfg:
            resolved[key] = cfg[key]
        else:
            resolved[key] = hard
    for key in required:
        if resolved[key] is None:
            flag = "--" + key.replace("_", "-")
            raise UsageError(f"missing required parameter {flag}")
    return resolved


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _decoder_params(cfg: dict) -> bp.DecoderParams:
    radius = int(cfg["b_radius"])
    if radius < 0:
        raise UsageError("b-radius must be >= 0")
    try:
        return bp.DecoderParams(
            reduction=ReductionParams(theta=float(cfg["theta"]), m_max=int(cfg["m_max"])),
            gamma=float(cfg["gamma"]),
            b_set=tuple(range(-radius, radius + 1)),
            max_iters=int(cfg["max_iters"]),
            stability_window=int(cfg["stability_window"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _json_safe(obj):
    """Replace non-finite floats with None so output files stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# gen


GEN_DEFAULTS = {"n": None, "d": None, "seed": None, "out": None}


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _resolve(args, GEN_DEFAULTS, required=("n", "d", "out"))
    if cfg["seed"] is None:
        cfg["seed"] = _default_seed()
    n, d, seed = int(cfg["n"]), int(cfg["d"]), int(cfg["seed"])
    if n < 1 or d < 1 or d > n:
        raise UsageError(f"need 1 <= d <= n, got n={n} d={d}")
    try:
        code = lattice.generate(n, d, seed)
    except lattice.LatticeError as exc:
        raise NumericalError(str(exc)) from exc
    lattice.save_matrix(code, cfg["out"])
    abs_det = math.exp(lattice._log_abs_det(code.csc()))
    print(f"n={n} d={d} seed={seed} norm_scale={code.norm_scale!r} "
          f"|det|={abs_det:.12f} -> {cfg['out']}")
    if abs(abs_det - 1.0) > lattice.DET_TOL:
        raise NumericalError(f"determinant check failed: |det|={abs_det!r}")
    return 0


# ---------------------------------------------------------------------------
# simulate


SIM_DEFAULTS = {
    "matrix": None, "snr_db": None, "trials": None, "seed": None,
    "theta": 0.01, "m_max": 1000, "gamma": 1e-4, "b_radius": 1,
    "max_iters": 200, "stability_window": 5, "workers": 1,
    "out": None, "sidecar": None,
}


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolve(args, SIM_DEFAULTS, required=("matrix", "snr_db", "trials", "out"))
    if cfg["seed"] is None:
        cfg["seed"] = _default_seed()
    if cfg["sidecar"] is None:
        cfg["sidecar"] = cfg["out"] + ".stats.json"
    snrs = cfg["snr_db"]
    if isinstance(snrs, str):
        snrs = _float_list(snrs)
    snrs = [float(s) for s in snrs]
    trials = int(cfg["trials"])
    workers = int(cfg["workers"])
    if trials < 1:
        raise UsageError("trials must be >= 1")
    if workers < 1:
        raise UsageError("workers must be >= 1")
    dec = _decoder_params(cfg)
    try:
        code = lattice.load_matrix(cfg["matrix"])
    except OSError as exc:
        raise UsageError(f"cannot read matrix file: {exc}") from exc
    except lattice.LatticeError as exc:
        raise NumericalError(f"matrix file failed validation: {exc}") from exc

    cfg["snr_db"] = snrs
    echo = {"subcommand": "simulate", **cfg}
    results = []
    for snr in snrs:
        res = channel.simulate_wer(code, snr, trials, dec, int(cfg["seed"]),
                                   workers=workers)
        results.append(res)
        print(f"snr_db={snr:g} wer={res.wer:.4g} "
              f"ci95=[{res.ci95_lo:.4g},{res.ci95_hi:.4g}] "
              f"avg_iters={res.avg_iters:.2f}")

    with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
        fh.write("# config " + json.dumps(echo, sort_keys=True) + "\n")
        fh.write("snr_db,sigma2,trials,word_errors,wer,ci95,avg_iters\n")
        for res in results:
            fh.write(f"{res.snr_db!r},{res.sigma2!r},{res.trials},"
                     f"{res.word_errors},{res.wer!r},{res.ci95!r},"
                     f"{res.avg_iters!r}\n")
    _write_json(cfg["sidecar"], {
        "config": echo,
        "m_stats": [{"snr_db": res.snr_db,
                     "histogram": {str(m): c for m, c in res.m_stats.items()}}
                    for res in results],
    })
    return 0


# ---------------------------------------------------------------------------
# threshold


THR_DEFAULTS = {
    "d": None, "theta": 0.01, "m_max": 1000, "gamma": 1e-4, "b_radius": 1,
    "pool_size": None, "resolution_db": None, "bracket_db": None,
    "max_iters": 200, "stability_window": 5, "eps": None, "seed": None,
    "out": None, "log": None, "stub_threshold_db": None,
}


def cmd_threshold(args: argparse.Namespace) -> int:
    cfg = _resolve(args, THR_DEFAULTS,
                   required=("d", "pool_size", "resolution_db", "bracket_db", "out"))
    if cfg["seed"] is None:
        cfg["seed"] = _default_seed()
    bracket = cfg["bracket_db"]
    if isinstance(bracket, str):
        bracket = _float_list(bracket)
    bracket = [float(b) for b in bracket]
    if len(bracket) != 2 or not bracket[0] < bracket[1]:
        raise UsageError(f"bracket-db must be LO,HI with LO < HI, got {bracket}")
    resolution = float(cfg["resolution_db"])
    if resolution <= 0:
        raise UsageError("resolution-db must be positive")
    pool_size = int(cfg["pool_size"])
    if pool_size < 1:
        raise UsageError("pool-size must be >= 1")
    if cfg["eps"] is not None and float(cfg["eps"]) <= 0:
        raise UsageError("eps must be positive")
    dec = _decoder_params(cfg)
    profile = mcde.CodeProfile.latin(int(cfg["d"]))

    convergence_test = None
    if cfg["stub_threshold_db"] is not None:
        stub = float(cfg["stub_threshold_db"])

        def convergence_test(snr_db: float) -> mcde.ConvergenceRun:
            ok = snr_db >= stub
            return mcde.ConvergenceRun(ok, 1 if ok else int(cfg["max_iters"]),
                                       (), mcde.MessageStats())

    cfg["bracket_db"] = bracket
    echo = {"subcommand": "threshold", **cfg}
    log_stream = None
    try:
        if cfg["log"] is not None:
            log_stream = open(cfg["log"], "w", encoding="utf-8")
            log_stream.write(json.dumps({"config": echo}, sort_keys=True) + "\n")
        try:
            result = mcde.find_threshold(
                profile, dec, pool_size, resolution, (bracket[0], bracket[1]),
                int(cfg["seed"]), max_iters=int(cfg["max_iters"]),
                eps=None if cfg["eps"] is None else float(cfg["eps"]),
                convergence_test=convergence_test, log_stream=log_stream)
        except ValueError as exc:
            raise NumericalError(str(exc)) from exc
    finally:
        if log_stream is not None:
            log_stream.close()

    _write_json(cfg["out"], {"config": echo, "result": result.to_json_dict()})
    print(f"threshold_db={result.threshold_db:g} "
          f"bracket_db=[{result.bracket_db[0]:g},{result.bracket_db[1]:g}] "
          f"iters_at_threshold={result.iters_at_threshold}")
    return 0


# ---------------------------------------------------------------------------
# reduce-demo


DEMO_DEFAULTS = {"input": None, "theta": 0.01, "m_max": 1000, "out": None}


def cmd_reduce_demo(args: argparse.Namespace) -> int:
    cfg = _resolve(args, DEMO_DEFAULTS, required=("input",))
    try:
        with open(cfg["input"], "r", encoding="utf-8") as fh:
            triples = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read mixture file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"mixture file is not valid JSON: {exc}") from exc
    try:
        mix = GaussianMixture.from_triples(triples)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad mixture: {exc}") from exc
    try:
        params = ReductionParams(theta=float(cfg["theta"]), m_max=int(cfg["m_max"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    reduced = reduce(mix, params)
    pairs = [(gql(reduced[i], reduced[j]), i, j)
             for i in range(len(reduced)) for j in range(i + 1, len(reduced))]
    echo = {"subcommand": "reduce-demo", **cfg}
    payload = {
        "config": echo,
        "input_components": len(mix),
        "output_components": len(reduced),
        "mixture": [[c.mean, c.variance, c.weight] for c in reduced],
        "stats": {
            "mean_before": mix.mean(),
            "mean_after": reduced.mean(),
            "variance_before": mix.variance(),
            "variance_after": reduced.variance(),
            "min_pair_loss": min(pairs)[0] if pairs else None,
        },
    }
    if cfg["out"] is not None:
        _write_json(cfg["out"], payload)
    else:
        json.dump(_json_safe(payload), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    print(f"components: {len(mix)} -> {len(reduced)}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldlc",
        description="Lattice-code toolkit: generation, decoding sweeps, "
                    "density-evolution thresholds, mixture reduction.",
        epilog=f"Default seed comes from ${SEED_ENV_VAR} when set, else 0.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=str, default=None,
                       help="JSON file of defaults; explicit flags win")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")

    def add_decoder_flags(p):
        p.add_argument("--theta", type=float, default=None,
                       help="reduction threshold (default 0.01)")
        p.add_argument("--m-max", type=int, default=None,
                       help="component cap after reduction (default 1000)")
        p.add_argument("--gamma", type=float, default=None,
                       help="variance clamp on message outputs (default 1e-4)")
        p.add_argument("--b-radius", type=int, default=None,
                       help="integer search radius: b in {-r..r} (default 1)")
        p.add_argument("--max-iters", type=int, default=None,
                       help="iteration cap (default 200)")

    p = sub.add_parser("gen", help="generate a lattice check matrix file")
    p.add_argument("--n", type=int, default=None, help="dimension")
    p.add_argument("--d", type=int, default=None, help="row/column weight")
    p.add_argument("--out", type=str, default=None, help="output matrix path")
    add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("simulate", help="AWGN word-error-rate sweep")
    p.add_argument("--matrix", type=str, default=None, help="matrix file from gen")
    p.add_argument("--snr-db", type=_float_list, default=None,
                   metavar="S1,S2,...", help="SNR points in dB")
    p.add_argument("--trials", type=int, default=None, help="trials per SNR point")
    add_decoder_flags(p)
    p.add_argument("--stability-window", type=int, default=None,
                   help="stop after this many stable estimates (default 5)")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel trial workers (default 1)")
    p.add_argument("--out", type=str, default=None, help="output CSV path")
    p.add_argument("--sidecar", type=str, default=None,
                   help="stats JSON path (default OUT.stats.json)")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("threshold", help="bisect for the convergence threshold")
    p.add_argument("--d", type=int, default=None, help="row/column weight")
    add_decoder_flags(p)
    p.add_argument("--pool-size", type=int, default=None, help="samples per label pool")
    p.add_argument("--resolution-db", type=float, default=None,
                   help="stop when the bracket is this narrow")
    p.add_argument("--bracket-db", type=_float_list, default=None, metavar="LO,HI",
                   help="initial bracket: LO must diverge, HI must converge")
    p.add_argument("--eps", type=float, default=None,
                   help="convergence mse cutoff (default: clamp-aware)")
    p.add_argument("--out", type=str, default=None, help="output JSON path")
    p.add_argument("--log", type=str, default=None,
                   help="JSONL probe log (one line per bisection step)")
    p.add_argument("--stub-threshold-db", type=float, default=None,
                   help="test hook: replace density evolution with the "
                        "predicate snr >= STUB")
    add_common(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("reduce-demo", help="reduce a mixture from a JSON file")
    p.add_argument("--in", dest="input", type=str, default=None,
                   help="JSON file: list of [mean, variance, weight]")
    p.add_argument("--theta", type=float, default=None,
                   help="reduction threshold (default 0.01)")
    p.add_argument("--m-max", type=int, default=None,
                   help="component cap (default 1000)")
    p.add_argument("--out", type=str, default=None,
                   help="output JSON path (default: stdout)")
    p.add_argument("--config", type=str, default=None,
                   help="JSON file of defaults; explicit flags win")
    p.set_defaults(func=cmd_reduce_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
