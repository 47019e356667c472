"""Command line entry point: ``hermitelab {identities,simulate,sweep,compare}``.

Exit codes: 0 success, 1 check failure (or partial results), 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunManifest:
    subcommand: str
    config_path: str | None
    output_dir: str
    started: str
    finished: str
    config_hash: str | None
    code_version: str
    argv: list

    def write(self, out: Path) -> None:
        (out / "manifest.json").write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _num(v) -> str:
    return "" if v is None else repr(float(v))


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

H0_GRID = tuple(round(0.55 + 0.05 * i, 2) for i in range(9))


def identity_rows(h0_extra=(), seed: int = 20240607):
    """Rows ``(identity, params, value, reference, error, tolerance, passed)``."""
    from scipy import special

    from .moving_average import parse_kernel
    from .special_math import (
        beta_convolution_identity,
        beta_convolution_numeric,
        derive_params,
        limit_constant_b,
        limit_prefactor,
        tempered_power_extrapolated,
        tempered_power_integral,
    )

    rows = []
    for H0 in list(H0_GRID) + [h for h in h0_extra if h not in H0_GRID]:
        exact = tempered_power_integral(H0)
        num = tempered_power_extrapolated(H0)
        err = abs(abs(num) - abs(exact)) / abs(exact)
        phase = abs(np.angle(num) - np.angle(exact))
        rows.append(("appendix_modulus", f"H0={H0:g}", f"{num.real:.9f}{num.imag:+.9f}i",
                     f"{exact.real:.9f}{exact.imag:+.9f}i", err, 1e-6, err <= 1e-6))
        rows.append(("appendix_phase", f"H0={H0:g}", repr(float(np.angle(num))),
                     repr(-0.5 * math.pi * (H0 - 0.5)), phase, 1e-6, phase <= 1e-6))
    rng = np.random.default_rng(seed)
    for _ in range(20):
        z1, z2 = rng.uniform(0.0, 5.0, 2)
        H0 = rng.uniform(0.55, 0.95)
        exact = beta_convolution_identity(z1, z2, H0)
        num = beta_convolution_numeric(z1, z2, H0)
        err = abs(num - exact) / exact
        rows.append(("beta_convolution", f"z1={z1:.6f},z2={z2:.6f},H0={H0:.6f}", repr(num),
                     repr(exact), err, 1e-8, err <= 1e-8))
    for q in (1, 2, 3):
        for H in (0.8, 0.7, 0.9) if q == 1 else (0.6, 0.7, 0.9):
            p = derive_params(q, H)
            if not p.nclt:
                continue
            for theta in (0.5, 1.0, 2.0):
                x = parse_kernel(f"exp:theta={theta:g}")
                alpha = (q - 1) * (2.0 * p.H0 - 2.0)
                exact = limit_prefactor(p) * special.gamma(alpha + 1.0) / theta ** (alpha + 2.0)
                num = limit_constant_b(p, x)
                err = abs(num - exact) / exact
                rows.append(("b_exp_kernel", f"q={q},H={H:g},theta={theta:g}", repr(num), repr(exact),
                             err, 1e-6, err <= 1e-6))
    return rows


def cmd_identities(args) -> int:
    out = _outdir(args)
    started = _now()
    rows = identity_rows(tuple(args.h0 or ()))
    _write_csv(out / "identities.csv",
               ["identity", "params", "value", "reference", "error", "tolerance", "passed"],
               [(r[0], r[1], r[2], r[3], _num(r[4]), _num(r[5]), str(bool(r[6])).lower()) for r in rows])
    failed = [r for r in rows if not r[6]]
    for r in rows:
        if args.h0 and r[0] == "appendix_modulus" and float(r[1][3:]) in args.h0:
            print(f"appendix identity at {r[1]}: closed form {r[3]}, numeric {r[2]}")
    print(f"{len(rows) - len(failed)}/{len(rows)} identity checks passed")
    for r in failed:
        print(f"FAIL {r[0]} {r[1]}: error {r[4]:.3g} > {r[5]:g}", file=sys.stderr)
    _manifest(args, out, started, None)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# config-driven subcommands
# ---------------------------------------------------------------------------

def _load_config(args):
    from .mc_engine import ConfigError, ExperimentConfig

    try:
        data = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from None
    if not isinstance(data, dict):
        raise ConfigError(["config must be a JSON object"])
    if args.seed is not None:
        data["seed"] = args.seed
    return ExperimentConfig.from_dict(data)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out: Path, started: str, cfg) -> None:
    from .mc_engine import _version

    RunManifest(
        subcommand=args.command, config_path=getattr(args, "config", None), output_dir=str(out),
        started=started, finished=_now(), config_hash=cfg.digest() if cfg else None,
        code_version=_version(), argv=sys.argv[1:],
    ).write(out)


def cmd_simulate(args) -> int:
    from .hermite_sim import HermiteRankSimulator
    from .mc_engine import pair_rng
    from .moving_average import ma_filter, parse_kernel
    from .special_math import derive_params

    cfg = _load_config(args)
    out = _outdir(args)
    started = _now()
    p = derive_params(cfg.q, cfg.H)
    x = parse_kernel(cfg.kernel)
    horizon = cfg.T_ladder[-1] * cfg.t
    step = cfg.m / cfg.grid
    n = int(round(horizon / step))
    sim = HermiteRankSimulator(p, n, horizon, cfg.m)
    dz, _ = sim.increment_pair(pair_rng(cfg.seed, 0))
    z = np.concatenate([[0.0], np.cumsum(dz)])
    X = ma_filter(x, sim.delta, dz)
    t = sim.delta * np.arange(n + 1)
    _write_csv(out / "driver.csv", ["t", "value"], zip(map(_num, t), map(_num, z)))
    _write_csv(out / "X.csv", ["t", "value"], zip(map(_num, t), map(_num, X)))
    print(f"wrote {n + 1} points of Z and X on [0, {horizon:g}] to {out}")
    _manifest(args, out, started, cfg)
    return EXIT_OK


def _write_result(out: Path, res) -> None:
    (out / "result.json").write_text(res.to_json() + "\n")
    slope = res.decay["slope"] if res.decay else None
    rows = [(_num(r["T"]), _num(r["mean"]), _num(r["var"]), _num(r["var_se"]), _num(res.target),
             _num(slope), _num(r["var_gauss"]), _num(r["k3"]), _num(r["k3_se"])) for r in res.rungs]
    _write_csv(out / "rungs.csv",
               ["T", "mean", "var", "var_se", "target", "slope", "var_gaussian", "k3", "k3_se"], rows)
    (out / "series.csv").write_text(res.long_csv())


def cmd_sweep(args) -> int:
    from .mc_engine import run_experiment

    cfg = _load_config(args)
    out = _outdir(args)
    started = _now()
    res = run_experiment(cfg, workers=args.workers)
    _write_result(out, res)
    for r in res.rungs:
        extra = f"  gaussian={r['var_gauss']:.6f}" if r["var_gauss"] is not None else ""
        print(f"T={r['T']:g}  var={r['var']:.6f} +- {r['var_se']:.6f}  target={res.target:.6f}{extra}")
    for e in res.errors:
        print(f"error: {e}", file=sys.stderr)
    _manifest(args, out, started, cfg)
    return EXIT_FAIL if res.errors else EXIT_OK


def cmd_compare(args) -> int:
    from .mc_engine import ConfigError, run_experiment

    cfg = _load_config(args)
    if cfg.comparison not in ("ks", "cumulants"):
        raise ConfigError(["compare needs comparison = ks or cumulants"])
    out = _outdir(args)
    started = _now()
    res = run_experiment(cfg, workers=args.workers)
    _write_result(out, res)
    if res.rungs:
        last = res.rungs[-1]
        ref = res.reference
        rows = []
        for m in (2, 3, 4):
            rows.append((m, _num(last[f"k{m}" if m > 2 else "var"]), _num(last[f"k{m}_se" if m > 2 else "var_se"]),
                         _num(ref.get(f"sample_k{m}")), _num(ref.get(f"sample_k{m}_se")),
                         _num(ref.get(f"kappa{m}"))))
        _write_csv(out / "cumulants.csv",
                   ["order", "G_k", "G_k_se", "reference_k", "reference_k_se", "oracle"], rows)
        for r in rows:
            print(f"k{r[0]}: G={r[1]} (se {r[2]})  reference={r[3]} (se {r[4]})  oracle={r[5]}")
    if res.ks:
        print(f"KS T={res.ks['T']:g}: D={res.ks['statistic']:.4f} p={res.ks['p_value']:.4g}")
    for e in res.errors:
        print(f"error: {e}", file=sys.stderr)
    _manifest(args, out, started, cfg)
    return EXIT_FAIL if res.errors else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hermitelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, needs_config=True):
        if needs_config:
            sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", default="hermitelab-out", help="output directory")
        sp.add_argument("--seed", type=_u64, default=None, help="override the config seed")
        sp.add_argument("--workers", type=_positive, default=1, help="worker processes")

    sp = sub.add_parser("identities", help="check the analytic identities")
    common(sp, needs_config=False)
    sp.add_argument("--h0", type=_h0, action="append", help="extra H0 for the appendix identity")
    sp.set_defaults(func=cmd_identities)
    for name, func, text in (("simulate", cmd_simulate, "write driver and X paths"),
                             ("sweep", cmd_sweep, "variance ladder against the limit"),
                             ("compare", cmd_compare, "KS and cumulants against the reference law")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.set_defaults(func=func)
    return parser


def _u64(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _h0(s: str) -> float:
    v = float(s)
    if not 0.5 < v < 1.0:
        raise argparse.ArgumentTypeError("H0 must lie in (1/2, 1)")
    return v


def main(argv=None) -> int:
    from .mc_engine import ConfigError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
