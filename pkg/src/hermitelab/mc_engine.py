"""Monte Carlo orchestration, estimators and distribution tests.

Seeding: path pair ``b`` (paths ``2b`` and ``2b + 1``, which share one FFT)
draws from ``Philox(SeedSequence(seed, spawn_key=(b,)))``.  Every pair is
therefore reproducible on its own, and the sample array does not depend on
how pairs are distributed over workers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .chaos_tools import (
    RosenblattSpec,
    chaos2_cumulant,
    chaos2_sample,
    rosenblatt_kernel,
    rosenblatt_min_cells,
    rosenblatt_variance_extrapolated,
)
from .moving_average import check_admissible, parse_kernel
from .quadratic_functional import GLadderModel, chaos_decay_diagnostic, gaussian_case_variance
from .special_math import derive_params, limit_scale

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MCResult",
    "pair_rng",
    "run_experiment",
    "ks_two_sample",
    "sample_cumulants",
]

SCHEMA_VERSION = 1
COMPARISONS = ("variance", "ks", "cumulants")
REFERENCES = ("rosenblatt", "split")
CONSTANTS = ("paper", "corrected")
_REF_STREAM = 2**63  # spawn key of the reference-law stream, disjoint from pair indices


def _version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every problem found."""

    def __init__(self, errors: Sequence[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class ExperimentConfig:
    q: int
    H: float
    kernel: str
    T_ladder: tuple
    t: float = 1.0
    paths: int = 2000
    grid: int = 256
    seed: int = 0
    comparison: str = "variance"
    reference: str = "rosenblatt"
    constant: str = "paper"
    m: int = 16
    ref_cells: int = 2048
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Validate a config document, collecting every error before raising."""
        errors = []
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            errors.append(f"unknown keys: {', '.join(unknown)}")
        for key in ("q", "H", "kernel", "T_ladder"):
            if key not in data:
                errors.append(f"missing key: {key}")
        if errors:
            raise ConfigError(errors)
        kw = {k: data[k] for k in known if k in data}
        kw["T_ladder"] = tuple(kw["T_ladder"]) if isinstance(kw["T_ladder"], (list, tuple)) else kw["T_ladder"]
        cfg = cls(**kw)
        errs = cfg.validate()
        if errs:
            raise ConfigError(errs)
        return cfg

    def validate(self) -> list[str]:
        e = []
        if self.schema_version != SCHEMA_VERSION:
            e.append(f"unsupported schema_version {self.schema_version}")
        if not isinstance(self.q, int) or isinstance(self.q, bool) or self.q < 1:
            e.append("q must be an integer >= 1")
        if not isinstance(self.H, (int, float)) or not 0.5 < self.H < 1.0:
            e.append("H must lie in (1/2, 1)")
        try:
            parse_kernel(self.kernel)
        except (ValueError, TypeError, AttributeError) as exc:
            e.append(f"kernel: {exc}")
        ladder = self.T_ladder
        if not isinstance(ladder, tuple) or not ladder:
            e.append("T_ladder must be a non-empty list")
        elif not all(isinstance(v, (int, float)) and v > 0 for v in ladder):
            e.append("T_ladder entries must be positive numbers")
        elif any(b <= a for a, b in zip(ladder, ladder[1:])):
            e.append("T_ladder must be strictly increasing")
        if not isinstance(self.t, (int, float)) or not self.t > 0:
            e.append("t must be positive")
        if not isinstance(self.paths, int) or self.paths < 100:
            e.append("paths must be an integer >= 100")
        if not isinstance(self.grid, int) or self.grid < 256:
            e.append("grid must be an integer >= 256 (lattice points per unit time)")
        if not isinstance(self.m, int) or self.m < 16:
            e.append("m must be an integer >= 16")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            e.append("seed must be an unsigned 64-bit integer")
        if self.comparison not in COMPARISONS:
            e.append(f"comparison must be one of {', '.join(COMPARISONS)}")
        if self.reference not in REFERENCES:
            e.append(f"reference must be one of {', '.join(REFERENCES)}")
        if self.constant not in CONSTANTS:
            e.append(f"constant must be one of {', '.join(CONSTANTS)}")
        if not isinstance(self.ref_cells, int) or not 64 <= self.ref_cells <= 4096:
            e.append("ref_cells must be an integer in [64, 4096]")
        if not e and self.q == 1:
            decision = check_admissible(parse_kernel(self.kernel), derive_params(self.q, self.H))
            if not decision.accepted:
                e.append(f"kernel rejected: {decision.clause}")
        if not e:
            # the extrapolated target also uses a grid of ref_cells // 2
            Hr = derive_params(self.q, self.H).Hprime
            need = rosenblatt_min_cells(RosenblattSpec(Hr), self.t)
            if need is None:
                e.append(f"reference law for Hr={Hr:g} cannot be discretized within 4096 cells")
            elif self.ref_cells // 2 < need:
                e.append(f"ref_cells={self.ref_cells} too small for Hr={Hr:g}: need >= {2 * need}")
        return e

    def to_dict(self) -> dict:
        d = asdict(self)
        d["T_ladder"] = list(self.T_ladder)
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class MCResult:
    """Per-rung estimates with standard errors plus provenance."""

    config: dict
    config_hash: str
    code_version: str
    rungs: list = field(default_factory=list)
    target: float = math.nan
    reference: dict = field(default_factory=dict)
    ks: dict | None = None
    decay: dict | None = None
    errors: list = field(default_factory=list)
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k != "samples"}
        return json.dumps(_clean(d), indent=2, sort_keys=True)

    def rung_csv(self) -> str:
        """Columns ``T, mean, var, var_se, target, slope``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "mean", "var", "var_se", "target", "slope"])
        slope = self.decay["slope"] if self.decay else math.nan
        for r in self.rungs:
            w.writerow([_fmt(r["T"]), _fmt(r["mean"]), _fmt(r["var"]), _fmt(r["var_se"]),
                        _fmt(self.target), _fmt(slope)])
        return buf.getvalue()

    def long_csv(self) -> str:
        """Long format ``series, x, y, y_se`` for plotting."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series", "x", "y", "y_se"])
        for r in self.rungs:
            T = r["T"]
            w.writerow(["var_mc", _fmt(T), _fmt(r["var"]), _fmt(r["var_se"])])
            w.writerow(["k3_mc", _fmt(T), _fmt(r["k3"]), _fmt(r["k3_se"])])
            w.writerow(["target", _fmt(T), _fmt(self.target), ""])
            if r.get("var_gauss") is not None:
                w.writerow(["var_gaussian_quadrature", _fmt(T), _fmt(r["var_gauss"]), _fmt(r["var_gauss_err"])])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def _kstat_from_sums(n, s1, s2, s3, s4, m):
    if m == 2:
        return (n * s2 - s1**2) / (n * (n - 1))
    if m == 3:
        return (2 * s1**3 - 3 * n * s1 * s2 + n**2 * s3) / (n * (n - 1) * (n - 2))
    return (-6 * s1**4 + 12 * n * s1**2 * s2 - 3 * n * (n - 1) * s2**2
            - 4 * n * (n + 1) * s1 * s3 + n**2 * (n + 1) * s4) / (n * (n - 1) * (n - 2) * (n - 3))


def sample_cumulants(s, m: int) -> tuple[float, float]:
    """Unbiased k-statistic of order ``m`` with its jackknife standard error."""
    if m not in (2, 3, 4):
        raise ValueError("order must be 2, 3 or 4")
    x = np.asarray(s, dtype=np.float64).ravel()
    n = x.size
    if n < 200:
        raise ValueError("need at least 200 samples")
    est = float(stats.kstat(x, m))
    # k-statistics of order >= 2 are shift invariant; centring keeps power sums accurate
    x = x - x.mean()
    p = [x**r for r in range(1, 5)]
    S = [v.sum() for v in p]
    loo = _kstat_from_sums(n - 1, *(S[r] - p[r] for r in range(4)), m)
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return est, se


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 50 or b.size < 50:
        raise ValueError("both samples need at least 50 values")
    res = stats.ks_2samp(a, b, method="asymp")
    return float(res.statistic), float(min(max(res.pvalue, 0.0), 1.0))


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

def pair_rng(seed: int, pair: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(pair,))))


_worker_model: GLadderModel | None = None
_worker_seed = 0


def _build_model(cfg: ExperimentConfig, ladder) -> GLadderModel:
    return GLadderModel(derive_params(cfg.q, cfg.H), parse_kernel(cfg.kernel), ladder,
                        t=cfg.t, grid=cfg.grid, m=cfg.m)


def _init_worker(cfg: ExperimentConfig, ladder) -> None:
    global _worker_model, _worker_seed
    _worker_model = _build_model(cfg, ladder)
    _worker_seed = cfg.seed


def _run_pairs(pairs: range) -> np.ndarray:
    return np.concatenate([_worker_model.sample_pair(pair_rng(_worker_seed, b)) for b in pairs])


def _simulate(cfg: ExperimentConfig, ladder, workers: int, chunk: int = 8) -> np.ndarray:
    n_pairs = (cfg.paths + 1) // 2
    tasks = [range(i, min(i + chunk, n_pairs)) for i in range(0, n_pairs, chunk)]
    if workers <= 1:
        _init_worker(cfg, ladder)
        parts = [_run_pairs(r) for r in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(cfg, ladder)) as ex:
            parts = list(ex.map(_run_pairs, tasks))
    return np.concatenate(parts)[: cfg.paths]


def _stat(x, m):
    return sample_cumulants(x, m) if x.size >= 200 else (float(np.var(x, ddof=1)) if m == 2 else math.nan, math.nan)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> MCResult:
    """Simulate ``G_T(t)`` on every rung and compare with the Rosenblatt limit."""
    errs = cfg.validate()
    if errs:
        raise ConfigError(errs)
    p = derive_params(cfg.q, cfg.H)
    x = parse_kernel(cfg.kernel)
    result = MCResult(config=cfg.to_dict(), config_hash=cfg.digest(), code_version=_version())

    # rungs that cannot be simulated are reported and skipped
    ladder = []
    for T in cfg.T_ladder:
        try:
            _build_check(cfg, T)
            ladder.append(float(T))
        except ValueError as exc:
            result.errors.append(f"rung T={T:g}: {exc}")
    if not ladder:
        return result

    try:
        samples = _simulate(cfg, ladder, workers)
    except Exception as exc:  # keep the validated part of the result
        result.errors.append(f"simulation failed at ladder {ladder}: {exc}")
        return result
    result.samples = samples

    b = limit_scale(p, x, cfg.constant)
    rspec = RosenblattSpec(p.Hprime)
    kappa2 = rosenblatt_variance_extrapolated(rspec, cfg.t, cfg.ref_cells)
    result.target = b * b * kappa2

    for j, T in enumerate(ladder):
        g = samples[:, j]
        k2, k2se = _stat(g, 2)
        k3, k3se = _stat(g, 3)
        k4, k4se = _stat(g, 4)
        row = {"T": T, "mean": float(g.mean()), "mean_se": float(g.std(ddof=1) / math.sqrt(g.size)),
               "var": k2, "var_se": k2se, "k3": k3, "k3_se": k3se, "k4": k4, "k4_se": k4se,
               "var_gauss": None, "var_gauss_err": None}
        if p.q == 1:
            v, err = gaussian_case_variance(x, p.H, T, cfg.t, return_error=True)
            row["var_gauss"], row["var_gauss_err"] = v, err
        result.rungs.append(row)

    if cfg.comparison in ("ks", "cumulants"):
        K = rosenblatt_kernel(rspec, cfg.t, cfg.ref_cells)
        result.reference = {
            "b": b, "constant": cfg.constant, "Hr": p.Hprime, "kappa2": b**2 * chaos2_cumulant(K, 2),
            "kappa2_extrapolated": result.target,
            "kappa3": b**3 * chaos2_cumulant(K, 3), "kappa4": b**4 * chaos2_cumulant(K, 4),
        }
        last = samples[:, -1]
        if cfg.reference == "split":
            half = last.size // 2
            ref, test = last[half:], last[:half]
        else:
            rng = pair_rng(cfg.seed, _REF_STREAM)
            ref, test = b * chaos2_sample(K, cfg.paths, rng), last
        if cfg.comparison == "ks":
            try:
                d, pv = ks_two_sample(test, ref)
                result.ks = {"T": ladder[-1], "statistic": d, "p_value": pv, "n_test": test.size,
                             "n_ref": ref.size, "reference": cfg.reference}
            except ValueError as exc:
                result.errors.append(f"ks: {exc}")
        for m in (2, 3, 4):
            est, se = _stat(ref, m)
            result.reference[f"sample_k{m}"] = est
            result.reference[f"sample_k{m}_se"] = se

    if p.q >= 2 and len(ladder) >= 2:
        rep = chaos_decay_diagnostic(p, x, ladder, cfg.paths, pair_rng(cfg.seed, _REF_STREAM + 1),
                                     t=cfg.t, target=result.target, samples=samples, n_boot=500)
        result.decay = asdict(rep)
    return result


def _build_check(cfg: ExperimentConfig, T: float) -> None:
    step = cfg.m / cfg.grid
    k = T * cfg.t / step
    if abs(k - round(k)) > 1e-9 * k:
        raise ValueError(f"T t = {T * cfg.t:g} is not a multiple of the output step {step:g}")
    if step > T * cfg.t / 256:
        raise ValueError(f"output step {step:g} too coarse (needs T t / 256)")
