"""Batch experiment runner: multi-trial fits across methods and fault levels.

Protocol per trial t: re-split the data with seed base_seed + t, train every
(method, fault level) cell on the train half with the training inputs as
centers, and evaluate the closed-form faulty error on the test half.  Fault
evaluation is analytic, so the only stochastic ingredient is the split.

Output files (all deterministic for a fixed config and seed):
  results.csv   one row per (trial, method, fault level)
  summary.csv   per-(method, fault) mean error and node count
  ttest.csv     paired comparisons between methods at each fault level
  trace_*.csv   per-cell iteration traces
  manifest.json resolved configuration
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .admm import RhoPolicy
from .data import (
    Dataset,
    SplitSpec,
    load_delimited,
    normalize,
    split,
    synthetic_sinc,
    uci_preset,
)
from .design import SmoothObjective, build_design, build_regularizer
from .faults import FaultSpec
from .solvers import FitReport, SolverConfig, fit_objective

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "parse_config",
    "read_config",
    "run_experiment",
    "paired_t_test",
    "PairedTTest",
    "regularized_incomplete_beta",
    "student_t_sf",
    "student_t_ppf",
    "emit_sweep_curve",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment description (see README for the file format)."""

    dataset: str                      # "sinc" or a file path
    width: float
    train_size: int
    methods: tuple[SolverConfig, ...]
    fault_levels: tuple[tuple[float, float], ...]
    n_trials: int = 1
    base_seed: int = 0
    normalize_scheme: str = "minmax01"
    target_column: int = -1
    delimiter: str | None = None
    header: bool = False
    sinc_n: int = 400
    sinc_noise: float = 0.05
    out_dir: str = "."

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.n_trials}")
        if not self.methods:
            raise ValueError("at least one method is required")
        if not self.fault_levels:
            raise ValueError("at least one fault level is required")


@dataclass(frozen=True)
class TrialResult:
    """One cell of the trial grid.  ``wall_time`` is informational only and
    never serialized, so reruns produce bit-identical result files."""

    trial: int
    method_id: str
    fault: tuple[float, float]
    test_mse: float
    n_centers: int
    converged: bool
    status: str
    wall_time: float = 0.0


_RESULT_FIELDS = ("trial", "method", "fault_open_prob", "fault_mult_var",
                  "test_mse", "n_centers", "converged", "status")


# ---------------------------------------------------------------------------
# config file parsing


_GLOBAL_METHOD_KEYS = ("lambda", "gamma", "k_max", "prox_variant", "refit",
                       "rho", "rho_safety", "tol", "max_iter")


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"cannot parse boolean from {s!r}")


def _parse_fault_levels(s: str) -> tuple[tuple[float, float], ...]:
    levels = []
    for part in s.replace(";", ",").split(","):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) != 2:
            raise ValueError(
                f"fault level {part!r} must look like open_prob:mult_var"
            )
        levels.append((float(bits[0]), float(bits[1])))
    if not levels:
        raise ValueError("fault_levels is empty")
    return tuple(levels)


def _rho_policy(rho: str, safety: float) -> RhoPolicy:
    if rho.strip().lower() == "auto":
        return RhoPolicy(mode="auto", safety=safety)
    return RhoPolicy(mode="fixed", value=float(rho))


def _method_config(name: str, params: dict[str, str], defaults: dict[str, str]) -> SolverConfig:
    merged = dict(defaults)
    merged.update(params)
    kwargs = {"method": name}
    if "lambda" in merged:
        kwargs["lam"] = float(merged["lambda"])
    if "gamma" in merged:
        kwargs["gamma"] = float(merged["gamma"])
    if "k_max" in merged:
        kwargs["k_max"] = int(merged["k_max"])
    if "prox_variant" in merged:
        kwargs["prox_variant"] = merged["prox_variant"]
    if "refit" in merged:
        kwargs["refit"] = _parse_bool(merged["refit"])
    if "tol" in merged:
        kwargs["tol"] = float(merged["tol"])
    if "max_iter" in merged:
        kwargs["max_iter"] = int(merged["max_iter"])
    safety = float(merged.get("rho_safety", 1.1))
    kwargs["rho_policy"] = _rho_policy(merged.get("rho", "auto"), safety)
    unknown = set(merged) - set(_GLOBAL_METHOD_KEYS)
    if unknown:
        raise ValueError(f"unknown method parameter(s): {sorted(unknown)}")
    return SolverConfig(**kwargs)


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key-value experiment config format.

    Lines are ``key = value``; ``#`` starts a comment; repeated ``method``
    lines each declare one solver as ``method = <name> key=value ...`` with
    the global keys (lambda, gamma, k_max, rho, ...) as per-method defaults.
    """
    globals_: dict[str, str] = {}
    method_lines: list[tuple[str, dict[str, str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "method":
            toks = value.split()
            if not toks:
                raise ValueError(f"config line {lineno}: empty method")
            params = {}
            for tok in toks[1:]:
                if "=" not in tok:
                    raise ValueError(
                        f"config line {lineno}: method parameter {tok!r} "
                        f"must look like key=value"
                    )
                k, v = tok.split("=", 1)
                params[k.strip()] = v.strip()
            method_lines.append((toks[0], params))
        else:
            globals_[key] = value

    if "dataset" not in globals_:
        raise ValueError("config is missing the dataset key")
    if not method_lines:
        raise ValueError("config declares no methods")

    width = None
    train_size = None
    if "preset" in globals_:
        width, train_size, _, _ = uci_preset(globals_["preset"])
    if "width" in globals_:
        width = float(globals_["width"])
    if "train_size" in globals_:
        train_size = int(globals_["train_size"])
    if width is None:
        raise ValueError("config needs width (directly or via preset)")
    if train_size is None:
        raise ValueError("config needs train_size (directly or via preset)")

    defaults = {k: v for k, v in globals_.items() if k in _GLOBAL_METHOD_KEYS}
    methods = tuple(_method_config(name, params, defaults)
                    for name, params in method_lines)

    delim = globals_.get("delimiter")
    if delim is not None and delim.lower() == "whitespace":
        delim = None

    known = {"dataset", "preset", "width", "train_size", "target_column",
             "delimiter", "header", "normalize", "fault_levels", "trials",
             "seed", "sinc_n", "sinc_noise", "out"} | set(_GLOBAL_METHOD_KEYS)
    unknown = set(globals_) - known
    if unknown:
        raise ValueError(f"unknown config key(s): {sorted(unknown)}")

    return ExperimentConfig(
        dataset=globals_["dataset"],
        width=width,
        train_size=train_size,
        methods=methods,
        fault_levels=_parse_fault_levels(globals_.get("fault_levels", "0:0")),
        n_trials=int(globals_.get("trials", "1")),
        base_seed=int(globals_.get("seed", "0")),
        normalize_scheme=globals_.get("normalize", "minmax01"),
        target_column=int(globals_.get("target_column", "-1")),
        delimiter=delim,
        header=_parse_bool(globals_.get("header", "false")),
        sinc_n=int(globals_.get("sinc_n", "400")),
        sinc_noise=float(globals_.get("sinc_noise", "0.05")),
        out_dir=globals_.get("out", "."),
    )


def read_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# trial execution


def _load_dataset(config: ExperimentConfig) -> tuple[Dataset, dict | None]:
    if config.dataset == "sinc":
        ds = synthetic_sinc(config.sinc_n, config.sinc_noise, seed=config.base_seed)
    else:
        ds = load_delimited(config.dataset, delimiter=config.delimiter,
                            target_column=config.target_column,
                            header=config.header)
    if config.normalize_scheme == "none":
        return ds, None
    ds, record = normalize(ds, config.normalize_scheme)
    return ds, record


def _method_ids(config: ExperimentConfig) -> list[str]:
    return [f"m{i}-{m.method}" for i, m in enumerate(config.methods)]


def _run_trial(config: ExperimentConfig, ds: Dataset, trial: int,
               out_dir: str | None) -> list[TrialResult]:
    train, test = split(ds, SplitSpec(train_size=config.train_size,
                                      seed=config.base_seed + trial))
    # centers are all training inputs; the solvers do the selecting
    design = build_design(train.inputs, train.inputs, config.width,
                          targets=train.targets)
    test_design = build_design(test.inputs, train.inputs, config.width)

    results = []
    ids = _method_ids(config)
    for f_idx, (p, v) in enumerate(config.fault_levels):
        fault = FaultSpec(open_prob=p, mult_var=v)
        obj = SmoothObjective(design, build_regularizer(design, fault),
                              train.targets)
        for m_idx, method in enumerate(config.methods):
            t0 = time.perf_counter()
            try:
                report = fit_objective(obj, fault, method,
                                       test_design=test_design,
                                       y_test=test.targets)
                elapsed = time.perf_counter() - t0
                if out_dir is not None:
                    trace_name = f"trace_t{trial}_{ids[m_idx]}_f{f_idx}.csv"
                    report.trace.write_csv(Path(out_dir) / trace_name)
                results.append(TrialResult(
                    trial=trial,
                    method_id=ids[m_idx],
                    fault=(p, v),
                    test_mse=report.test_error_faulty,
                    n_centers=report.n_centers_used,
                    converged=report.converged,
                    status="ok",
                    wall_time=elapsed,
                ))
            except Exception as exc:  # cell isolation: record, keep going
                results.append(TrialResult(
                    trial=trial,
                    method_id=ids[m_idx],
                    fault=(p, v),
                    test_mse=math.nan,
                    n_centers=0,
                    converged=False,
                    status=f"error: {exc}",
                    wall_time=time.perf_counter() - t0,
                ))
    return results


def _trial_worker(args):
    config, ds, trial, out_dir = args
    return _run_trial(config, ds, trial, out_dir)


def run_experiment(config: ExperimentConfig, jobs: int = 1,
                   verbose: bool = False) -> list[TrialResult]:
    """Execute the full trial grid and write the result files to
    ``config.out_dir``.  Returns the per-cell results in canonical order."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds, norm_record = _load_dataset(config)

    jobs = max(1, int(jobs))
    work = [(config, ds, t, str(out)) for t in range(config.n_trials)]
    if jobs == 1 or config.n_trials == 1:
        per_trial = [_trial_worker(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_trial = list(pool.map(_trial_worker, work))

    results = [r for rows in per_trial for r in rows]
    order = {mid: i for i, mid in enumerate(_method_ids(config))}
    fault_order = {f: i for i, f in enumerate(config.fault_levels)}
    results.sort(key=lambda r: (r.trial, order[r.method_id], fault_order[r.fault]))

    _write_results(results, out / "results.csv")
    _write_summary(results, out / "summary.csv")
    _write_ttests(config, results, out / "ttest.csv")
    _write_manifest(config, norm_record, out / "manifest.json")
    if verbose:
        for r in results:
            print(f"trial {r.trial} {r.method_id} fault {r.fault}: "
                  f"mse={r.test_mse!r} nodes={r.n_centers} [{r.status}]")
    return results


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_results(results: list[TrialResult], path: Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RESULT_FIELDS)
        for r in results:
            writer.writerow([
                r.trial, r.method_id, _fmt(r.fault[0]), _fmt(r.fault[1]),
                _fmt(r.test_mse), r.n_centers, int(r.converged), r.status,
            ])


def _write_summary(results: list[TrialResult], path: Path):
    groups: dict[tuple, list[TrialResult]] = {}
    key_order = []
    for r in results:
        key = (r.method_id, r.fault)
        if key not in groups:
            groups[key] = []
            key_order.append(key)
        groups[key].append(r)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("method", "fault_open_prob", "fault_mult_var",
                         "n_ok", "mean_mse", "mean_nodes"))
        for key in key_order:
            ok = [r for r in groups[key] if r.status == "ok"]
            mean_mse = sum(r.test_mse for r in ok) / len(ok) if ok else math.nan
            mean_nodes = sum(r.n_centers for r in ok) / len(ok) if ok else math.nan
            writer.writerow([key[0], _fmt(key[1][0]), _fmt(key[1][1]),
                             len(ok), _fmt(mean_mse), _fmt(mean_nodes)])


def _write_ttests(config: ExperimentConfig, results: list[TrialResult], path: Path):
    ids = _method_ids(config)
    by_cell = {(r.method_id, r.fault, r.trial): r for r in results}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("fault_open_prob", "fault_mult_var", "method_a",
                         "method_b", "n", "mean_diff", "std_dev", "t_value",
                         "p_one_sided", "p_two_sided", "ci_lo", "ci_hi"))
        for fault in config.fault_levels:
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    a_vals, b_vals = [], []
                    for t in range(config.n_trials):
                        ra = by_cell.get((ids[i], fault, t))
                        rb = by_cell.get((ids[j], fault, t))
                        if ra and rb and ra.status == "ok" and rb.status == "ok":
                            a_vals.append(ra.test_mse)
                            b_vals.append(rb.test_mse)
                    if len(a_vals) < 2:
                        continue
                    tt = paired_t_test(a_vals, b_vals)
                    writer.writerow([
                        _fmt(fault[0]), _fmt(fault[1]), ids[i], ids[j],
                        len(a_vals), _fmt(tt.mean_diff), _fmt(tt.std_dev),
                        _fmt(tt.t_value), _fmt(tt.p_one_sided),
                        _fmt(tt.p_two_sided), _fmt(tt.ci95[0]), _fmt(tt.ci95[1]),
                    ])


def _write_manifest(config: ExperimentConfig, norm_record, path: Path):
    payload = {
        "version": __version__,
        "config": dataclasses.asdict(config),
        "normalization": norm_record,
        "result_fields": list(_RESULT_FIELDS),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# paired t statistics (no statistics dependency: the t CDF comes from the
# regularized incomplete beta evaluated by continued fractions)


@dataclass(frozen=True)
class PairedTTest:
    mean_diff: float
    std_dev: float
    t_value: float
    p_one_sided: float
    p_two_sided: float
    ci95: tuple[float, float]


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz's continued fraction for the incomplete beta integral
    max_iter, eps, fpmin = 300, 1e-15, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to about 1e-10 absolute accuracy."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: int) -> float:
    """P(T > t) for Student's t with df degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return tail if t >= 0.0 else 1.0 - tail


def student_t_ppf(q: float, df: int) -> float:
    """Inverse CDF for q in (0.5, 1); bisection on the survival function."""
    if not 0.5 < q < 1.0:
        raise ValueError(f"q must lie in (0.5, 1), got {q}")
    target = 1.0 - q
    hi = 1.0
    while student_t_sf(hi, df) > target:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("t quantile search failed")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_sf(mid, df) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def paired_t_test(a, b) -> PairedTTest:
    """Paired t statistics on d = b - a; positive mean_diff favors a when the
    samples are errors.  Constant nonzero differences give an infinite t
    (overflow marker) rather than an exception."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    n = a.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    d = b - a
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return PairedTTest(0.0, 0.0, 0.0, 0.5, 1.0, (0.0, 0.0))
        t = math.inf if mean > 0 else -math.inf
        return PairedTTest(mean, 0.0, t,
                           0.0 if mean > 0 else 1.0, 0.0, (mean, mean))
    se = sd / math.sqrt(n)
    t = mean / se
    p_two = 2.0 * student_t_sf(abs(t), df)
    p_one = student_t_sf(t, df)
    crit = student_t_ppf(0.975, df)
    return PairedTTest(mean, sd, t, p_one, p_two,
                       (mean - crit * se, mean + crit * se))


# ---------------------------------------------------------------------------
# sweep curves


def emit_sweep_curve(reports: list[FitReport], path, target_nodes: int | None = None):
    """Write (param, node count, faulty test MSE) rows sorted by node count.

    When ``target_nodes`` is given, the row closest to that node count gets
    selected = 1 (the operating-point convention for comparing methods at a
    common budget).
    """
    if not reports:
        raise ValueError("emit_sweep_curve requires at least one report")
    rows = []
    for rep in reports:
        if rep.test_error_faulty is None:
            raise ValueError("sweep reports must carry a test error")
        rows.append((rep.config.param_label(), rep.n_centers_used,
                     rep.test_error_faulty))
    rows.sort(key=lambda r: (r[1], r[0]))
    selected = -1
    if target_nodes is not None:
        selected = min(range(len(rows)),
                       key=lambda i: (abs(rows[i][1] - target_nodes), i))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("param", "n_centers_used", "test_mse", "selected"))
        for i, (param, nodes, mse) in enumerate(rows):
            writer.writerow([_fmt(param), nodes, _fmt(mse),
                             1 if i == selected else 0])
