"""Randomized verification suites for the step-function inequalities.

Every suite draws matrix models from seeded ensembles, evaluates one exact
inequality on a deterministic grid of evaluation points, and emits one row
per comparison: quantity, bound, margin = bound - quantity, and a pass flag
with tolerance tol * (1 + |bound|).  Seeds for each (check, trial, slot) are
derived with BLAKE2b so results are bit-stable across processes and across
thread counts; rows are assembled in a fixed order regardless of execution
order.  Nothing here retries or resamples on failure: a violated bound stays
in the report.
"""

from __future__ import annotations

import hashlib
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .stepfn import (
    GridFn,
    integrate,
    left_continuous_version,
    psi_eval,
)
from .matmodel import (
    EnsembleSpec,
    MatrixOperator,
    lambda_matrix,
    mu_matrix,
    mu_neg_part,
    mu_pos_part,
    neg_part,
    op_exp,
    pos_part,
    sample,
)

__all__ = [
    "CheckRow",
    "CheckReport",
    "SuiteConfig",
    "SuiteResult",
    "SUITE_NAMES",
    "DEFAULT_TOLERANCES",
    "run_check",
    "run_suite",
    "rows_to_csv",
    "result_to_json",
]

SUITE_NAMES = (
    "product-log-integral",
    "product-log-pointwise",
    "majorization",
    "sum-psi-bound",
    "split-psi-vanishing",
    "sum-psi-composite",
    "commutator-criterion",
    "standard-inequalities",
    "log-closure",
)

_DEFAULT_TOL = 1e-8
# Exact-cancellation checks run at a tighter tolerance.
DEFAULT_TOLERANCES: Dict[str, float] = {
    "majorization": 1e-10,
    "split-psi-vanishing": 1e-10,
}

# Guard around support-projection thresholds so grid points sitting exactly
# on a derived cutoff are never claimed by the exact-zero regime.
_CUTOFF_GUARD = 1e-12


@dataclass(frozen=True)
class CheckRow:
    check_name: str
    seed: int
    trial: int
    n: int
    t: float
    quantity: float
    bound: float
    margin: float
    ok: bool


@dataclass
class CheckReport:
    check_name: str
    seed: int
    trials: int
    n: int
    worst_margin: float
    violations: int
    passed: bool
    runtime_ms: float
    rows: List[CheckRow] = field(default_factory=list)


@dataclass(frozen=True)
class SuiteConfig:
    suites: Tuple[str, ...]
    n: int = 64
    trials: int = 100
    seed: int = 42
    tol_overrides: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 2 <= self.n <= 512:
            raise ValueError("n must lie in [2, 512]")
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")
        for name in self.suites:
            if name not in SUITE_NAMES:
                raise ValueError(f"unknown suite {name!r}")

    def tolerance(self, check: str) -> float:
        if check in self.tol_overrides:
            return self.tol_overrides[check]
        if "default" in self.tol_overrides:
            return self.tol_overrides["default"]
        return DEFAULT_TOLERANCES.get(check, _DEFAULT_TOL)


@dataclass
class SuiteResult:
    config: SuiteConfig
    reports: Dict[str, CheckReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())

    @property
    def rows(self) -> List[CheckRow]:
        out: List[CheckRow] = []
        for name in self.config.suites:
            out.extend(self.reports[name].rows)
        return out


# ---- sampling ----

def _trial_seed(master: int, check: str, trial: int, slot: str) -> int:
    digest = hashlib.blake2b(
        f"{master}:{check}:{trial}:{slot}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def _hermitian(master: int, check: str, trial: int, slot: str, n: int) -> MatrixOperator:
    seed = _trial_seed(master, check, trial, slot)
    return sample(EnsembleSpec("hermitian-gaussian", n=n, scale=1.0, seed=seed))


def _ginibre(master: int, check: str, trial: int, slot: str, n: int) -> MatrixOperator:
    seed = _trial_seed(master, check, trial, slot)
    return sample(EnsembleSpec("iid-complex-gaussian", n=n, scale=1.0, seed=seed))


def _psd(master: int, check: str, trial: int, slot: str, n: int) -> MatrixOperator:
    g = _ginibre(master, check, trial, slot, n).entries
    w = g @ g.conj().T
    return MatrixOperator((w + w.conj().T) / 2.0)


def _ok(quantity: float, bound: float, tol: float) -> Tuple[float, bool]:
    margin = bound - quantity
    return margin, margin >= -tol * (1.0 + abs(bound))


def _boundary_ts(n: int, frac: float) -> List[float]:
    return [k / n for k in range(1, n + 1) if k / n < frac]


def _midpoint_ts(n: int, frac: float) -> List[float]:
    return [(k - 0.5) / n for k in range(1, n + 1) if (k - 0.5) / n < frac]


# ---- the checks ----

def _check_product_log_integral(n, master, trial, tol):
    """|int_{2t}^{1-2t} (log mu(e^T e^S) - lam T - lam S)| <= 8t(mu(t,T)+mu(t,S)), t < 1/4."""
    name = "product-log-integral"
    seed = _trial_seed(master, name, trial, "A")
    t_op = _hermitian(master, name, trial, "A", n)
    s_op = _hermitian(master, name, trial, "B", n)
    prod = op_exp(t_op).matmul(op_exp(s_op))
    g = GridFn(np.log(prod.singular_values)) - lambda_matrix(t_op) - lambda_matrix(s_op)
    mu_t, mu_s = mu_matrix(t_op), mu_matrix(s_op)
    ts = [k / (2 * n) for k in range(1, n // 2)] or [0.125]
    rows = []
    for t in ts:
        q = abs(integrate(g, 2 * t, 1.0 - 2 * t))
        b = 8.0 * t * (mu_t(t) + mu_s(t))
        margin, ok = _ok(q, b, tol)
        rows.append(CheckRow(name, seed, trial, n, t, q, b, margin, ok))
    return rows


def _check_product_log_pointwise(n, master, trial, tol):
    """Two-sided pointwise bound on log mu(u, e^T e^S) for every u in (0,1).

    Upper: mu(u/2,T) + mu(u/2,S); lower: -mu~((1-u)/2,T) - mu~((1-u)/2,S),
    with the left-continuous versions on the lower side.  Both are emitted as
    rows with margin = bound - quantity, the lower side negated.
    """
    name = "product-log-pointwise"
    seed = _trial_seed(master, name, trial, "A")
    t_op = _hermitian(master, name, trial, "A", n)
    s_op = _hermitian(master, name, trial, "B", n)
    prod = op_exp(t_op).matmul(op_exp(s_op))
    logmu = GridFn(np.log(prod.singular_values))
    mu_t, mu_s = mu_matrix(t_op), mu_matrix(s_op)
    mu_t_left = left_continuous_version(mu_t)
    mu_s_left = left_continuous_version(mu_s)
    rows = []
    for u in _midpoint_ts(n, 1.0) + _boundary_ts(n, 1.0):
        q_hi = logmu(u)
        b_hi = mu_t(u / 2) + mu_s(u / 2)
        margin, ok = _ok(q_hi, b_hi, tol)
        rows.append(CheckRow(name, seed, trial, n, u, q_hi, b_hi, margin, ok))
        q_lo = -logmu(u)
        b_lo = mu_t_left((1.0 - u) / 2) + mu_s_left((1.0 - u) / 2)
        margin, ok = _ok(q_lo, b_lo, tol)
        rows.append(CheckRow(name, seed, trial, n, u, q_lo, b_lo, margin, ok))
    return rows


def _check_majorization(n, master, trial, tol):
    """int_0^t mu(T+S) <= int_0^t (mu T + mu S) <= int_0^{2t} mu(T+S) for positive T, S."""
    name = "majorization"
    seed = _trial_seed(master, name, trial, "A")
    t_op = _psd(master, name, trial, "A", n)
    s_op = _psd(master, name, trial, "B", n)
    mu_sum = mu_matrix(t_op + s_op)
    mu_parts = mu_matrix(t_op) + mu_matrix(s_op)
    rows = []
    for k in range(1, n // 2 + 1):
        t = k / n
        head_sum = integrate(mu_sum, 0.0, t)
        head_parts = integrate(mu_parts, 0.0, t)
        head_sum_2t = integrate(mu_sum, 0.0, 2 * t)
        margin, ok = _ok(head_sum, head_parts, tol)
        rows.append(CheckRow(name, seed, trial, n, t, head_sum, head_parts, margin, ok))
        margin, ok = _ok(head_parts, head_sum_2t, tol)
        rows.append(CheckRow(name, seed, trial, n, t, head_parts, head_sum_2t, margin, ok))
    return rows


def _check_sum_psi_bound(n, master, trial, tol):
    """|int_t^{1-t} (mu(T+S) - mu T - mu S)| <= 4t mu(t,T+S) for positive T, S, t < 1/2."""
    name = "sum-psi-bound"
    seed = _trial_seed(master, name, trial, "A")
    t_op = _psd(master, name, trial, "A", n)
    s_op = _psd(master, name, trial, "B", n)
    mu_sum = mu_matrix(t_op + s_op)
    h = mu_sum - mu_matrix(t_op) - mu_matrix(s_op)
    rows = []
    for t in _boundary_ts(n, 0.5) + _midpoint_ts(n, 0.5):
        q = abs(integrate(h, t, 1.0 - t))
        b = 4.0 * t * mu_sum(t)
        margin, ok = _ok(q, b, tol)
        rows.append(CheckRow(name, seed, trial, n, t, q, b, margin, ok))
    return rows


def _split_threshold(w: np.ndarray, n: int) -> Tuple[int, int, float]:
    """Strictly positive/negative counts and the exact-vanishing cutoff."""
    p = int(np.sum(w > 0.0))
    m = int(np.sum(w < 0.0))
    if p == 0 or m == 0:
        return p, m, 0.5
    t0 = p / n
    return p, m, min(t0, 1.0 - t0)


def _check_split_psi_vanishing(n, master, trial, tol):
    """Psi(lambda(T) - mu(T+) + mu(T-)) vanishes below the support cutoff.

    Below t* = min(t0, 1 - t0), t0 the trace of the support of T+, the value
    is an exact cancellation of shared eigenvalue floats (identically 0.0 at
    power-of-2 n); above it the function is still bounded by 2*norm/t*, which
    is emitted as a final sup row at t = 0.5.
    """
    name = "split-psi-vanishing"
    seed = _trial_seed(master, name, trial, "A")
    t_op = _hermitian(master, name, trial, "A", n)
    h = lambda_matrix(t_op) - mu_pos_part(t_op) + mu_neg_part(t_op)
    _p, _m, t_star = _split_threshold(t_op.eigenvalues, n)
    rows = []
    for t in _boundary_ts(n, 0.5):
        if t < t_star - _CUTOFF_GUARD:
            q = abs(psi_eval(h, t))
            margin, ok = _ok(q, 0.0, tol)
            rows.append(CheckRow(name, seed, trial, n, t, q, 0.0, margin, ok))
    sup = max(
        abs(psi_eval(h, t)) for t in _boundary_ts(n, 0.5) + _midpoint_ts(n, 0.5)
    )
    b_sup = 2.0 * t_op.norm / max(t_star, 1.0 / n)
    margin, ok = _ok(sup, b_sup, tol)
    rows.append(CheckRow(name, seed, trial, n, 0.5, sup, b_sup, margin, ok))
    return rows


def _psi_tpm(x: MatrixOperator) -> GridFn:
    return lambda_matrix(x) - mu_pos_part(x) + mu_neg_part(x)


def _check_sum_psi_composite(n, master, trial, tol):
    """|Psi(lam T + lam S - lam(T+S))(t)| <= 12 mu(t,A) + C_T + C_S + C_{T+S}.

    A = (T+S)+ + T- + S- = (T+S)- + T+ + S+ is positive; the C terms are the
    grid sups of the split combinations for each operator.  The float
    identity between the two decompositions of A is asserted as a row at
    t = 0.
    """
    name = "sum-psi-composite"
    seed = _trial_seed(master, name, trial, "A")
    t_op = _hermitian(master, name, trial, "A", n)
    s_op = _hermitian(master, name, trial, "B", n)
    ts_op = t_op + s_op
    a1 = pos_part(ts_op) + neg_part(t_op) + neg_part(s_op)
    a2 = neg_part(ts_op) + pos_part(t_op) + pos_part(s_op)
    ident_gap = float(np.max(np.abs(a1.entries - a2.entries)))
    mu_a = mu_matrix(a1)
    g = lambda_matrix(t_op) + lambda_matrix(s_op) - lambda_matrix(ts_op)
    grid = _boundary_ts(n, 0.5) + _midpoint_ts(n, 0.5)
    c_sum = sum(
        max(abs(psi_eval(_psi_tpm(x), t)) for t in grid)
        for x in (t_op, s_op, ts_op)
    )
    rows = []
    margin, ok = _ok(ident_gap, 0.0, tol)
    rows.append(CheckRow(name, seed, trial, n, 0.0, ident_gap, 0.0, margin, ok))
    for t in grid:
        q = abs(psi_eval(g, t))
        b = 12.0 * mu_a(t) + c_sum
        margin, ok = _ok(q, b, tol)
        rows.append(CheckRow(name, seed, trial, n, t, q, b, margin, ok))
    return rows


def _check_commutator_criterion(n, master, trial, tol):
    """|(1/r) tau(truncation of T at mu(r,T)) - Psi lambda(T)(r)| <= 2 mu(r,T).

    The truncation keeps the eigenvalues of modulus <= mu(r,T).  Rows cover
    r below the larger of the two support traces (all r < 1/2 when T is
    definite or kernel-free); hand-built kernels shrink the certified range.
    """
    name = "commutator-criterion"
    seed = _trial_seed(master, name, trial, "A")
    t_op = _hermitian(master, name, trial, "A", n)
    w = t_op.eigenvalues
    lam = lambda_matrix(t_op)
    mu_t = mu_matrix(t_op)
    p = int(np.sum(w > 0.0))
    m = int(np.sum(w < 0.0))
    if p > 0 and m > 0:
        r_max = max(p, m) / n - _CUTOFF_GUARD
    else:
        r_max = 0.5
    rows = []
    for r in _boundary_ts(n, 0.5) + _midpoint_ts(n, 0.5):
        if r >= r_max:
            continue
        cut = mu_t(r)
        tau_trunc = math.fsum(w[np.abs(w) <= cut]) / n
        q = abs(tau_trunc / r - psi_eval(lam, r))
        b = 2.0 * mu_t(r)
        margin, ok = _ok(q, b, tol)
        rows.append(CheckRow(name, seed, trial, n, r, q, b, margin, ok))
    return rows


def _worst_pair_row(name, seed, trial, n, tol, lhs, rhs, ts):
    """Row for the worst margin over a vectorized family of comparisons."""
    margins = rhs - lhs
    idx = int(np.argmin(margins))
    q, b, t = float(lhs[idx]), float(rhs[idx]), float(ts[idx])
    margin, ok = _ok(q, b, tol)
    return CheckRow(name, seed, trial, n, t, q, b, margin, ok)


def _check_standard_inequalities(n, master, trial, tol):
    """mu(s+t, A+B) <= mu(s,A) + mu(t,B) and mu(s+t, AB) <= mu(s,A) mu(t,B).

    Scanned over the full index range at both cell boundaries and interiors;
    one worst-margin row is emitted per inequality family.
    """
    name = "standard-inequalities"
    seed = _trial_seed(master, name, trial, "A")
    a_op = _ginibre(master, name, trial, "A", n)
    b_op = _ginibre(master, name, trial, "B", n)
    a = a_op.singular_values
    b = b_op.singular_values
    v_sum = (a_op + b_op).singular_values
    v_prod = a_op.matmul(b_op).singular_values
    rows = []
    # boundary family: s = i/n, t = j/n with i, j >= 1, i + j <= n - 1
    i = np.arange(1, n)
    jj, ii = np.meshgrid(i, i)
    mask = (ii + jj) <= n - 1
    ii, jj = ii[mask], jj[mask]
    kk = ii + jj
    ts = kk / n
    rows.append(_worst_pair_row(name, seed, trial, n, tol,
                                v_sum[kk], a[ii] + b[jj], ts))
    rows.append(_worst_pair_row(name, seed, trial, n, tol,
                                v_prod[kk], a[ii] * b[jj], ts))
    # interior family: s, t at cell midpoints, s + t = (i + j + 1)/n
    i0 = np.arange(0, n)
    jj, ii = np.meshgrid(i0, i0)
    mask = (ii + jj + 1) <= n - 1
    ii, jj = ii[mask], jj[mask]
    kk = ii + jj + 1
    ts = kk / n
    rows.append(_worst_pair_row(name, seed, trial, n, tol,
                                v_sum[kk], a[ii] + b[jj], ts))
    rows.append(_worst_pair_row(name, seed, trial, n, tol,
                                v_prod[kk], a[ii] * b[jj], ts))
    return rows


def _check_log_closure(n, master, trial, tol):
    """log(1 + mu(A+B)) and log(1 + mu(AB)) <= log(1 + D2 mu A) + log(1 + D2 mu B).

    Cellwise on the model grid; D2 f(t) = f(t/2) is the exact two-fold
    dilation (cell values repeated).
    """
    name = "log-closure"
    seed = _trial_seed(master, name, trial, "A")
    a_op = _ginibre(master, name, trial, "A", n)
    b_op = _ginibre(master, name, trial, "B", n)
    da = np.repeat(a_op.singular_values, 2)[:n]
    db = np.repeat(b_op.singular_values, 2)[:n]
    bound_cells = np.log1p(da) + np.log1p(db)
    v_sum = np.log1p((a_op + b_op).singular_values)
    v_prod = np.log1p(a_op.matmul(b_op).singular_values)
    rows = []
    for k in range(n):
        t = (k + 0.5) / n
        for q in (float(v_sum[k]), float(v_prod[k])):
            margin, ok = _ok(q, float(bound_cells[k]), tol)
            rows.append(CheckRow(name, seed, trial, n, t, q,
                                 float(bound_cells[k]), margin, ok))
    return rows


_CHECKS: Dict[str, Callable] = {
    "product-log-integral": _check_product_log_integral,
    "product-log-pointwise": _check_product_log_pointwise,
    "majorization": _check_majorization,
    "sum-psi-bound": _check_sum_psi_bound,
    "split-psi-vanishing": _check_split_psi_vanishing,
    "sum-psi-composite": _check_sum_psi_composite,
    "commutator-criterion": _check_commutator_criterion,
    "standard-inequalities": _check_standard_inequalities,
    "log-closure": _check_log_closure,
}


def run_check(name: str, n: int, master_seed: int, trial: int,
              tol: Optional[float] = None) -> List[CheckRow]:
    if name not in _CHECKS:
        raise ValueError(f"unknown check {name!r}; choose from {SUITE_NAMES}")
    if tol is None:
        tol = DEFAULT_TOLERANCES.get(name, _DEFAULT_TOL)
    return _CHECKS[name](n, master_seed, trial, tol)


def _thread_count() -> int:
    raw = os.environ.get("SPECDET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_suite(config: SuiteConfig) -> SuiteResult:
    jobs = [(name, trial) for name in config.suites for trial in range(config.trials)]

    def _one(job):
        name, trial = job
        start = time.perf_counter()
        rows = run_check(name, config.n, config.seed, trial, config.tolerance(name))
        return name, trial, rows, (time.perf_counter() - start) * 1000.0

    workers = min(_thread_count(), max(1, len(jobs)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_one, jobs))
    else:
        outcomes = [_one(job) for job in jobs]

    reports: Dict[str, CheckReport] = {}
    for name in config.suites:
        per_check = [o for o in outcomes if o[0] == name]
        per_check.sort(key=lambda o: o[1])
        rows = [row for _, _, trial_rows, _ in per_check for row in trial_rows]
        violations = sum(1 for r in rows if not r.ok)
        worst = min((r.margin for r in rows), default=math.inf)
        runtime = sum(o[3] for o in per_check)
        reports[name] = CheckReport(
            check_name=name,
            seed=config.seed,
            trials=config.trials,
            n=config.n,
            worst_margin=worst,
            violations=violations,
            passed=violations == 0,
            runtime_ms=runtime,
            rows=rows,
        )
    return SuiteResult(config=config, reports=reports)


# ---- serialization ----

_CSV_HEADER = "check_name,seed,trial,n,t_or_r,quantity,bound,margin,pass"


def rows_to_csv(rows: Sequence[CheckRow]) -> str:
    """Deterministic CSV; floats use shortest round-trip formatting."""
    lines = [_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.check_name},{r.seed},{r.trial},{r.n},"
            f"{r.t!r},{r.quantity!r},{r.bound!r},{r.margin!r},"
            f"{'true' if r.ok else 'false'}"
        )
    return "\n".join(lines) + "\n"


def result_to_json(result: SuiteResult) -> str:
    import json

    payload = {
        "config": {
            "suites": list(result.config.suites),
            "n": result.config.n,
            "trials": result.config.trials,
            "seed": result.config.seed,
            "tol_overrides": dict(result.config.tol_overrides),
        },
        "passed": result.passed,
        "reports": {},
    }
    for name in result.config.suites:
        rep = result.reports[name]
        entry = {
            "trials": rep.trials,
            "n": rep.n,
            "rows": len(rep.rows),
            "worst_margin": None if math.isinf(rep.worst_margin) else rep.worst_margin,
            "violations": rep.violations,
            "passed": rep.passed,
            "runtime_ms": rep.runtime_ms,
        }
        if rep.rows:
            worst = min(rep.rows, key=lambda r: r.margin)
            entry["worst_row"] = {
                "seed": worst.seed,
                "trial": worst.trial,
                "t_or_r": worst.t,
                "quantity": worst.quantity,
                "bound": worst.bound,
                "margin": worst.margin,
                "pass": worst.ok,
            }
        payload["reports"][name] = entry
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
