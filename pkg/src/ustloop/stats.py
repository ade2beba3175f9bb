"""Statistical checks reported by the harness."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

KS_MIN_SAMPLES = 1000


@dataclass(frozen=True)
class StatReport:
    name: str
    test: str  # chi2, ks or rel_err
    statistic: float
    value: float  # p-value for chi2/ks, relative error for rel_err
    threshold: float
    passed: bool
    n: int
    informational: bool = False

    def row(self) -> dict:
        return asdict(self)


def merge_small_bins(observed, expected, min_expected: float = 5.0):
    """Pool bins, smallest expected first, until every pooled bin expects >= ``min_expected``."""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    order = np.argsort(expected, kind="stable")
    obs_out, exp_out = [], []
    acc_o = acc_e = 0.0
    for k in order:
        acc_o += observed[k]
        acc_e += expected[k]
        if acc_e >= min_expected:
            obs_out.append(acc_o)
            exp_out.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_out:
            obs_out[-1] += acc_o
            exp_out[-1] += acc_e
        else:
            obs_out.append(acc_o)
            exp_out.append(acc_e)
    return np.array(obs_out), np.array(exp_out)


def chi2_report(name: str, counts, probabilities, alpha: float = 0.01) -> StatReport:
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    n = int(counts.sum())
    obs, exp = merge_small_bins(counts, probs / probs.sum() * n)
    if len(obs) < 2:
        return StatReport(name, "chi2", 0.0, 1.0, alpha, True, n)
    stat, p = stats.chisquare(obs, exp)
    return StatReport(name, "chi2", float(stat), float(p), alpha, bool(p > alpha), n)


def ks_report(
    name: str, a, b, alpha: float = 0.01, min_n: int = KS_MIN_SAMPLES, informational: bool = False
) -> StatReport:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if min(len(a), len(b)) < min_n:
        raise ValueError(f"KS needs at least {min_n} samples per side, got {len(a)} and {len(b)}")
    if np.array_equal(np.unique(a), np.unique(b)) and len(np.unique(a)) == 1:
        return StatReport(name, "ks", 0.0, 1.0, alpha, True, len(a) + len(b), informational)
    res = stats.ks_2samp(a, b, method="asymp")
    p = float(res.pvalue)
    return StatReport(name, "ks", float(res.statistic), p, alpha, informational or p > alpha,
                      len(a) + len(b), informational)


def rel_err(value: float, reference: float) -> float:
    if reference == 0:
        return abs(value)
    return abs(value - reference) / abs(reference)


def rel_err_report(name: str, value: float, reference: float, tol: float, n: int = 1) -> StatReport:
    err = rel_err(value, reference)
    return StatReport(name, "rel_err", float(value), float(err), tol, bool(err <= tol), n)


def sigma_report(name: str, mean_a: float, se_a: float, mean_b: float, se_b: float,
                 n_sigma: float, n: int) -> StatReport:
    """Two estimates agree within ``n_sigma`` combined standard errors (value = z-score)."""
    se = math.hypot(se_a, se_b)
    z = abs(mean_a - mean_b) / se if se > 0 else (0.0 if mean_a == mean_b else math.inf)
    return StatReport(name, "rel_err", float(mean_a - mean_b), float(z), n_sigma, bool(z <= n_sigma), n)
