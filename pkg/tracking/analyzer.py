"""Statistics for Monte Carlo estimates."""

import math

import numpy as np
from scipy.stats import norm

import config
from models import EstimateReport, MomentRow


def wilson_interval(successes, trials, confidence=None):
    """Wilson score interval for a binomial proportion.

    Returns:
        (lo, hi) inside [0, 1].
    """
    if trials < 1:
        raise ValueError("A Wilson interval needs at least one trial")
    confidence = confidence or config.current().WILSON_CONFIDENCE
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def summarize_successes(flags, seed):
    """Aggregate per-trial success flags into an EstimateReport."""
    flags = tuple(bool(f) for f in flags)
    trials = len(flags)
    successes = sum(flags)
    estimate = successes / trials
    lo, hi = wilson_interval(successes, trials)
    return EstimateReport(
        trials=trials,
        successes=successes,
        estimate=estimate,
        standard_error=math.sqrt(estimate * (1 - estimate) / trials),
        wilson_lo=lo,
        wilson_hi=hi,
        seed=seed,
        success_flags=flags,
    )


def _row(quantity, empirical, theoretical, standard_error):
    if standard_error > 0:
        z = (empirical - theoretical) / standard_error
    else:
        z = 0.0 if math.isclose(empirical, theoretical, rel_tol=1e-12, abs_tol=1e-12) else math.inf
    return MomentRow(quantity=quantity, empirical=float(empirical),
                     theoretical=float(theoretical), standard_error=float(standard_error),
                     z_score=float(z))


def _mean_row(quantity, samples, theoretical):
    samples = np.asarray(samples, dtype=float)
    se = samples.std(ddof=1) / math.sqrt(len(samples)) if len(samples) > 1 else 0.0
    return _row(quantity, samples.mean(), theoretical, se)


def _variance_row(quantity, samples, theoretical):
    samples = np.asarray(samples, dtype=float)
    count = len(samples)
    centered = samples - samples.mean()
    variance = centered.var(ddof=1) if count > 1 else 0.0
    fourth = float(np.mean(centered ** 4))
    se = math.sqrt(max(fourth - variance ** 2, 0.0) / count)
    return _row(quantity, variance, theoretical, se)


def moment_rows(sizes, kappas, moments, tail_probability):
    """Empirical vs closed-form moments of |V_A| and kappa(V_S).

    Args:
        sizes: |V_A| per trial
        kappas: kappa(V_S) per trial
        moments: engine.bounds.Moments for the same setting
        tail_probability: closed-form Pr(|V_A| >= 2)
    """
    sizes = np.asarray(sizes, dtype=float)
    return [
        _mean_row('E|V_A|', sizes, moments.mean),
        _variance_row('Var|V_A|', sizes, moments.variance),
        _mean_row('E|V_A|^2', sizes ** 2, moments.second_moment),
        _mean_row('E kappa(V_S)', kappas, moments.kappa_mean),
        _mean_row('Pr(|V_A| >= 2)', (sizes >= 2).astype(float), tail_probability),
    ]


def growth_slope(ns, values):
    """Least-squares slope of log(values) against log(ns)."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    if keep.sum() < 2:
        raise ValueError("A growth slope needs two positive values")
    slope, _ = np.polyfit(np.log(ns[keep]), np.log(values[keep]), 1)
    return float(slope)
