"""Numerical checks of the trust-weight bounds and complexity-gap separability.

The statements are evaluated against empirical distributions (sample means),
where the convexity and bounded-range inequalities hold exactly, so the
checks are deterministic rather than asymptotic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boosting import RunTrace
from .noise import NoiseMask

COMPARISON_TOL = 1e-12


@dataclass(frozen=True)
class ComplexitySample:
    """A vector of complexity values tagged as coming from clean or noisy rows."""

    values: np.ndarray
    group: str = "clean"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("ComplexitySample: values must be a nonempty 1-D vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("ComplexitySample: values must be finite")
        if self.group not in ("clean", "noisy"):
            raise ValueError(f"ComplexitySample: group must be 'clean' or 'noisy', got {self.group!r}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class BoundReport:
    empirical_tau: float
    mean_complexity: float
    value_range: float
    jensen_lower: float
    hoeffding_upper: float
    subgaussian_upper: float | None
    jensen_satisfied: bool
    hoeffding_satisfied: bool


def trust_bound_check(sample: ComplexitySample) -> BoundReport:
    """Check exp(-mean) <= mean(exp(-C)) <= exp(-mean + range^2 / 8).

    The lower bound is convexity of exp(-x); the upper bound is the
    bounded-range moment bound applied to the centred values.  Both hold for
    every finite sample, so the satisfied flags failing indicates a bug, not
    an unlucky draw.  The variance-based upper bound exp(-mean + var/2) is
    reported informationally (it uses the plug-in variance and is not a
    guaranteed bound for the empirical distribution).
    """
    v = sample.values
    tau_hat = float(np.mean(np.exp(-v)))
    mu_hat = float(np.mean(v))
    value_range = float(v.max() - v.min())
    jensen = math.exp(-mu_hat)
    hoeffding = math.exp(-mu_hat + value_range**2 / 8.0)
    subgaussian = math.exp(-mu_hat + float(np.var(v)) / 2.0)
    return BoundReport(
        empirical_tau=tau_hat,
        mean_complexity=mu_hat,
        value_range=value_range,
        jensen_lower=jensen,
        hoeffding_upper=hoeffding,
        subgaussian_upper=subgaussian,
        jensen_satisfied=tau_hat >= jensen - COMPARISON_TOL,
        hoeffding_satisfied=tau_hat <= hoeffding + COMPARISON_TOL,
    )


@dataclass(frozen=True)
class RatioReport:
    tau_clean: float
    tau_noisy: float
    ratio: float
    complexity_gap: float
    correction: float
    ratio_bound: float
    bound_satisfied: bool
    gap_exceeds_correction: bool


def ratio_bound_check(clean: ComplexitySample, noisy: ComplexitySample) -> RatioReport:
    """Check tau_noisy / tau_clean <= exp(-(gap) + noisy_range^2 / 8).

    The upper bound uses the bounded-range bound on the noisy group (the
    numerator) and convexity on the clean group (the denominator), so the
    correction term comes from the noisy group's range only.  The report also
    states whether the empirical complexity gap exceeds the correction, the
    condition under which noisy samples are guaranteed a down-weighting ratio
    below 1.
    """
    tau_clean = float(np.mean(np.exp(-clean.values)))
    tau_noisy = float(np.mean(np.exp(-noisy.values)))
    gap = float(np.mean(noisy.values) - np.mean(clean.values))
    correction = float((noisy.values.max() - noisy.values.min()) ** 2 / 8.0)
    bound = math.exp(-gap + correction)
    ratio = tau_noisy / tau_clean
    return RatioReport(
        tau_clean=tau_clean,
        tau_noisy=tau_noisy,
        ratio=ratio,
        complexity_gap=gap,
        correction=correction,
        ratio_bound=bound,
        bound_satisfied=ratio <= bound + COMPARISON_TOL,
        gap_exceeds_correction=gap > correction,
    )


@dataclass(frozen=True)
class SeparabilityReport:
    iteration: int
    n_clean: int
    n_noisy: int
    mean_clean: float
    mean_noisy: float
    complexity_gap: float
    epsilon: float
    delta: float
    radius_clean: float
    radius_noisy: float
    required_group_size: int
    separable: bool


def required_group_size(epsilon: float, delta: float) -> int:
    """Smallest per-group n with concentration radius epsilon at confidence 1 - delta."""
    if epsilon <= 0:
        raise ValueError("required_group_size: epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("required_group_size: delta must be in (0, 1)")
    return math.ceil(math.log(2.0 / delta) / (2.0 * epsilon**2))


def hoeffding_radius(n: int, delta: float) -> float:
    """Two-sided concentration radius for a mean of n values in [0, 1]."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def separability_from_groups(
    clean_values, noisy_values, epsilon: float, delta: float, iteration: int = 0
) -> SeparabilityReport:
    """Empirical separability of mean complexities at tolerance (epsilon, delta).

    Verdict: separable iff the observed gap exceeds 2*epsilon and both groups
    are at least the required size.
    """
    clean = np.asarray(clean_values, dtype=np.float64)
    noisy = np.asarray(noisy_values, dtype=np.float64)
    if clean.size == 0 or noisy.size == 0:
        raise ValueError("separability_from_groups: both groups must be nonempty")
    n_req = required_group_size(epsilon, delta)
    mean_clean = float(clean.mean())
    mean_noisy = float(noisy.mean())
    gap = mean_noisy - mean_clean
    return SeparabilityReport(
        iteration=iteration,
        n_clean=clean.size,
        n_noisy=noisy.size,
        mean_clean=mean_clean,
        mean_noisy=mean_noisy,
        complexity_gap=gap,
        epsilon=epsilon,
        delta=delta,
        radius_clean=hoeffding_radius(clean.size, delta),
        radius_noisy=hoeffding_radius(noisy.size, delta),
        required_group_size=n_req,
        separable=(gap > 2.0 * epsilon) and clean.size >= n_req and noisy.size >= n_req,
    )


def separability_report(
    trace: RunTrace, mask: NoiseMask, epsilon: float, delta: float, iteration: int | None = None
) -> SeparabilityReport:
    """Split a trace's normalized complexities by the noise mask and test separability."""
    if iteration is None:
        iteration = trace.n_iterations
    if not 1 <= iteration <= trace.n_iterations:
        raise ValueError(f"separability_report: iteration {iteration} outside trace range")
    noisy_sel = np.isin(trace.row_ids, sorted(mask.flipped_rows))
    if not np.any(noisy_sel) or np.all(noisy_sel):
        raise ValueError("separability_report: mask must mark some but not all rows")
    normalized = trace.trust[iteration - 1].normalized
    return separability_from_groups(
        normalized[~noisy_sel], normalized[noisy_sel], epsilon, delta, iteration=iteration
    )
