"""Confidence intervals and goodness-of-fit helpers."""

import math
from dataclasses import dataclass

from scipy import stats


@dataclass(frozen=True)
class Estimate:
    """A Monte-Carlo proportion with a two-sided confidence interval."""

    successes: int
    trials: int
    ci_low: float
    ci_high: float
    level: float = 0.99

    @property
    def value(self):
        return self.successes / self.trials

    @property
    def half_width(self):
        return max(self.value - self.ci_low, self.ci_high - self.value)

    def to_dict(self):
        return {
            "estimate": self.value,
            "successes": self.successes,
            "trials": self.trials,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
        }


def clopper_pearson(successes, trials, level=0.99):
    """Exact binomial interval for ``successes`` out of ``trials``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    alpha = 1.0 - level
    lo = 0.0 if successes == 0 else stats.beta.ppf(alpha / 2, successes, trials - successes + 1)
    hi = 1.0 if successes == trials else stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes)
    return Estimate(successes, trials, float(lo), float(hi), level)


def mcdiarmid_half_width(n_samples, level=0.99):
    """Half-width for a statistic with bounded differences 1/n_samples."""
    return math.sqrt(math.log(2.0 / (1.0 - level)) / (2.0 * n_samples))


def chisquare_uniform(counts):
    """p-value of a chi-square test of ``counts`` against the uniform law."""
    return float(stats.chisquare(list(counts)).pvalue)


def fraction_dict(q):
    """Render a rational as ``{num, den, float}``."""
    return {"num": q.numerator, "den": q.denominator, "float": float(q)}


def fraction_text(q):
    return f"{q.numerator}/{q.denominator} ({float(q):.6g})"
