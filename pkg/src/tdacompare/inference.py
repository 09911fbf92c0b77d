"""Two-sample decisions on paired model fits.

Per coefficient j the test statistic is the difference of the fitted
theta_j with standard error sqrt(Var1_j + Var2_j).  When the difference
distribution looks normal (one-sample Kolmogorov-Smirnov gate) the
asymptotic two-sided z p-value is used; otherwise a density-matched
two-sided empirical p-value against a pool of null differences.  Bonferroni
corrects the K per-coefficient tests at family level alpha; the pair is
declared different only when all K coefficients are significant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, kolmogorov
from scipy.stats import norm

from .rst import RstFit


@dataclass(frozen=True)
class ParamDiff:
    """One coefficient difference with its two-sided p-value."""

    j: int
    delta: float
    se: float
    p_value: float

    def to_dict(self) -> dict:
        return {"j": self.j, "delta": self.delta, "se": self.se, "p": self.p_value}


@dataclass(frozen=True)
class TestReport:
    """Per-coefficient differences plus the Bonferroni significance count."""

    diffs: tuple[ParamDiff, ...]
    alpha_level: float
    significant_count: int
    different: bool

    @property
    def decision(self) -> str:
        return "Yes" if self.different else "No"

    def to_dict(self) -> dict:
        return {
            "diffs": [d.to_dict() for d in self.diffs],
            "k": self.significant_count,
            "decision": self.decision,
        }


def z_pvalue(delta: float, se: float) -> float:
    """Two-sided normal p-value, 2 P(Z >= |delta / se|)."""
    if se <= 0.0:
        raise ValueError(f"standard error must be positive, got {se}")
    return float(erfc(abs(delta / se) / np.sqrt(2.0)))


def ks_normal_check(samples, level: float = 0.05) -> bool:
    """True when a KS test does not reject normality at ``level``.

    The reference normal uses the sample mean and standard deviation; the
    decision uses the asymptotic Kolmogorov critical value.  A zero-spread
    sample counts as a rejection.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 20:
        raise ValueError(f"need at least 20 samples, got {n}")
    sd = x.std(ddof=1)
    if sd <= 0.0 or not np.isfinite(sd):
        return False
    cdf = norm.cdf(x, loc=x.mean(), scale=sd)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    stat = max(upper.max(), lower.max())
    p_asymptotic = float(kolmogorov(np.sqrt(n) * stat))
    return p_asymptotic >= level


def _gaussian_kde_1d(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    n = values.size
    sd = values.std(ddof=1)
    q75, q25 = np.percentile(values, [75, 25])
    scale = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    h = 0.9 * scale * n ** (-0.2)
    if h <= 0.0:
        h = max(sd, 1.0) * 1e-6
    z = (grid[:, None] - values[None, :]) / h
    return np.exp(-0.5 * z**2).sum(axis=1) / (n * h * np.sqrt(2.0 * np.pi))


def empirical_pvalue(null_deltas, observed: float) -> float:
    """Density-matched two-sided empirical p-value.

    A 1-D KDE of the null sample locates the mode and the point t* on the
    opposite side with matching density; the p-value combines the empirical
    CDF tail masses of the observed value and of t*, clamped to
    [1 / (n + 1), 1].
    """
    null = np.sort(np.asarray(null_deltas, dtype=float))
    n = null.size
    if n < 100:
        raise ValueError(f"need at least 100 null draws, got {n}")
    sd = null.std(ddof=1)
    if sd <= 0.0:
        # degenerate null: any deviation is extreme
        return 1.0 if observed == null[0] else 1.0 / (n + 1)
    pad = 3.0 * sd
    grid = np.linspace(null[0] - pad, null[-1] + pad, 2048)
    dens = _gaussian_kde_1d(null, grid)
    mode = grid[int(np.argmax(dens))]
    f_obs = float(np.interp(observed, grid, dens, left=0.0, right=0.0))
    if observed >= mode:
        side = grid <= mode
    else:
        side = grid >= mode
    opposite = grid[side]
    t_star = float(opposite[int(np.argmin(np.abs(dens[side] - f_obs)))])

    def ecdf(t):
        return np.searchsorted(null, t, side="right") / n

    f_t = ecdf(observed)
    f_s = ecdf(t_star)
    p = min(1.0 - f_t + f_s, 1.0 - f_s + f_t)
    return float(min(1.0, max(p, 1.0 / (n + 1))))


def significance_count(p_values, alpha_level: float) -> int:
    """Number of Bonferroni-significant tests at family level alpha."""
    p = np.asarray(p_values, dtype=float)
    return int((p < alpha_level / p.size).sum())


def compare_fits(fit1: RstFit, fit2: RstFit, alpha_level: float = 0.05) -> TestReport:
    """Coefficient-wise z-tests between two fits of the same cluster size.

    The pair is declared different only when every coefficient differs at
    the Bonferroni-corrected level (a full difference).
    """
    if fit1.k != fit2.k:
        raise ValueError(f"cluster size mismatch: {fit1.k} vs {fit2.k}")
    diffs = []
    for j in range(fit1.k):
        delta = float(fit1.theta[j] - fit2.theta[j])
        se = float(np.sqrt(fit1.variances[j] + fit2.variances[j]))
        diffs.append(ParamDiff(j=j, delta=delta, se=se, p_value=z_pvalue(delta, se)))
    count = significance_count([d.p_value for d in diffs], alpha_level)
    return TestReport(
        diffs=tuple(diffs),
        alpha_level=alpha_level,
        significant_count=count,
        different=count == fit1.k,
    )
