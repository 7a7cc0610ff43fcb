"""Significance and correlation machinery: one-way ANOVA, paired t-test,
tie-corrected Kendall correlation, and percentile bootstrap.

Distribution tails are evaluated through a continued-fraction regularized
incomplete beta function rather than simulation, so p-values are exact
and deterministic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import StyleProbeError

_BETA_EPS = 1e-14
_BETA_MAX_ITER = 500


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: tuple[float, ...]
    method: str
    degenerate: bool = False


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < 1e-300:
        d = 1e-300
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < 1e-300:
            d = 1e-300
        c = 1.0 + aa / c
        if abs(c) < 1e-300:
            c = 1e-300
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < 1e-300:
            d = 1e-300
        c = 1.0 + aa / c
        if abs(c) < 1e-300:
            c = 1e-300
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise StyleProbeError("incomplete beta continued fraction failed to converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, df1: float, df2: float) -> float:
    """Upper tail of the F distribution."""
    if f <= 0:
        return 1.0
    return betainc_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t."""
    if df <= 0:
        raise ValueError("df must be positive")
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def normal_sf2(z: float) -> float:
    """Two-sided standard-normal tail."""
    return math.erfc(abs(z) / math.sqrt(2.0))


def anova_oneway(groups: list[list[float]]) -> TestResult:
    """F = MS_between / MS_within with (k-1, n-k) degrees of freedom."""
    if len(groups) < 2 or any(not g for g in groups):
        raise StyleProbeError("ANOVA needs at least 2 non-empty groups")
    k = len(groups)
    n = sum(len(g) for g in groups)
    if n <= k:
        raise StyleProbeError("ANOVA needs more observations than groups")
    all_values = [v for g in groups for v in g]
    grand = sum(all_values) / n
    if all(v == all_values[0] for v in all_values):
        raise StyleProbeError("ANOVA undefined: all observations identical")
    ssb = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ssw = sum(sum((v - sum(g) / len(g)) ** 2 for v in g) for g in groups)
    df = (float(k - 1), float(n - k))
    if ssw == 0.0:
        # Nonzero between-group spread with no within-group spread.
        return TestResult(math.inf, 0.0, df, "anova_oneway", degenerate=True)
    f = (ssb / df[0]) / (ssw / df[1])
    return TestResult(f, f_sf(f, df[0], df[1]), df, "anova_oneway")


def t_paired(a: list[float], b: list[float]) -> TestResult:
    """Two-sided paired t-test on the differences a - b."""
    if len(a) != len(b):
        raise StyleProbeError("paired test needs equal-length samples")
    n = len(a)
    if n < 2:
        raise StyleProbeError("paired test needs n >= 2")
    d = [x - y for x, y in zip(a, b)]
    mean_d = sum(d) / n
    var_d = sum((x - mean_d) ** 2 for x in d) / (n - 1)
    df = (float(n - 1),)
    if var_d == 0.0:
        if mean_d == 0.0:
            return TestResult(0.0, 1.0, df, "t_paired", degenerate=True)
        t = math.inf if mean_d > 0 else -math.inf
        return TestResult(t, 0.0, df, "t_paired", degenerate=True)
    t = mean_d / math.sqrt(var_d / n)
    return TestResult(t, t_sf2(t, df[0]), df, "t_paired")


def kendall_tau(x: list[float], y: list[float]) -> TestResult:
    """Tie-corrected Kendall correlation (tau-b), p-value via the normal
    approximation of the concordance statistic."""
    if len(x) != len(y):
        raise StyleProbeError("kendall_tau needs equal-length inputs")
    n = len(x)
    if n < 2:
        raise StyleProbeError("kendall_tau needs n >= 2")
    if all(v == x[0] for v in x) or all(v == y[0] for v in y):
        raise StyleProbeError("kendall_tau undefined for an all-tied variable")
    concordant = discordant = tx = ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tx += 1
            elif dy == 0:
                ty += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    s = concordant - discordant
    denom = math.sqrt(
        (concordant + discordant + tx) * (concordant + discordant + ty)
    )
    tau = s / denom

    def tie_sizes(values):
        counts: dict[float, int] = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        return [c for c in counts.values() if c > 1]

    tix = tie_sizes(x)
    tiy = tie_sizes(y)
    v0 = n * (n - 1) * (2 * n + 5)
    vt = sum(t * (t - 1) * (2 * t + 5) for t in tix)
    vu = sum(u * (u - 1) * (2 * u + 5) for u in tiy)
    v1 = sum(t * (t - 1) for t in tix) * sum(u * (u - 1) for u in tiy)
    v2 = sum(t * (t - 1) * (t - 2) for t in tix) * sum(u * (u - 1) * (u - 2) for u in tiy)
    var_s = (
        (v0 - vt - vu) / 18.0
        + v1 / (2.0 * n * (n - 1))
        + (v2 / (9.0 * n * (n - 1) * (n - 2)) if n > 2 else 0.0)
    )
    if var_s <= 0:
        return TestResult(tau, 1.0, (float(n),), "kendall_tau", degenerate=True)
    z = s / math.sqrt(var_s)
    return TestResult(tau, normal_sf2(z), (float(n),), "kendall_tau")


def percentile(sorted_values: list[float], q: float) -> float:
    """Linear-interpolation quantile of pre-sorted values."""
    if not sorted_values:
        raise StyleProbeError("percentile of an empty list")
    pos = q * (len(sorted_values) - 1)
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    if lo == hi:
        return sorted_values[lo]
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def bootstrap_ci(
    values: list[float],
    statistic,
    n_boot: int = 1000,
    confidence: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Seeded percentile bootstrap. Each resample derives its own RNG from
    (seed, resample index), so parallel evaluation cannot change results."""
    if not values:
        raise StyleProbeError("bootstrap over an empty sample")
    if n_boot < 100:
        raise StyleProbeError("n_boot must be >= 100")
    n = len(values)
    stats = []
    for i in range(n_boot):
        rng = random.Random(f"{seed}|{i}")
        resample = [values[rng.randrange(n)] for _ in range(n)]
        stats.append(statistic(resample))
    stats.sort()
    alpha = 1.0 - confidence
    return percentile(stats, alpha / 2.0), percentile(stats, 1.0 - alpha / 2.0)
