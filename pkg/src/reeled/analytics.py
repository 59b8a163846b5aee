"""Study measures and the two-group statistical battery.

Quiz scoring, revisit counting, UEQ-S scales and Likert block coding feed
per-group samples into a normality-gated comparison: Shapiro-Wilk on both
groups, Welch's t-test when both pass (p > 0.05), Mann-Whitney U otherwise.
Everything here is pure stdlib so the reference implementations used by the
test suite stay independent.

Shapiro-Wilk follows the Royston AS R94 algorithm (3 <= n <= 5000) with the
AS 241 normal quantile. Mann-Whitney uses mid-ranks; the two-sided p is by
full enumeration for small tie-free samples and otherwise a normal
approximation with tie-corrected variance and continuity correction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    MixedInstruments,
    RangeError,
    TooFewValues,
    TooManyValues,
    UnknownItem,
    WrongItemCount,
    ZeroVariance,
)

NORMALITY_ALPHA = 0.05
SIGNIFICANCE_ALPHA = 0.05
EXACT_MW_LIMIT = 8
REVISIT_DEBOUNCE_S = 2.0

INSTRUMENTS = ("ueq_s", "imi_competence", "tlx", "learning_effectiveness",
               "learning_experience", "trust")

# canonical UEQ-S order: first four dimensions pragmatic, last four hedonic
UEQ_S_ITEMS = (
    "obstructive_supportive",
    "complicated_easy",
    "inefficient_efficient",
    "confusing_clear",
    "boring_exciting",
    "not_interesting_interesting",
    "conventional_inventive",
    "usual_leading_edge",
)


@dataclass(frozen=True)
class GroupSample:
    label: str
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) < 1:
            raise TooFewValues(f"group {self.label!r} is empty")

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class LikertResponse:
    instrument: str
    item_id: str
    value: int
    reversed: bool = False

    def __post_init__(self):
        if not 1 <= self.value <= 7:
            raise RangeError(f"Likert value {self.value} outside [1, 7]")
        if self.instrument not in INSTRUMENTS:
            raise UnknownItem(f"unknown instrument {self.instrument!r}")


@dataclass(frozen=True)
class UeqScales:
    pragmatic: float
    hedonic: float
    overall: float


@dataclass(frozen=True)
class GroupSummary:
    label: str
    mean: float
    sd: float
    n: int


@dataclass(frozen=True)
class NormalityResult:
    w: float | None
    p: float


@dataclass(frozen=True)
class TestResult:
    method: str  # "t_test" | "mann_whitney"
    statistic: float
    p_value: float
    group_summaries: tuple[GroupSummary, ...]
    normality: tuple[NormalityResult, ...] | None = None
    u1: float | None = None
    u2: float | None = None
    exact: bool | None = None
    df: float | None = None

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_ALPHA


# --- basic helpers ----------------------------------------------------------

def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)

def _sample_sd(values: Sequence[float]) -> float:
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))

def _summary(g: GroupSample) -> GroupSummary:
    sd = _sample_sd(g.values) if g.n > 1 else 0.0
    return GroupSummary(label=g.label, mean=_mean(g.values), sd=sd, n=g.n)

def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _norm_ppf(p: float) -> float:
    """Inverse standard normal CDF, AS 241 (PPND16)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    value = num / den
    return -value if q < 0 else value


def _poly(coeffs: Sequence[float], x: float) -> float:
    """coeffs[0] + coeffs[1] x + coeffs[2] x^2 + ..."""
    result = 0.0
    for c in reversed(coeffs):
        result = result * x + c
    return result


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-14:
            break
    return h


def _betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _t_sf(t: float, df: float) -> float:
    """Survival function of Student's t."""
    x = df / (df + t * t)
    p_two = _betainc(df / 2.0, 0.5, x)
    return p_two / 2.0 if t >= 0 else 1.0 - p_two / 2.0


def _rankdata(values: Sequence[float]) -> list[float]:
    """Mid-ranks: tied observations share the average of their rank span."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


# --- measures ----------------------------------------------------------------

def score_quiz(answers: Mapping[str, object], key: Mapping[str, object]) -> float:
    """Percentage of correct answers; missing items count as incorrect."""
    for item_id in answers:
        if item_id not in key:
            raise UnknownItem(f"answer references unknown quiz item {item_id!r}")
    correct = sum(1 for item_id, expected in key.items()
                  if item_id in answers and answers[item_id] == expected)
    return 100.0 * correct / len(key)


def count_revisits(events: Sequence[Mapping]) -> int:
    """Play/seek events on content after the first quiz_open.

    Consecutive qualifying events within REVISIT_DEBOUNCE_S on the same
    subject collapse into one revisit (rolling window).
    """
    opened = False
    count = 0
    last_subject = None
    last_time = None
    for e in events:
        kind = e["kind"]
        if not opened:
            if kind == "quiz_open":
                opened = True
            continue
        if kind not in ("play", "seek"):
            continue
        wall = float(e["wall_time"])
        same_burst = (last_subject == e["subject_id"] and last_time is not None
                      and wall - last_time <= REVISIT_DEBOUNCE_S)
        if not same_burst:
            count += 1
        last_subject = e["subject_id"]
        last_time = wall
    return count


def score_ueq_short(items: Sequence[LikertResponse]) -> UeqScales:
    """UEQ-S scales on [-3, 3]: items shift by -4; pragmatic = first four,
    hedonic = last four, overall = mean of all eight."""
    if len(items) != 8:
        raise WrongItemCount(f"UEQ-S needs exactly 8 items, got {len(items)}")
    for item, expected in zip(items, UEQ_S_ITEMS):
        if item.item_id != expected:
            raise UnknownItem(
                f"expected UEQ-S item {expected!r}, got {item.item_id!r}")
    shifted = [item.value - 4 for item in items]
    return UeqScales(pragmatic=_mean(shifted[:4]),
                     hedonic=_mean(shifted[4:]),
                     overall=_mean(shifted))


@dataclass(frozen=True)
class LikertBlockScore:
    per_item: tuple[float, ...]
    block_mean: float


def score_likert_block(items: Sequence[LikertResponse]) -> LikertBlockScore:
    """Reverse-code flagged items (v -> 8 - v) and average the block."""
    if not items:
        raise WrongItemCount("empty Likert block")
    instruments = {item.instrument for item in items}
    if len(instruments) > 1:
        raise MixedInstruments(f"block mixes instruments {sorted(instruments)}")
    coded = tuple(float(8 - i.value if i.reversed else i.value) for i in items)
    return LikertBlockScore(per_item=coded, block_mean=_mean(coded))


# --- statistical tests --------------------------------------------------------

def shapiro_wilk(values: Sequence[float]) -> NormalityResult:
    """Shapiro-Wilk W and p (Royston AS R94), for 3 <= n <= 5000."""
    n = len(values)
    if n < 3:
        raise TooFewValues(f"Shapiro-Wilk needs n >= 3, got {n}")
    if n > 5000:
        raise TooManyValues(f"Shapiro-Wilk supports n <= 5000, got {n}")
    x = sorted(float(v) for v in values)
    mean = _mean(x)
    ssq = sum((v - mean) ** 2 for v in x)
    if ssq == 0.0:
        raise ZeroVariance("sample variance is zero")

    if n == 3:
        a = [-math.sqrt(0.5), 0.0, math.sqrt(0.5)]
    else:
        m = [_norm_ppf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
        msq = sum(v * v for v in m)
        rsn = 1.0 / math.sqrt(n)
        c_last = m[-1] / math.sqrt(msq)
        a_n = (_poly((0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056), rsn)
               + c_last)
        a = [0.0] * n
        if n > 5:
            a_n1 = (_poly((0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633),
                          rsn) + m[-2] / math.sqrt(msq))
            phi = ((msq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2)
                   / (1.0 - 2.0 * a_n ** 2 - 2.0 * a_n1 ** 2))
            a[-1], a[-2] = a_n, a_n1
            a[0], a[1] = -a_n, -a_n1
            inner = range(2, n - 2)
        else:
            phi = (msq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n ** 2)
            a[-1] = a_n
            a[0] = -a_n
            inner = range(1, n - 1)
        sqrt_phi = math.sqrt(phi)
        for i in inner:
            a[i] = m[i] / sqrt_phi

    sax = sum(ai * xi for ai, xi in zip(a, x))
    w = min(1.0, sax * sax / ssq)

    if n == 3:
        p = 1.90985931710274 * (math.asin(math.sqrt(w)) - 1.04719755119660)
        return NormalityResult(w=w, p=min(1.0, max(0.0, p)))
    y = math.log(1.0 - w) if w < 1.0 else -math.inf
    if n <= 11:
        gamma = _poly((-2.273, 0.459), float(n))
        if y >= gamma:
            return NormalityResult(w=w, p=1e-19)
        y = -math.log(gamma - y)
        mu = _poly((0.5440, -0.39978, 0.025054, -6.714e-4), float(n))
        sigma = math.exp(_poly((1.3822, -0.77857, 0.062767, -0.0020322), float(n)))
    else:
        ln_n = math.log(n)
        mu = _poly((-1.5861, -0.31082, -0.083751, 0.0038915), ln_n)
        sigma = math.exp(_poly((-0.4803, -0.082676, 0.0030302), ln_n))
    if y == -math.inf:
        return NormalityResult(w=w, p=1.0)
    return NormalityResult(w=w, p=_norm_sf((y - mu) / sigma))


def students_t(g1: GroupSample, g2: GroupSample) -> TestResult:
    """Welch's two-sided independent-samples t-test."""
    if g1.n < 2 or g2.n < 2:
        raise TooFewValues("t-test needs n >= 2 per group")
    v1 = _sample_sd(g1.values) ** 2
    v2 = _sample_sd(g2.values) ** 2
    se_sq = v1 / g1.n + v2 / g2.n
    if se_sq == 0.0:
        raise ZeroVariance("both groups have zero variance")
    t = (_mean(g1.values) - _mean(g2.values)) / math.sqrt(se_sq)
    df = se_sq ** 2 / ((v1 / g1.n) ** 2 / (g1.n - 1) + (v2 / g2.n) ** 2 / (g2.n - 1))
    p = min(1.0, 2.0 * _t_sf(abs(t), df))
    return TestResult(method="t_test", statistic=t, p_value=p,
                      group_summaries=(_summary(g1), _summary(g2)), df=df)


def _tie_term(pooled: Sequence[float]) -> float:
    term = 0.0
    for _, group in itertools.groupby(sorted(pooled)):
        t = sum(1 for _ in group)
        term += t ** 3 - t
    return term


def _exact_mw_p(u1: float, n1: int, n2: int) -> float:
    """Two-sided p by enumerating all rank labelings (tie-free samples)."""
    n = n1 + n2
    offset = n1 * (n1 + 1) / 2.0
    c_le = c_ge = total = 0
    for combo in itertools.combinations(range(1, n + 1), n1):
        u = sum(combo) - offset
        total += 1
        if u <= u1:
            c_le += 1
        if u >= u1:
            c_ge += 1
    return min(1.0, 2.0 * min(c_le, c_ge) / total)


def mann_whitney_p_from_summary(u: float, n1: int, n2: int,
                                continuity: bool = True) -> float:
    """Two-sided normal-approximation p from a reported U alone (no tie
    information available), with continuity correction by default."""
    mu = n1 * n2 / 2.0
    sd = math.sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0)
    num = abs(u - mu)
    if continuity:
        num = max(0.0, num - 0.5)
    return min(1.0, 2.0 * _norm_sf(num / sd))


def mann_whitney_u(g1: GroupSample, g2: GroupSample) -> TestResult:
    """Mann-Whitney U from mid-ranks; U is reported for the first group.

    Exact two-sided p by full enumeration when both n <= 8 and the pooled
    sample is tie-free; otherwise a normal approximation with tie-corrected
    variance and continuity correction.
    """
    n1, n2 = g1.n, g2.n
    pooled = list(g1.values) + list(g2.values)
    ranks = _rankdata(pooled)
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2.0
    u2 = n1 * n2 - u1

    has_ties = len(set(pooled)) != len(pooled)
    if n1 <= EXACT_MW_LIMIT and n2 <= EXACT_MW_LIMIT and not has_ties:
        p = _exact_mw_p(u1, n1, n2)
        exact = True
    else:
        n = n1 + n2
        var = (n1 * n2 / 12.0) * ((n + 1) - _tie_term(pooled) / (n * (n - 1)))
        if var <= 0.0:
            p = 1.0
        else:
            num = max(0.0, abs(u1 - n1 * n2 / 2.0) - 0.5)
            p = min(1.0, 2.0 * _norm_sf(num / math.sqrt(var)))
        exact = False
    return TestResult(method="mann_whitney", statistic=u1, p_value=p,
                      group_summaries=(_summary(g1), _summary(g2)),
                      u1=u1, u2=u2, exact=exact)


def compare_groups(g1: GroupSample, g2: GroupSample) -> TestResult:
    """Normality-gated comparison: t-test iff both Shapiro-Wilk p > 0.05.

    A zero-variance group cannot be normal, so it routes to Mann-Whitney
    with its normality recorded as (W=None, p=0).
    """
    if g1.n < 3 or g2.n < 3:
        raise TooFewValues("normality gate needs n >= 3 per group")
    normality = []
    for g in (g1, g2):
        try:
            normality.append(shapiro_wilk(g.values))
        except ZeroVariance:
            normality.append(NormalityResult(w=None, p=0.0))
    if all(r.p > NORMALITY_ALPHA for r in normality):
        result = students_t(g1, g2)
    else:
        result = mann_whitney_u(g1, g2)
    return TestResult(method=result.method, statistic=result.statistic,
                      p_value=result.p_value,
                      group_summaries=result.group_summaries,
                      normality=tuple(normality),
                      u1=result.u1, u2=result.u2, exact=result.exact,
                      df=result.df)


def group_sample(label: str, values: Iterable[float]) -> GroupSample:
    return GroupSample(label=label, values=tuple(float(v) for v in values))
