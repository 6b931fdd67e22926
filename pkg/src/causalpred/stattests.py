"""Statistical tests and estimators producing the labels models must predict.

Fisher-Z partial-correlation tests, Pearson correlation and sign
estimators, an HSIC independence test with gamma-approximated null, and
kernel ridge regression used by the bivariate additive-noise test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import gamma as gamma_dist
from scipy.stats import norm

from .core import PropertyValue, Query, QueryKind, binary, real, sign
from .errors import DegenerateInput, InvalidParams, InvalidSize, ZeroCorrelation

VAR_EPS = 1e-12
DEFAULT_RIDGE_SCALE = 1e-3  # ridge = scale * sample count


@dataclass(frozen=True)
class TestOutcome:
    """Value of a test or estimator, with its p-value where one exists."""

    __test__ = False  # not a pytest test class despite the name

    value: PropertyValue
    p_value: float = None
    alpha: float = None

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise InvalidParams(f"p-value {self.p_value} outside [0, 1]")


def _require_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InvalidParams(f"alpha {alpha} outside (0, 1)")


def _check_nonconstant(*cols):
    for c in cols:
        if np.var(c) < VAR_EPS:
            raise DegenerateInput("constant column")


# --- Fisher-Z -----------------------------------------------------------------


def partial_correlation(corr, target_idx, cond_idx):
    """Partial correlation of two variables given a set, from a correlation
    matrix, via inversion of the relevant submatrix."""
    idx = list(target_idx) + list(cond_idx)
    sub = corr[np.ix_(idx, idx)]
    if np.linalg.cond(sub) > 1e12:
        raise DegenerateInput("correlation submatrix is singular")
    prec = np.linalg.inv(sub)
    return -prec[0, 1] / np.sqrt(prec[0, 0] * prec[1, 1])


def fisher_z_from_corr(corr, l, target_idx, cond_idx, alpha) -> TestOutcome:
    """Fisher-Z test evaluated on a precomputed correlation matrix."""
    _require_alpha(alpha)
    n_cond = len(cond_idx)
    if l <= n_cond + 3:
        raise InvalidSize(f"need more than {n_cond + 3} samples")
    r = partial_correlation(corr, target_idx, cond_idx)
    if abs(r) >= 1.0 - VAR_EPS:
        raise DegenerateInput("partial correlation at the +-1 boundary")
    stat = np.sqrt(l - n_cond - 3) * np.arctanh(r)
    p = 2.0 * norm.sf(abs(stat))
    return TestOutcome(binary(1 if p > alpha else 0), float(p), alpha)


def fisher_z_ci(d, q: Query, alpha) -> TestOutcome:
    """Partial-correlation conditional independence test; 1 = independence."""
    if q.kind != QueryKind.COND_INDEP:
        raise InvalidSize("fisher_z_ci takes conditional-independence queries")
    cols = [d.column(v) for v in q.variables()]
    _check_nonconstant(*cols)
    mat = np.column_stack(cols)
    corr = np.corrcoef(mat, rowvar=False)
    return fisher_z_from_corr(corr, d.l, (0, 1), range(2, mat.shape[1]), alpha)


# --- correlation estimators ---------------------------------------------------


def corr_estimate(d, q: Query) -> TestOutcome:
    if q.kind != QueryKind.UNORDERED_PAIR:
        raise InvalidSize("corr_estimate takes unordered pairs")
    if d.l < 3:
        raise InvalidSize("need at least three samples")
    x, y = (d.column(v) for v in q.members)
    _check_nonconstant(x, y)
    r = float(np.corrcoef(x, y)[0, 1])
    return TestOutcome(real(r))


def sign_estimate(d, q: Query) -> TestOutcome:
    out = corr_estimate(d, q)
    r = out.value.value
    if abs(r) <= VAR_EPS:
        raise ZeroCorrelation("correlation numerically zero; sign undefined")
    return TestOutcome(sign(1 if r > 0 else -1))


# --- kernel machinery ---------------------------------------------------------


def median_bandwidth(x) -> float:
    """Median heuristic: sqrt(median of positive squared distances / 2)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    d2 = (x[:, None] - x[None, :]) ** 2
    pos = d2[d2 > 0]
    if pos.size == 0:
        raise DegenerateInput("all points identical")
    return float(np.sqrt(0.5 * np.median(pos)))


def _gram(x, bandwidth):
    x = np.asarray(x, dtype=float).reshape(-1)
    d2 = (x[:, None] - x[None, :]) ** 2
    return np.exp(-d2 / (2.0 * bandwidth**2))


def hsic_statistic(x, y):
    """Biased HSIC V-statistic with median-heuristic Gaussian kernels,
    plus the gamma moment-matching parameters of its null distribution."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    m = x.size
    k = _gram(x, median_bandwidth(x))
    l = _gram(y, median_bandwidth(y))
    h = np.eye(m) - np.full((m, m), 1.0 / m)
    kc = h @ k @ h
    lc = h @ l @ h
    stat = float(np.sum(kc * lc)) / m

    var_hsic = (kc * lc / 6.0) ** 2
    var_hsic = (var_hsic.sum() - np.trace(var_hsic)) / m / (m - 1)
    var_hsic *= 72.0 * (m - 4) * (m - 5) / m / (m - 1) / (m - 2) / (m - 3)
    k0 = k - np.diag(np.diag(k))
    l0 = l - np.diag(np.diag(l))
    mu_x = k0.sum() / m / (m - 1)
    mu_y = l0.sum() / m / (m - 1)
    mean_hsic = (1.0 + mu_x * mu_y - mu_x - mu_y) / m
    return stat, mean_hsic, var_hsic


def hsic_independence(x, y, alpha, method="gamma", n_permutations=500, seed=0) -> TestOutcome:
    """HSIC test; value 1 iff independence is accepted (p > alpha).

    The null p-value comes from a gamma moment-matching approximation by
    default; ``method="permutation"`` resamples one column instead.
    """
    _require_alpha(alpha)
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size:
        raise InvalidSize("columns must have equal length")
    if x.size < 20:
        raise InvalidSize("need at least 20 samples")
    _check_nonconstant(x, y)
    stat, mean_hsic, var_hsic = hsic_statistic(x, y)
    if method == "gamma":
        if mean_hsic <= 0 or var_hsic <= 0:
            raise DegenerateInput("gamma approximation undefined for this input")
        # the statistic is m * HSIC while the moments are those of HSIC,
        # hence the extra factor in the scale
        shape = mean_hsic**2 / var_hsic
        scale = var_hsic * x.size / mean_hsic
        p = float(gamma_dist.sf(stat, shape, scale=scale))
    elif method == "permutation":
        rng = np.random.default_rng(seed)
        count = 0
        for _ in range(n_permutations):
            perm_stat, _, _ = hsic_statistic(x, rng.permutation(y))
            if perm_stat >= stat:
                count += 1
        p = (count + 1.0) / (n_permutations + 1.0)
    else:
        raise InvalidParams(f"unknown method {method!r}")
    return TestOutcome(binary(1 if p > alpha else 0), p, alpha)


def kernel_regress(x, y, ridge_scale=DEFAULT_RIDGE_SCALE):
    """Residuals of y after kernel ridge regression on x.

    Gaussian kernel with median-heuristic bandwidth, ridge
    ``ridge_scale * l``; y is centered before the solve so constant
    targets give exactly zero residuals.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size:
        raise InvalidSize("columns must have equal length")
    if x.size < 20:
        raise InvalidSize("need at least 20 samples")
    _check_nonconstant(x)
    k = _gram(x, median_bandwidth(x))
    lam = ridge_scale * x.size
    yc = y - y.mean()
    alpha_vec = np.linalg.solve(k + lam * np.eye(x.size), yc)
    return yc - k @ alpha_vec


def anm_test(d, q: Query, alpha, ridge_scale=DEFAULT_RIDGE_SCALE) -> TestOutcome:
    """Bivariate additive-noise test for the ordered pair (source, target).

    Value 1 iff the pair is marginally dependent and the residual of the
    target after regressing on the source is independent of the source.
    The reported p-value is the residual-independence p-value.
    """
    if q.kind != QueryKind.ORDERED_PAIR:
        raise InvalidSize("anm_test takes ordered pairs")
    source, target = q.members
    x = d.column(source)
    y = d.column(target)
    marginal = hsic_independence(x, y, alpha)
    residuals = kernel_regress(x, y, ridge_scale)
    resid_test = hsic_independence(x, residuals, alpha)
    accepted = marginal.value.value == 0 and resid_test.value.value == 1
    return TestOutcome(binary(1 if accepted else 0), resid_test.p_value, alpha)
