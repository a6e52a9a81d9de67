"""Closed-form error bounds for the one-step pseudo-likelihood label update.

All logarithms are natural.  Bounds that do not apply at a parameter point
are reported as ``None``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidParameterError


def binary_entropy(gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameterError(f"gamma must lie in [0, 1], got {gamma}")
    if gamma in (0.0, 1.0):
        return 0.0
    return -gamma * math.log(gamma) - (1.0 - gamma) * math.log1p(-gamma)


def _kappa(gamma: float, n: float) -> float:
    return (math.log(n) - math.log(4.0 * math.pi * gamma * (1.0 - gamma) + 1.0 / (3.0 * n))) / n


def _exp(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


def kappa(gamma: float, n: float) -> float:
    """``(log n - log(4 pi gamma (1 - gamma) + 1/(3n))) / n`` for gamma in (0, 1)."""
    if not 0.0 < gamma < 1.0:
        raise InvalidParameterError(f"gamma must lie in (0, 1), got {gamma}")
    if not n > 0:
        raise InvalidParameterError(f"n must be positive, got {n}")
    return _kappa(gamma, n)


@dataclass(frozen=True)
class BalancedBoundReport:
    K: int
    n: float
    a: float
    b: float
    sigma2: float
    gamma: float
    entropy_h: float
    kappa: float
    c_n_gamma: float
    condition_lhs: float
    condition_holds: bool
    expected_error_bound: float
    prob_threshold: float
    prob_rhs: float
    xu_lower_bound: float

    def to_dict(self) -> dict:
        d = {k: (v if not isinstance(v, float) or math.isfinite(v) else None)
             for k, v in asdict(self).items()}
        d["xu_lower_bound_note"] = "leading-order"
        return d


def balanced_bounds(K: int, n: float, a: float, b: float, sigma2: float, gamma: float) -> BalancedBoundReport:
    """Error bounds for balanced communities and initial labels matching a fraction ``gamma``.

    ``gamma = 1`` is accepted; the entropy term is then 0.
    """
    if K < 2:
        raise InvalidParameterError(f"K must be >= 2, got {K}")
    if a == b:
        raise InvalidParameterError("a and b must differ")
    if not sigma2 > 0:
        raise InvalidParameterError(f"sigma2 must be positive, got {sigma2}")
    if not n > 0:
        raise InvalidParameterError(f"n must be positive, got {n}")
    if not 0.0 < gamma <= 1.0:
        raise InvalidParameterError(f"gamma must lie in (0, 1], got {gamma}")
    if math.isclose(gamma * K, 1.0, rel_tol=0.0, abs_tol=1e-15):
        raise InvalidParameterError("gamma = 1/K carries no information about the labels")
    snr = (a - b) ** 2 / sigma2
    shape = (gamma * K - 1.0) ** 2 / (K * (K - 1.0) ** 2)
    h = binary_entropy(gamma)
    kap = _kappa(gamma, 2.0 * n / K)
    c_ng = h + kap + (1.0 - gamma) * math.log(K - 1.0)
    lhs = shape * snr / 8.0
    return BalancedBoundReport(
        K=K, n=n, a=a, b=b, sigma2=sigma2, gamma=gamma,
        entropy_h=h,
        kappa=kap,
        c_n_gamma=c_ng,
        condition_lhs=lhs,
        condition_holds=lhs > c_ng,
        expected_error_bound=(K - 1.0) * math.exp(-0.25 * shape * n * snr),
        prob_threshold=math.exp(-0.125 * (gamma * K - 1.0) ** 2 / (K - 1.0) ** 2 * (n / K) * snr),
        prob_rhs=(K - 1.0) * _exp(-n * (lhs - c_ng)),
        xu_lower_bound=math.exp(-(n / K) * snr / 4.0),
    )


@dataclass(frozen=True)
class UnbalancedBoundReport:
    pi1: float
    pi2: float
    gamma1: float
    gamma2: float
    a: float
    b: float
    sigma2: float
    ahat: float
    bhat: float
    sigma2hat: float
    n: float
    pi_tilde1: float
    pi_tilde2: float
    beta1: float
    beta2: float
    tau2: float
    f_ab: float
    f_ba: float
    t1: float
    t2: float
    sign_conditions_hold: bool
    applicable: bool
    bound_comm1: float | None
    bound_comm2: float | None
    expected_error_bound: float | None
    log_expected_error_bound: float | None
    c1_gamma_pi: float
    c2_gamma_pi: float
    flags: tuple = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


def unbalanced_bounds(pi, gamma, truth, estimates, n: float) -> UnbalancedBoundReport:
    """Per-community misclassification bounds for two communities of unequal size.

    Parameters
    ----------
    pi : (pi1, pi2)
        True community proportions.
    gamma : (gamma1, gamma2)
        Fraction of each true community the initial labels get right.
    truth : (a, b, sigma2)
        Within mean, between mean and common variance.
    estimates : (ahat, bhat, sigma2hat)
        Parameter estimates used by the label update.
    n : float
        Number of nodes.
    """
    pi1, pi2 = (float(x) for x in pi)
    g1, g2 = (float(x) for x in gamma)
    a, b, s2 = (float(x) for x in truth)
    ah, bh, s2h = (float(x) for x in estimates)
    if min(pi1, pi2) < 0 or abs(pi1 + pi2 - 1.0) > 1e-12:
        raise InvalidParameterError(f"pi must be a probability vector, got {(pi1, pi2)}")
    if not (0.0 <= g1 <= 1.0 and 0.0 <= g2 <= 1.0):
        raise InvalidParameterError("match proportions must lie in [0, 1]")
    if not (ah - bh) * (a - b) > 0:
        raise InvalidParameterError("estimates must order the means like the truth: (ahat-bhat)(a-b) > 0")
    if not (s2 > 0 and s2h > 0 and n > 0):
        raise InvalidParameterError("variances and n must be positive")

    pt1 = g1 * pi1 + pi2 * (1.0 - g2)
    pt2 = (1.0 - g1) * pi1 + pi2 * g2
    beta1 = pt2 * ((1.0 - g2) * pi2 - g1 * pi1)
    beta2 = pt1 * ((1.0 - g1) * pi1 - g2 * pi2)
    w1 = beta1 * g1 * pi1 - beta2 * (1.0 - g1) * pi1
    w2 = beta1 * (1.0 - g2) * pi2 - beta2 * g2 * pi2

    def F(x, y):
        return (-2.0 * x + ah + bh) * w1 + (-2.0 * y + ah + bh) * w2

    if pt1 > 0 and pt2 > 0:
        log_term = 2.0 * s2h * pt1 * pt2 / (n * (ah - bh)) * math.log(pt1 / pt2)
    else:
        log_term = 0.0
    f_ab, f_ba = F(a, b), F(b, a)
    t1, t2 = log_term + f_ab, log_term + f_ba
    tau2 = beta1 ** 2 * pi1 + beta2 ** 2 * pi2
    c1 = beta1 * pi2 + beta2 * pi1 - (beta1 + beta2) * (pi1 * g1 + pi2 * g2)
    c2 = beta1 * pi2 - beta2 * pi1 + (beta1 + beta2) * (pi1 * g1 - pi2 * g2)

    if a > b:
        signs = t1 >= 0 and t2 < 0
    else:
        signs = t1 < 0 and t2 >= 0
    flags = []
    applicable = signs and tau2 > 0
    if tau2 == 0:
        flags.append("tau2_zero")
    if not signs:
        flags.append("sign_conditions_fail")
    b1 = b2 = expected = log_expected = None
    if applicable:
        x1 = -n * t1 ** 2 / (2.0 * s2 * tau2)
        x2 = -n * t2 ** 2 / (2.0 * s2 * tau2)
        b1, b2 = math.exp(x1), math.exp(x2)
        expected = pi1 * b1 + pi2 * b2
        terms = [math.log(p) + x for p, x in ((pi1, x1), (pi2, x2)) if p > 0]
        log_expected = float(np.logaddexp.reduce(terms))
    return UnbalancedBoundReport(
        pi1=pi1, pi2=pi2, gamma1=g1, gamma2=g2, a=a, b=b, sigma2=s2,
        ahat=ah, bhat=bh, sigma2hat=s2h, n=n,
        pi_tilde1=pt1, pi_tilde2=pt2, beta1=beta1, beta2=beta2, tau2=tau2,
        f_ab=f_ab, f_ba=f_ba, t1=t1, t2=t2,
        sign_conditions_hold=signs, applicable=applicable,
        bound_comm1=b1, bound_comm2=b2,
        expected_error_bound=expected, log_expected_error_bound=log_expected,
        c1_gamma_pi=c1, c2_gamma_pi=c2, flags=tuple(flags),
    )


@dataclass(frozen=True)
class Heatmap:
    ab_grid: tuple
    delta_grid: tuple
    log_bound: tuple  # rows follow delta_grid, columns ab_grid; None where not applicable

    def to_csv(self) -> str:
        lines = [",".join(["delta"] + [f"{x:g}" for x in self.ab_grid])]
        for d, row in zip(self.delta_grid, self.log_bound):
            cells = ["NA" if v is None else repr(float(v)) for v in row]
            lines.append(",".join([f"{d:g}"] + cells))
        return "\n".join(lines) + "\n"


def worst_case_log_bound(pi, gamma, n, sigma2, ab: float, delta: float) -> float | None:
    """Largest log expected-error bound over estimates within ``delta`` of the truth.

    Uses ``a = ab``, ``b = 0`` and ``sigma2hat = sigma2``; the extreme is
    attained at a corner of the box of estimates.
    """
    if ab <= 0:
        return None
    a, b = float(ab), 0.0
    corners = {(a + sa * delta, b + sb * delta) for sa in (-1, 1) for sb in (-1, 1)}
    worst = None
    for ah, bh in sorted(corners):
        if not (ah - bh) * (a - b) > 0:
            continue
        rep = unbalanced_bounds(pi, gamma, (a, b, sigma2), (ah, bh, sigma2), n)
        if rep.applicable and (worst is None or rep.log_expected_error_bound > worst):
            worst = rep.log_expected_error_bound
    return worst


def bound_heatmap(pi, gamma, n, sigma2, ab_grid, delta_grid) -> Heatmap:
    """Grid of worst-case log bounds over signal strength ``|a-b|`` and estimate error ``delta``."""
    ab_grid = tuple(float(x) for x in ab_grid)
    delta_grid = tuple(float(x) for x in delta_grid)
    if not ab_grid or not delta_grid:
        raise InvalidParameterError("heatmap grids must be non-empty")
    if any(d < 0 for d in delta_grid) or any(x < 0 for x in ab_grid):
        raise InvalidParameterError("grid values must be non-negative")
    rows = tuple(
        tuple(worst_case_log_bound(pi, gamma, n, sigma2, ab, d) for ab in ab_grid)
        for d in delta_grid
    )
    return Heatmap(ab_grid, delta_grid, rows)
