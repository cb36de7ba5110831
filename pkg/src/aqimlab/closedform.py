"""Analytic quantities: special functions, expectation identities, bounds,
concentration tails, admissible code dimensions and threshold scans.

Anything containing d^m or (10/alpha)^(2 d_C) is assembled in log space.  Tail
bounds are returned as natural-log probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import DomainError

LN2 = math.log(2.0)
PI3 = math.pi**3
M_CAP = 10_000


class ThresholdNotFound(RuntimeError):
    pass


class Infeasible(ValueError):
    pass


@dataclass(frozen=True)
class BoundValue:
    id: str
    params: dict = field(default_factory=dict)
    value: float = 0.0
    log_space: bool = False


# ---------------------------------------------------------------- special functions


def _lgamma_signed(x: float) -> tuple[float, float]:
    """(log|Gamma(x)|, sign Gamma(x)); raises at the poles x = 0, -1, -2, ..."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"Gamma has a pole at {x}")
    lg = math.lgamma(x)
    if x > 0:
        return lg, 1.0
    # Gamma alternates sign between consecutive negative integers
    n = math.ceil(-x)
    return lg, -1.0 if n % 2 else 1.0


def pochhammer(alpha: float, beta: float) -> float:
    """(alpha)_beta = Gamma(alpha + beta) / Gamma(alpha)."""
    if alpha <= 0:
        raise DomainError(f"pochhammer needs alpha > 0, got {alpha}")
    if alpha + beta <= 0:
        raise DomainError(f"pochhammer needs alpha + beta > 0, got {alpha + beta}")
    if beta == 0:
        return 1.0
    a, _ = _lgamma_signed(alpha + beta)
    b, _ = _lgamma_signed(alpha)
    return math.exp(a - b)


def gbinom(alpha: float, beta: float) -> float:
    """Generalized binomial Gamma(a+1) / (Gamma(a-b+1) Gamma(b+1))."""
    la, sa = _lgamma_signed(alpha + 1)
    lb, sb = _lgamma_signed(alpha - beta + 1)
    lc, sc = _lgamma_signed(beta + 1)
    return sa * sb * sc * math.exp(la - lb - lc)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def log_comb(m: int, k: int) -> float:
    return math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1)


# ---------------------------------------------------------------- bipartite quantities


def ratio_factor(d_C: int, d12: int) -> float:
    """E[V^A_X(H_C)] / V^A_X(full space) for a random d_C-dimensional subspace."""
    if d12 < 2 or not 1 <= d_C <= d12:
        raise ValueError(f"need 1 <= d_C <= d12 and d12 >= 2, got d_C={d_C}, d12={d12}")
    return (2 * d_C - 2) * (2 * d12 - 1) / ((2 * d_C - 1) * (2 * d12 - 2))


def lower_bound_w(d_C: int, d12: int) -> float:
    """Lower bound w = ratio_factor / 6 on the mean average variation."""
    if d_C < 2:
        raise ValueError("w is only a nontrivial bound for d_C >= 2")
    return ratio_factor(d_C, d12) / 6.0


def pochhammer_sum(d1: int, d2: int) -> float:
    """sum_{i=1}^{d1} C(1/2,i) C(1/2,i-1) (d2)_{3/2-i} / (d1+1)_{-i}."""
    total = 0.0
    for i in range(1, d1 + 1):
        total += gbinom(0.5, i) * gbinom(0.5, i - 1) * pochhammer(d2, 1.5 - i) / pochhammer(d1 + 1, -i)
    return total


def sum_terms(d1: int, d2: int) -> list[float]:
    return [gbinom(0.5, i) * gbinom(0.5, i - 1) * pochhammer(d2, 1.5 - i) / pochhammer(d1 + 1, -i)
            for i in range(1, d1 + 1)]


def mean_fidelity_to_mixed(d1: int, d2: int, side: int = 1) -> float:
    """E[F(psi_X, 1/d_X)] for a Haar state on d1 x d2 (d1 <= d2), X = B_side."""
    dx = d1 if side == 1 else d2
    return 2.0 * pochhammer_sum(d1, d2) / (math.sqrt(dx) * pochhammer(d1 * d2, 0.5))


def _check_d1d2(d1, d2):
    if not 2 <= d1 <= d2:
        raise ValueError(f"need 2 <= d1 <= d2, got d1={d1}, d2={d2}")


def avg_distance_bounds(id: str, d1: int, d2: int, d_C: int | None = None) -> float:
    _check_d1d2(d1, d2)
    if id == "lb_identity_B1":
        return 2.0 - 2.0 * mean_fidelity_to_mixed(d1, d2, 1)
    if id == "lb_identity_B2":
        return 2.0 - 2.0 * mean_fidelity_to_mixed(d1, d2, 2)
    if id == "lb_pair_B2_simple":
        return 2.0 - 2.0 * math.sqrt(d1 / d2)
    if id in ("v1", "v2"):
        if d_C is None:
            raise ValueError(f"{id} needs d_C")
        side = "lb_identity_B1" if id == "v1" else "lb_identity_B2"
        return ratio_factor(d_C, d1 * d2) * avg_distance_bounds(side, d1, d2)
    raise ValueError(f"unknown average-distance bound {id!r}")


def pochhammer_ratio_check(x: int, y: int) -> float:
    """sqrt(x) (y)_{1/2} / (xy)_{1/2}; at most 1 for x, y >= 1."""
    return math.sqrt(x) * pochhammer(y, 0.5) / pochhammer(x * y, 0.5)


# ---------------------------------------------------------------- bound values


def r_bound(d1: int, d2: int) -> float:
    return math.sqrt((d1 * d1 - 1) / (d1 * d2 + 1))


def s_bound(d_C: int, d1: int, d2: int) -> float:
    d12 = d1 * d2
    if d12 == 1:
        return 0.0
    return math.sqrt((d_C - 1) / d_C * d12 * (d1 * d1 - 1) / (d12 * d12 - 1))


def t_bound(d_C: int, d1: int, d2: int) -> float:
    d12 = d1 * d2
    if d12 == 1:
        return 0.0
    return math.sqrt(max(d12 - d_C, 0) / d_C * (d1 * d1 - 1) / (d12 * d12 - 1))


def _check_multi(d, k, m, d_C):
    if d < 2 or not 1 <= k <= m or d_C < 1:
        raise ValueError(f"invalid (d={d}, k={k}, m={m}, d_C={d_C})")


def u_bound(d: int, k: float, m: int, d_C: int) -> float:
    """sqrt((d_C-1)/d_C * d^m (d^{2k}-1) / (d^{2m}-1)), evaluated without overflow."""
    # d^m/(d^{2m}-1) = 1/(d^m - d^{-m})
    denom = _exp(m * math.log(d)) - math.exp(-m * math.log(d))
    return math.sqrt((d_C - 1) / d_C * math.expm1(2 * k * math.log(d)) / denom)


def t_multi_bound(d: int, k: float, m: int, d_C: int) -> float:
    """sqrt((d^m - d_C)/d_C * (d^{2k}-1)/(d^{2m}-1))."""
    ln_dm = m * math.log(d)
    # (d^m - d_C)/d_C / (d^{2m}-1) = (1/d_C - d^{-m}) / (d^m - d^{-m})
    num = (1.0 / d_C - math.exp(-ln_dm)) * math.expm1(2 * k * math.log(d))
    denom = _exp(ln_dm) - math.exp(-ln_dm)
    return math.sqrt(max(num, 0.0) / denom)


def rmt_factor(d_C: int, d1: int, d2: int) -> float:
    return 4.0 / (3.0 * math.pi) * s_bound(d_C, d1, d2)


def bound_value(id: str, **p) -> float:
    if id == "r":
        return r_bound(p["d1"], p["d2"])
    if id == "s":
        return s_bound(p["d_C"], p["d1"], p["d2"])
    if id == "t":
        return t_bound(p["d_C"], p["d1"], p["d2"])
    if id == "u":
        _check_multi(p["d"], p["k"], p["m"], p["d_C"])
        return u_bound(p["d"], p["k"], p["m"], p["d_C"])
    if id == "t_multi":
        _check_multi(p["d"], p["k"], p["m"], p["d_C"])
        return t_multi_bound(p["d"], p["k"], p["m"], p["d_C"])
    if id == "rmt_factor":
        return rmt_factor(p["d_C"], p["d1"], p["d2"])
    raise ValueError(f"unknown bound id {id!r}")


# ---------------------------------------------------------------- expectation identities


def expectation_identity(id: str, d1: int, d2: int, d_C: int | None = None) -> float:
    """Exact Haar expectations of squared Hilbert-Schmidt distances on B_1."""
    d12 = d1 * d2
    if id == "hs2_state_vs_mixed":
        return (d1 * d1 - 1) / (d1 * (d12 + 1))
    if d_C is None:
        raise ValueError(f"{id} needs d_C")
    if not 1 <= d_C <= d12:
        raise ValueError(f"d_C={d_C} out of range [1, {d12}]")
    if d12 == 1:
        return 0.0
    if id == "hs2_state_vs_projector":
        return (d_C - 1) / d_C * d2 * (d1 * d1 - 1) / (d12 * d12 - 1)
    if id == "hs2_projector_vs_mixed":
        return (d12 - d_C) / (d1 * d_C) * (d1 * d1 - 1) / (d12 * d12 - 1)
    raise ValueError(f"unknown expectation identity {id!r}")


# ---------------------------------------------------------------- tail bounds

TAIL_IDS = (
    "thm2", "thm4", "thm5", "prop3", "thm6", "thm7", "thm9", "prop4", "cor3",
    "levy", "grassmann", "su", "pair", "identity_state", "unitary_h",
)

TAIL_PARAMS = {
    "thm2": ("d12",), "thm4": ("d12", "d_C"), "thm5": ("d12", "d_C"), "prop3": ("d12",),
    "thm6": ("d", "m", "k", "d_C"), "thm7": ("d", "m", "k", "d_C"), "thm9": ("d", "m", "k", "d_C"),
    "prop4": ("d", "m", "k"), "cor3": ("d", "m", "k"),
    "levy": ("d", "kappa"), "grassmann": ("d12", "kappa"), "su": ("d", "kappa"),
    "pair": ("d12",), "identity_state": ("d12",), "unitary_h": ("d12",),
}


def _raw_log_tail(id: str, alpha: float, p: dict) -> float:
    a2 = alpha * alpha
    if id in ("thm6", "thm7", "thm9", "prop4", "cor3"):
        d, m, k = p["d"], p["m"], p["k"]
        if not 1 <= k <= m:
            raise ValueError(f"k={k} out of range for m={m}")
        dm = _exp(m * math.log(d))
        lc = log_comb(m, k)
    if id in ("thm4", "thm5", "thm6", "thm7", "thm9"):
        net = 2 * p["d_C"] * math.log(10.0 / alpha)
    if id == "thm2" or id == "prop3":
        return -p["d12"] * a2 / 16.0
    if id == "thm4":
        return LN2 + net - p["d12"] * a2 / (72 * PI3 * LN2)
    if id == "thm5":
        return net - p["d12"] * a2 / 256.0
    if id == "thm6":
        return LN2 + lc + net - dm * a2 / (72 * PI3 * LN2)
    if id in ("thm7", "thm9"):
        return lc + net - dm * a2 / 256.0
    if id == "prop4":
        return lc - dm * a2 / 16.0
    if id == "cor3":
        return LN2 + lc - dm * a2 / (18 * PI3 * LN2)
    if id == "levy":
        return LN2 - 2 * p["d"] * a2 / (9 * PI3 * LN2 * p["kappa"] ** 2)
    if id == "grassmann":
        return -p["d12"] * a2 / (2 * p["kappa"] ** 2)
    if id == "su":
        return -p["d"] * a2 / (4 * p["kappa"] ** 2)
    if id == "pair":
        return math.log(4.0) - p["d12"] * a2 / (144 * math.pi**2 * LN2)
    if id == "identity_state":
        return LN2 - p["d12"] * a2 / (18 * PI3 * LN2)
    if id == "unitary_h":
        return -p["d12"] * a2 / 64.0
    raise ValueError(f"unknown tail id {id!r}")


def tail_bound(id: str, alpha: float, clamp: bool = True, **params) -> float:
    """Natural log of a concentration-bound right-hand side.

    With clamp=True (default) the result is min(0, ln RHS), i.e. the log of
    the probability bound min(1, RHS).  clamp=False returns ln RHS itself.
    """
    if id not in TAIL_PARAMS:
        raise ValueError(f"unknown tail id {id!r}; choose from {TAIL_IDS}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    missing = [k for k in TAIL_PARAMS[id] if k not in params]
    if missing:
        raise ValueError(f"tail {id!r} needs parameters {missing}")
    val = _raw_log_tail(id, float(alpha), params)
    return min(0.0, val) if clamp else val


def tail_probability(id: str, alpha: float, **params) -> float:
    return math.exp(tail_bound(id, alpha, clamp=True, **params))


# ---------------------------------------------------------------- admissible d_C


def dc_max(id: str, alpha: float, **p) -> float:
    """Largest code dimension for which a concentration argument is non-vacuous."""
    if not 0 < alpha < 10:
        raise ValueError(f"alpha must lie in (0, 10), got {alpha}")
    lg = math.log(10.0 / alpha)
    a2 = alpha * alpha
    if id == "bipartite_mixed":
        return (p["d12"] * a2 / (72 * PI3 * LN2) - LN2) / (2 * lg)
    if id == "bipartite_projector":
        return p["d12"] * a2 / (512 * lg)
    if id == "multipartite_identity":
        d, m = p["d"], p["m"]
        return (d**m * a2 / (72 * PI3 * LN2) - LN2 * (m + 1)) / (2 * lg)
    if id == "random_code":
        d, m, k = p["d"], p["m"], p["k"]
        return (d**m * a2 / 256.0 - LN2 * m * binary_entropy(k / m)) / (2 * lg)
    raise ValueError(f"unknown d_C bound {id!r}")


# ---------------------------------------------------------------- masking thresholds


def _mask_terms(case: int, m: int, d: float, d_C: float, alpha: float | None, zeta: float | None):
    """(ln of the exponential term, remaining positive terms) so that
    f(m) = (exp(ln_e) - rest) / (m ln 2)."""
    c = 72 * PI3 * LN2
    if case == 1:
        ln_e = m * math.log(d) + 2 * math.log(alpha) - math.log(c)
        rest = 2 * d_C * math.log(10.0 / alpha) + LN2
    elif case == 2:
        ln_e = m * (zeta + 0.5) * math.log(d) - math.log(c)
        rest = 2 * d_C * math.log(10.0) - m * (zeta - 0.5) * d_C * math.log(d) + LN2
    elif case == 3:
        ln_e = 2 * zeta * m * math.log(d) - math.log(c)
        rest = 2 * d_C * math.log(10.0) - 2 * m * (zeta - 0.5) * d_C * math.log(d) + LN2
    else:
        raise ValueError(f"case must be 1, 2 or 3, got {case}")
    return ln_e, rest


def mask_f(case: int, m: float, d: float, d_C: float, alpha: float | None = None, zeta: float | None = None) -> float:
    """f_case(m): exceeds 1 once a masking subspace of dimension d_C is admissible."""
    ln_e, rest = _mask_terms(case, m, d, d_C, alpha, zeta)
    e = _exp(ln_e)
    return (e - rest) / (LN2 * m)


def _mask_ok(case, m, d, d_C, alpha, zeta) -> bool:
    # f(m) >= 1  <=>  exp(ln_e) >= rest + m ln 2, compared in log space
    ln_e, rest = _mask_terms(case, m, d, d_C, alpha, zeta)
    return ln_e >= math.log(rest + LN2 * m)


def _check_mask_params(case, alpha, zeta):
    if case == 1:
        if alpha is None or not 0 < alpha < 1:
            raise ValueError("case 1 needs alpha in (0, 1)")
    elif case in (2, 3):
        if zeta is None or not 0 < zeta < 0.5:
            raise ValueError(f"case {case} needs zeta in (0, 1/2)")
    else:
        raise ValueError(f"case must be 1, 2 or 3, got {case}")


def first_true(pred: Callable[[int], bool], cap: int = M_CAP) -> int:
    """Smallest m in [1, cap] with pred(m), assuming pred is eventually true
    and stays true (doubling then bisection)."""
    if pred(1):
        return 1
    lo, hi = 1, 2
    while not pred(hi):
        lo = hi
        if hi >= cap:
            raise ThresholdNotFound(f"no threshold found up to m={cap}")
        hi = min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def mask_threshold(case: int, d: int = 2, d_C: float | None = None, l: float | None = None,
                   alpha: float | None = None, zeta: float | None = None, cap: int = M_CAP):
    """Return (f, m_star) where m_star = min{m >= 1 : f(m) >= 1}.

    d_C may be given directly or as d_C = d^l.
    """
    _check_mask_params(case, alpha, zeta)
    if d_C is None:
        if l is None:
            raise ValueError("give d_C or l")
        d_C = float(d) ** l
    f = lambda m: mask_f(case, m, d, d_C, alpha, zeta)
    m_star = first_true(lambda m: _mask_ok(case, m, d, d_C, alpha, zeta), cap)
    return f, m_star


# ---------------------------------------------------------------- AQECC thresholds


@dataclass(frozen=True)
class AqeccThreshold:
    m_star: int
    code_rate: float
    coefficient: float
    T1: Callable[[int], float]
    T2: Callable[[int], float]

    def __iter__(self):
        return iter((self.m_star, self.code_rate, self.T1, self.T2))


def aqecc_alpha(case: str, m: float, d: int, l: float, gamma: float, eta0: float | None = None,
                a: float | None = None) -> float:
    """alpha(m) implied by a target QEC inaccuracy, with k = gamma * m."""
    d_C = float(d) ** l
    k = gamma * m
    u = u_bound(d, k, m, d_C) if d_C > 1 else 0.0
    if case == "fixed_eta":
        return eta0 * eta0 / d_C - u
    return math.exp(2 * a * (gamma - 0.5) * m * math.log(d)) / d_C - u


def aqecc_threshold(case: str, d: int = 2, l: float = 1, gamma: float = 0.1, eta0: float | None = None,
                    a: float | None = None, cap: int = M_CAP) -> AqeccThreshold:
    """Smallest m with m > T1(m), m > T2(m) and alpha(m) > 0."""
    if not 0 < gamma < 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2), got {gamma}")
    logd = math.log(d)
    if case == "fixed_eta":
        if eta0 is None or not 0 < eta0 < 1:
            raise ValueError("fixed_eta needs eta0 in (0, 1)")
        lg_eta = math.log(eta0) / logd
        t1 = lambda m: 2.0 / (1 - 2 * gamma) * l - 4.0 / (1 - 2 * gamma) * lg_eta
        t2_head = lambda m: 2 * l + math.log(256.0 / eta0**4) / logd
        coeff = max(2.0 / (1 - 2 * gamma), 3.0)
    elif case == "decaying_eta":
        if a is None or not 0 < a < 0.5:
            raise ValueError("decaying_eta needs a in (0, 1/2)")
        t1 = lambda m: l / ((1 - 2 * a) * (0.5 - gamma))
        t2_head = lambda m: 2 * l + math.log(256.0) / logd - 4 * a * (gamma - 0.5) * m
        coeff = max(1.0 / ((1 - 2 * a) * (0.5 - gamma)), 3.0)
    else:
        raise ValueError(f"case must be 'fixed_eta' or 'decaying_eta', got {case!r}")
    d_C = float(d) ** l

    def alpha(m):
        return aqecc_alpha(case, m, d, l, gamma, eta0, a)

    def t2(m):
        al = alpha(m)
        if al <= 0:
            return math.inf
        return t2_head(m) + math.log(LN2 * m + 2 * d_C * math.log(10.0 / al)) / logd

    for m in range(1, cap + 1):
        if alpha(m) > 0 and m > t1(m) and m > t2(m):
            return AqeccThreshold(m, l / m, coeff, t1, t2)
    if case == "fixed_eta":
        hint = f"gamma < 1/2 + (2 log_d eta0 - l)/m"
    else:
        hint = f"gamma < 1/2 - l/(m (1 - 2a))"
    raise Infeasible(f"no admissible m <= {cap} for gamma={gamma}; alpha > 0 requires {hint}")


# ---------------------------------------------------------------- registry for the CLI


def fit_slope(xs, ys) -> tuple[float, float]:
    """Least-squares slope and intercept."""
    slope, icpt = np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)
    return float(slope), float(icpt)
