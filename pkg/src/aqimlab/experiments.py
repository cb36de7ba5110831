"""Named, seeded Monte Carlo experiments comparing estimates with closed forms.

Each experiment returns a list of ExperimentRecord.  Verdicts follow fixed
rules: equalities pass when |empirical - analytic| <= 5 SE, upper bounds when
empirical <= bound + 5 SE, lower bounds when empirical >= bound - 5 SE.
Deterministic scans (thresholds) use a relative tolerance stated in `extra`.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import stats

from . import closedform as cf
from .haar import (
    RngStream,
    haar_state_vectors,
    overlap_pair_vectors,
    partitioned_sampling,
    random_isometry_columns,
    rows_per_block,
)
from .linalg import PartitionSpec, reduce_pure_batch, trace_distance_batch
from .merit import gmw_qk_batch, k_uniform_defects, qec_interval
from .haar import Isometry

EQUAL = "equal_within_tol"
RESPECTED = "bound_respected"
VIOLATED = "bound_violated"
INFO = "informational"

N_SE = 5.0
_ABS_TOL = 1e-12


@dataclass
class ExperimentRecord:
    name: str
    params: dict
    seed: int
    samples: int
    empirical: float
    se: float
    analytic: float | None
    verdict: str
    wall_time_ms: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def verdict_equal(emp, se, analytic, n_se=N_SE):
    return EQUAL if abs(emp - analytic) <= n_se * se + _ABS_TOL else VIOLATED


def verdict_upper(emp, se, bound, n_se=N_SE):
    return RESPECTED if emp <= bound + n_se * se + _ABS_TOL else VIOLATED


def verdict_lower(emp, se, bound, n_se=N_SE):
    return RESPECTED if emp >= bound - n_se * se - _ABS_TOL else VIOLATED


def verdict_relative(value, target, tol):
    return EQUAL if abs(value - target) <= tol * abs(target) else VIOLATED


def mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, float)
    n = x.shape[0]
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(x.mean()), se


def freq_se(hits: np.ndarray) -> tuple[float, float]:
    n = len(hits)
    p = float(np.mean(hits))
    return p, math.sqrt(p * (1 - p) / n)


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def _record(name, params, seed, samples, empirical, se, analytic, verdict, **extra):
    return ExperimentRecord(
        name=name,
        params=_clean(dict(params)),
        seed=int(seed),
        samples=int(samples),
        empirical=float(empirical),
        se=float(se),
        analytic=None if analytic is None else float(analytic),
        verdict=verdict,
        extra=_clean(extra),
    )


# ---------------------------------------------------------------- sampling helpers


def _blocked(gen, count, row_entries, fn):
    block = rows_per_block(row_entries)
    out = []
    done = 0
    while done < count:
        c = min(block, count - done)
        out.append(np.asarray(fn(gen, c)))
        done += c
    return np.concatenate(out, axis=0)


def sample_stat(stream: RngStream, n: int, workers: int, row_entries: int, fn):
    """Evaluate fn(gen, count) -> (count, ...) over n draws, blocked and split."""
    return partitioned_sampling(stream, n, workers, lambda g, c: _blocked(g, c, row_entries, fn))


def per_subspace(stream: RngStream, outer: int, workers: int, D: int, d_C: int, fn):
    """Stack fn(cols, gen) over `outer` random code spaces."""
    def draw(gen, count):
        return np.array([np.atleast_1d(fn(random_isometry_columns(D, d_C, gen), gen))
                         for _ in range(count)], dtype=float)
    return partitioned_sampling(stream, outer, workers, draw)


def dist_to_mixed(psis, dims, axes):
    red = reduce_pure_batch(psis, dims, axes)
    d = red.shape[-1]
    return trace_distance_batch(red, np.eye(d) / d)


def code_reduction(cols, dims, axes):
    """reduce(V V^dagger / d_C) for an isometry given by its columns."""
    return reduce_pure_batch(cols.T, dims, axes).mean(axis=0)


def pair_distances_in_code(cols, dims, gen, inner, parties=((0,), (1,))):
    """Mean D(psi_X, phi_X) over `inner` independent code-state pairs."""
    d_C = cols.shape[1]
    psi = haar_state_vectors(d_C, inner, gen) @ cols.T
    phi = haar_state_vectors(d_C, inner, gen) @ cols.T
    return [trace_distance_batch(reduce_pure_batch(psi, dims, ax), reduce_pure_batch(phi, dims, ax)).mean()
            for ax in parties]


# ---------------------------------------------------------------- experiments


def exp_hs2_identities(p, stream, workers):
    d1, d2, d_C, n = p["d1"], p["d2"], p["d_C"], p["samples"]
    dims = (d1, d2)
    D = d1 * d2

    def state_vs_mixed(gen, c):
        red = reduce_pure_batch(haar_state_vectors(D, c, gen), dims, (0,))
        return np.sum(np.abs(red) ** 2, axis=(1, 2)) - 1.0 / d1

    def code_terms(gen, c):
        cols = random_isometry_columns(D, d_C, gen, c)
        phi = haar_state_vectors(d_C, c, gen)
        psi = np.einsum("nij,nj->ni", cols, phi)
        red = reduce_pure_batch(psi, dims, (0,))
        t = cols.reshape(c, d1, d2, d_C)
        proj = np.einsum("naxc,nbxc->nab", t, t.conj()) / d_C
        q2 = np.sum(np.abs(red - proj) ** 2, axis=(1, 2))
        q3 = np.sum(np.abs(proj - np.eye(d1) / d1) ** 2, axis=(1, 2))
        return np.stack([q2, q3], axis=1)

    q1 = sample_stat(stream.child(0), n, workers, D, state_vs_mixed)
    q23 = sample_stat(stream.child(1), n, workers, D * (d_C + 1), code_terms)
    out = []
    for ident, x in (("hs2_state_vs_mixed", q1), ("hs2_state_vs_projector", q23[:, 0]),
                     ("hs2_projector_vs_mixed", q23[:, 1])):
        emp, se = mean_se(x)
        an = cf.expectation_identity(ident, d1, d2, d_C)
        out.append(_record("exp-hs2-identities", {**p, "identity": ident}, 0, n, emp, se, an,
                           verdict_equal(emp, se, an)))
    return out


def exp_prop2_ratio(p, stream, workers):
    d1, d2, d_C = p["d1"], p["d2"], p["d_C"]
    outer, inner, nfull = p["outer"], p["inner"], p["full_samples"]
    dims = (d1, d2)
    D = d1 * d2
    nested = per_subspace(stream.child(0), outer, workers, D, d_C,
                          lambda cols, gen: pair_distances_in_code(cols, dims, gen, inner))

    def full_pairs(gen, c):
        psi = haar_state_vectors(D, c, gen)
        phi = haar_state_vectors(D, c, gen)
        return np.stack([trace_distance_batch(reduce_pure_batch(psi, dims, ax), reduce_pure_batch(phi, dims, ax))
                         for ax in ((0,), (1,))], axis=1)

    full = sample_stat(stream.child(1), nfull, workers, 2 * D, full_pairs)
    an = cf.ratio_factor(d_C, D)
    out = []
    for j, party in enumerate(("B1", "B2")):
        m_sub, se_sub = mean_se(nested[:, j])
        m_full, se_full = mean_se(full[:, j])
        ratio = m_sub / m_full
        se = abs(ratio) * math.sqrt((se_sub / m_sub) ** 2 + (se_full / m_full) ** 2)
        out.append(_record("exp-prop2-ratio", {**p, "party": party}, 0, outer * inner + nfull, ratio, se, an,
                           verdict_equal(ratio, se, an),
                           subspace_mean=m_sub, subspace_se=se_sub, full_mean=m_full, full_se=se_full))
    return out


def exp_thm1_tradeoff(p, stream, workers):
    d1, d2, d_C = p["d1"], p["d2"], p["d_C"]
    outer, inner = p["outer"], p["inner"]
    dims = (d1, d2)
    D = d1 * d2
    vals = per_subspace(stream.child(0), outer, workers, D, d_C,
                        lambda cols, gen: pair_distances_in_code(cols, dims, gen, inner))
    w = cf.lower_bound_w(d_C, D)
    sums = vals[:, 0] + vals[:, 1]
    emp, se = mean_se(sums)
    maxes = vals.max(axis=1)
    out = [
        _record("exp-thm1-tradeoff", {**p, "quantity": "mean_sum"}, 0, outer * inner, emp, se, 2 * w,
                verdict_lower(emp, se, 2 * w), mean_B1=vals[:, 0].mean(), mean_B2=vals[:, 1].mean()),
        _record("exp-thm1-tradeoff", {**p, "quantity": "min_max_party"}, 0, outer * inner,
                float(maxes.min()), 0.0, w,
                RESPECTED if maxes.min() >= w - p["slack"] else VIOLATED,
                slack=p["slack"], subspaces=outer),
    ]
    for i, d2s in enumerate(p["sweep_d2"]):
        dims_s = (d1, d2s)
        Ds = d1 * d2s

        def full_pairs(gen, c, dims_s=dims_s, Ds=Ds):
            psi = haar_state_vectors(Ds, c, gen)
            phi = haar_state_vectors(Ds, c, gen)
            return np.stack([trace_distance_batch(reduce_pure_batch(psi, dims_s, ax),
                                                  reduce_pure_batch(phi, dims_s, ax))
                             for ax in ((0,), (1,))], axis=1)

        x = sample_stat(stream.child(10 + i), p["sweep_samples"], workers, 2 * Ds, full_pairs)
        m1, s1 = mean_se(x[:, 0])
        m2, s2 = mean_se(x[:, 1])
        tot, se_tot = mean_se(x.sum(axis=1))
        out.append(_record("exp-thm1-tradeoff", {**p, "quantity": "full_space_sum", "sweep_point_d2": d2s}, 0,
                           p["sweep_samples"], tot, se_tot, None, INFO,
                           V_B1=m1, V_B1_se=s1, V_B2=m2, V_B2_se=s2))
    return out


def _lemma_third_point(d1, d2, n, stream, workers):
    dims = (d1, d2)

    def fn(gen, c):
        psi = haar_state_vectors(d1 * d2, c, gen)
        return dist_to_mixed(psi, dims, (0,)) + dist_to_mixed(psi, dims, (1,))

    return mean_se(sample_stat(stream, n, workers, d1 * d2, fn))


def exp_lemma_third(p, stream, workers):
    if p["grid_max"] >= 2:
        pts = [(a, b) for a in range(2, p["grid_max"] + 1) for b in range(a, p["grid_max"] + 1)]
    else:
        pts = [(p["d1"], p["d2"])]
    out = []
    for i, (d1, d2) in enumerate(pts):
        emp, se = _lemma_third_point(d1, d2, p["samples"], stream.child(i), workers)
        lo, hi = min(d1, d2), max(d1, d2)
        closed = cf.avg_distance_bounds("lb_identity_B1", lo, hi) + cf.avg_distance_bounds("lb_identity_B2", lo, hi)
        out.append(_record("exp-lemma-third", {**p, "d1": d1, "d2": d2}, 0, p["samples"], emp, se, 1.0 / 3.0,
                           verdict_lower(emp, se, 1.0 / 3.0), closed_form_lower_bound=closed))
    return out


def _code_lambda_terms(cols, dims, gen, inner):
    """(mean_psi D(psi_B1, Pi_C^(B1)), D(Pi_C^(B1), 1/d1)) for one code space."""
    proj = code_reduction(cols, dims, (0,))
    psi = haar_state_vectors(cols.shape[1], inner, gen) @ cols.T
    lam = trace_distance_batch(reduce_pure_batch(psi, dims, (0,)), proj).mean()
    d1 = dims[0]
    dev = trace_distance_batch(proj, np.eye(d1) / d1)
    return [lam, dev]


def exp_r_s_t_bounds(p, stream, workers):
    d1, d_C = p["d1"], p["d_C"]
    outer, inner, nfull = p["outer"], p["inner"], p["full_samples"]
    out = []
    for i, d2 in enumerate(p["d2_list"]):
        dims = (d1, d2)
        D = d1 * d2
        x = sample_stat(stream.child(2 * i), nfull, workers, D,
                        lambda gen, c: dist_to_mixed(haar_state_vectors(D, c, gen), dims, (0,)))
        emp, se = mean_se(x)
        r = cf.r_bound(d1, d2)
        base = {**p, "d2": d2}
        out.append(_record("exp-r-s-t-bounds", {**base, "quantity": "lambda_mixed_avg_full", "bound": "r"}, 0,
                           nfull, emp, se, r, verdict_upper(emp, se, r)))
        vals = per_subspace(stream.child(2 * i + 1), outer, workers, D, d_C,
                            lambda cols, gen: _code_lambda_terms(cols, dims, gen, inner))
        emp, se = mean_se(vals[:, 0])
        s = cf.s_bound(d_C, d1, d2)
        out.append(_record("exp-r-s-t-bounds", {**base, "quantity": "lambda_avg_code", "bound": "s"}, 0,
                           outer * inner, emp, se, s, verdict_upper(emp, se, s)))
        emp, se = mean_se(vals[:, 1])
        t = cf.t_bound(d_C, d1, d2)
        out.append(_record("exp-r-s-t-bounds", {**base, "quantity": "projector_deviation", "bound": "t"}, 0,
                           outer, emp, se, t, verdict_upper(emp, se, t)))
    return out


def exp_rmt(p, stream, workers):
    d1, d_C = p["d1"], p["d_C"]
    outer, inner = p["outer"], p["inner"]
    lo, hi = p["ratio_low"], p["ratio_high"]
    out = []
    for i, d2 in enumerate(p["d2_list"]):
        dims = (d1, d2)
        vals = per_subspace(stream.child(i), outer, workers, d1 * d2, d_C,
                            lambda cols, gen: _code_lambda_terms(cols, dims, gen, inner))
        emp, se = mean_se(vals[:, 0])
        approx = cf.rmt_factor(d_C, d1, d2)
        s = cf.s_bound(d_C, d1, d2)
        ratio, rse = emp / approx, se / approx
        ok = lo - N_SE * rse <= ratio <= hi + N_SE * rse
        out.append(_record("exp-rmt", {**p, "d2": d2}, 0, outer * inner, ratio, rse, 1.0,
                           RESPECTED if ok else VIOLATED,
                           accepted_ratio_range=[lo, hi], lambda_avg=emp, lambda_avg_se=se,
                           approximation=approx, s=s, ratio_to_s=emp / s,
                           ratio_to_semicircle_mean=emp / (8.0 / (3.0 * math.pi) * s)))
    return out


def exp_tail_check(p, stream, workers):
    d1, d2, d_C = p["d1"], p["d2"], p["d_C"]
    dims = (d1, d2)
    D = d1 * d2
    n, outer, inner = p["samples"], p["outer"], p["inner"]
    r = cf.r_bound(d1, d2)
    t = cf.t_bound(d_C, d1, d2)
    w = cf.lower_bound_w(d_C, D)
    R = sample_stat(stream.child(0), n, workers, D,
                    lambda gen, c: dist_to_mixed(haar_state_vectors(D, c, gen), dims, (0,)))
    dev = per_subspace(stream.child(1), n, workers, D, d_C,
                       lambda cols, gen: trace_distance_batch(code_reduction(cols, dims, (0,)), np.eye(d1) / d1))[:, 0]
    var = per_subspace(stream.child(2), outer, workers, D, d_C,
                       lambda cols, gen: pair_distances_in_code(cols, dims, gen, inner)).max(axis=1)
    out = []
    for alpha in p["alphas"]:
        events = (
            ("identity_state", "D(psi_B1, 1/d1) >= r + alpha", R >= r + alpha, n,
             cf.tail_probability("identity_state", alpha, d12=D)),
            ("prop3", "D(Pi_C^(B1), 1/d1) > t + alpha", dev > t + alpha, n,
             cf.tail_probability("prop3", alpha, d12=D)),
            ("thm2", "max_X V^A_X(H_C) < w - alpha", var < w - alpha, outer,
             cf.tail_probability("thm2", alpha, d12=D)),
        )
        for tail_id, desc, hits, cnt, bound in events:
            freq, se = freq_se(hits)
            out.append(_record("exp-tail-check", {**p, "alpha": alpha, "tail": tail_id}, 0, cnt, freq, se, bound,
                               verdict_upper(freq, se, bound), event=desc))
    return out


def overlap_cdf_stated(x, d_C):
    """CDF of the density proportional to (1 - a^2)^(d_C - 3/2) on [0, 1]."""
    from scipy.special import betainc
    return betainc(0.5, d_C - 0.5, np.clip(np.asarray(x, float), 0, 1) ** 2)


def overlap_cdf_beta(x, d_C):
    """CDF of |<psi|phi>| when |<psi|phi>|^2 ~ Beta(1, d_C - 1)."""
    return 1.0 - (1.0 - np.clip(np.asarray(x, float), 0, 1) ** 2) ** (d_C - 1)


def overlap_pdf_stated(x, d_C):
    from scipy.special import beta as beta_fn
    x = np.asarray(x, float)
    return 2.0 * (1 - x * x) ** (d_C - 1.5) / beta_fn(0.5, d_C - 0.5)


def overlap_pdf_beta(x, d_C):
    x = np.asarray(x, float)
    return 2.0 * (d_C - 1) * x * (1 - x * x) ** (d_C - 2)


def exp_overlap_law(p, stream, workers):
    d1, d2, d_C, n = p["d1"], p["d2"], p["d_C"], p["samples"]
    dims = (d1, d2)
    D = d1 * d2

    def dist_at(a):
        def fn(gen, c):
            psi, phi = overlap_pair_vectors(D, a, c, gen)
            return trace_distance_batch(reduce_pure_batch(psi, dims, (0,)), reduce_pure_batch(phi, dims, (0,)))
        return fn

    e0, se0 = mean_se(sample_stat(stream.child(0), n, workers, 3 * D, dist_at(0.0)))
    grid = [p["a"]] if p["a"] is not None else list(p["a_grid"])
    out = []
    for i, a in enumerate(grid):
        emp, se = mean_se(sample_stat(stream.child(1 + i), n, workers, 3 * D, dist_at(a)))
        fac = math.sqrt(max(1 - a * a, 0.0))
        an = fac * e0
        comb_se = math.sqrt(se * se + (fac * se0) ** 2)
        out.append(_record("exp-overlap-law", {**p, "a": a, "quantity": "fixed_overlap_mean"}, 0, 2 * n, emp,
                           comb_se, an, verdict_equal(emp, comb_se, an), reference_mean=e0, reference_se=se0))
    if p["a"] is not None:
        return out

    # realized overlaps and distances of independent pairs in shared random code spaces
    def free_pairs(gen, c):
        cols = random_isometry_columns(D, d_C, gen, c)
        x = haar_state_vectors(d_C, c, gen)
        y = haar_state_vectors(d_C, c, gen)
        psi = np.einsum("nij,nj->ni", cols, x)
        phi = np.einsum("nij,nj->ni", cols, y)
        ov = np.abs(np.einsum("ni,ni->n", x.conj(), y))
        dist = trace_distance_batch(reduce_pure_batch(psi, dims, (0,)), reduce_pure_batch(phi, dims, (0,)))
        return np.stack([ov, dist], axis=1)

    ks_n = p["ks_samples"]
    fp = sample_stat(stream.child(100), ks_n, workers, D * (d_C + 2), free_pairs)
    ov, dist = fp[:, 0], fp[:, 1]
    ks_stated = stats.kstest(ov, lambda x: overlap_cdf_stated(x, d_C))
    ks_beta = stats.kstest(ov, lambda x: overlap_cdf_beta(x, d_C))
    crit = float(stats.kstwo.ppf(0.99, ks_n))
    counts, edges = np.histogram(ov, bins=p["bins"], range=(0.0, 1.0))
    centers = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    passed = [name for name, ks in (("stated", ks_stated), ("beta", ks_beta)) if ks.statistic < crit]
    out.append(_record("exp-overlap-law", {**p, "quantity": "overlap_density"}, 0, ks_n,
                       float(ks_beta.statistic), 0.0, crit, INFO,
                       ks_stated=float(ks_stated.statistic), ks_stated_pvalue=float(ks_stated.pvalue),
                       ks_beta=float(ks_beta.statistic), ks_beta_pvalue=float(ks_beta.pvalue),
                       ks_critical_1pct=crit, consistent_with=passed,
                       bin_edges=edges, counts=counts,
                       empirical_density=counts / (ks_n * width),
                       density_stated=overlap_pdf_stated(centers, d_C),
                       density_beta=overlap_pdf_beta(centers, d_C)))
    # measure-independent consequence: E[D] over free pairs = E_D(0) * E[sqrt(1 - a^2)]
    emp, se = mean_se(dist)
    fac = (2 * d_C - 2) / (2 * d_C - 1)
    comb_se = math.sqrt(se * se + (fac * se0) ** 2)
    out.append(_record("exp-overlap-law", {**p, "quantity": "free_pair_mean"}, 0, ks_n + n, emp, comb_se,
                       fac * e0, verdict_equal(emp, comb_se, fac * e0),
                       mean_sqrt_one_minus_a2=float(np.mean(np.sqrt(1 - ov**2))), expected_factor=fac))
    return out


def exp_kuniform(p, stream, workers):
    m, d, n, alpha = p["m"], p["d"], p["samples"], p["alpha"]
    dims = (d,) * m
    D = d**m
    out = []
    for i, k in enumerate(p["k_list"]):
        defects = sample_stat(stream.child(i), n, workers, D,
                              lambda gen, c: k_uniform_defects(haar_state_vectors(D, c, gen), dims, k))
        thr = float(d) ** (k - m / 2) + alpha
        freq, se = freq_se(defects > thr)
        ln_raw = cf.tail_bound("cor3", alpha, clamp=False, d=d, m=m, k=k)
        bound = math.exp(min(0.0, ln_raw))
        out.append(_record("exp-kuniform", {**p, "k": k}, 0, n, freq, se, bound, verdict_upper(freq, se, bound),
                           threshold=thr, mean_defect=defects.mean(), max_defect=defects.max(), ln_tail_raw=ln_raw))
    return out


def exp_gmw(p, stream, workers):
    m, d, k, n = p["m"], p["d"], p["k"], p["samples"]
    dims = (d,) * m
    D = d**m
    q = sample_stat(stream.child(0), n, workers, D, lambda gen, c: gmw_qk_batch(haar_state_vectors(D, c, gen), dims, k))
    qb = 1.0 - (4.0 * float(d) ** (2 * k - m) + float(d) ** (-k))
    frac = float(np.mean(q >= qb))
    need = p["required_fraction"]
    return [_record("exp-gmw", p, 0, n, frac, 0.0, need, RESPECTED if frac >= need else VIOLATED,
                    q_lower_bound=qb, mean_q=q.mean(), min_q=q.min())]


def exp_thresholds(p, stream, workers):
    d = p["d"]
    cases = p["cases"]
    out = []
    if "mask1" in cases:
        ls = list(range(p["l_min"], p["l_max"] + 1))
        ms = [cf.mask_threshold(1, d, l=l, alpha=p["alpha"])[1] for l in ls]
        slope, icpt = cf.fit_slope(ls, ms)
        resid = float(np.max(np.abs(np.asarray(ms) - (slope * np.asarray(ls) + icpt))))
        out.append(_record("exp-thresholds", {**p, "case": "mask1"}, 0, 0, resid, 0.0, 1.0,
                           RESPECTED if resid <= 1.0 else VIOLATED,
                           rule="max residual of affine fit <= 1", slope=slope, intercept=icpt,
                           l=ls, m_star=ms))
    for case, key, target in ((2, "mask2", 1.0 / (p["zeta"] + 0.5)), (3, "mask3", 1.0 / (2 * p["zeta"]))):
        if key not in cases:
            continue
        target *= math.log(2) / math.log(d)
        ls = list(range(p["slope_l_min"], p["slope_l_max"] + 1, p["slope_l_step"]))
        ms = [cf.mask_threshold(case, d, l=l, zeta=p["zeta"])[1] for l in ls]
        slope, icpt = cf.fit_slope(ls, ms)
        out.append(_record("exp-thresholds", {**p, "case": key}, 0, 0, slope, 0.0, target,
                           verdict_relative(slope, target, p["mask_tol"]),
                           rule=f"relative difference <= {p['mask_tol']}", intercept=icpt, l=ls, m_star=ms))
    if "aqecc_fixed" in cases:
        ls = list(range(p["rate_l"] - p["rate_halfwidth"], p["rate_l"] + p["rate_halfwidth"] + 1))
        for g in p["gammas"]:
            res = [cf.aqecc_threshold("fixed_eta", d, l, g, eta0=p["eta0"]) for l in ls]
            ms = [r.m_star for r in res]
            slope, _ = cf.fit_slope(ls, ms)
            rate = 1.0 / slope
            target = 1.0 / 3.0 if g <= 1.0 / 6.0 else (1 - 2 * g) / 2
            centre = res[len(ls) // 2]
            out.append(_record("exp-thresholds", {**p, "case": "aqecc_fixed", "gamma": g}, 0, 0, rate, 0.0, target,
                               verdict_relative(rate, target, p["rate_tol"]),
                               rule=f"marginal rate 1/slope within {p['rate_tol']} relative",
                               direct_rate=centre.code_rate, m_star_at_rate_l=centre.m_star,
                               l=ls, m_star=ms))
    if "aqecc_decaying" in cases:
        ls = list(range(p["slope_l_min"], p["slope_l_max"] + 1, p["slope_l_step"]))
        a = p["a"]
        for g in p["decay_gammas"]:
            res = [cf.aqecc_threshold("decaying_eta", d, l, g, a=a) for l in ls]
            ms = [r.m_star for r in res]
            slope, _ = cf.fit_slope(ls, ms)
            c = res[0].coefficient
            out.append(_record("exp-thresholds", {**p, "case": "aqecc_decaying", "gamma": g}, 0, 0, slope, 0.0, c,
                               verdict_relative(slope, c, p["rate_tol"]),
                               rule=f"relative difference <= {p['rate_tol']}",
                               coefficient_with_m_dependent_term=max(c, 3.0 / (1 - 4 * a * (0.5 - g))),
                               l=ls, m_star=ms))
    return out


def exp_aqecc_interval(p, stream, workers):
    m, d, k, d_C = p["m"], p["d"], p["k"], p["d_C"]
    part = PartitionSpec((d,) * m)
    out = []
    for i in range(p["codes"]):
        s = stream.child(i)
        v = Isometry(random_isometry_columns(part.total_dim, d_C, s.child(0).generator), part)
        eta, lo, hi = qec_interval(v, k, p["samples"], s.child(1), workers)
        u = cf.u_bound(d, k, m, d_C)
        out.append(_record("exp-aqecc-interval", {**p, "code": i}, 0, p["samples"], eta.value, 0.0, hi,
                           RESPECTED if 0.0 <= lo <= hi else VIOLATED,
                           eta_kind=eta.kind, lower=lo, upper=hi, u=u))
    return out


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class Param:
    kind: str  # int, float, str, int_list, float_list, str_list, opt_float
    default: Any
    help: str = ""


@dataclass(frozen=True)
class Experiment:
    name: str
    summary: str
    schema: dict
    runner: Callable

    def describe(self) -> dict:
        return {"name": self.name, "summary": self.summary,
                "params": {k: {"type": v.kind, "default": _clean(v.default), "help": v.help}
                           for k, v in self.schema.items()}}


def _P(kind, default, help=""):
    return Param(kind, default, help)


_NESTED = {"outer": _P("int", 200, "random code spaces"), "inner": _P("int", 200, "state samples per code space")}

REGISTRY: dict[str, Experiment] = {}


def _register(name, summary, schema, runner):
    REGISTRY[name] = Experiment(name, summary, schema, runner)


_register("exp-hs2-identities", "Squared 2-norm expectations versus exact identities",
          {"d1": _P("int", 2), "d2": _P("int", 2), "d_C": _P("int", 2), "samples": _P("int", 20000)},
          exp_hs2_identities)
_register("exp-prop2-ratio", "Code-space average variation over full-space average variation",
          {"d1": _P("int", 2), "d2": _P("int", 4), "d_C": _P("int", 3), **_NESTED,
           "full_samples": _P("int", 40000)}, exp_prop2_ratio)
_register("exp-thm1-tradeoff", "Average variations of both parties versus the lower bound w",
          {"d1": _P("int", 10), "d2": _P("int", 10), "d_C": _P("int", 10), **_NESTED,
           "slack": _P("float", 0.05), "sweep_d2": _P("int_list", []), "sweep_samples": _P("int", 4000)},
          exp_thm1_tradeoff)
_register("exp-lemma-third", "Sum of distances to the maximally mixed state versus 1/3",
          {"d1": _P("int", 2), "d2": _P("int", 2), "samples": _P("int", 2000),
           "grid_max": _P("int", 0, "if >= 2, scan 2 <= d1 <= d2 <= grid_max")}, exp_lemma_third)
_register("exp-r-s-t-bounds", "Bipartite averages versus the bounds r, s and t over a d2 sweep",
          {"d1": _P("int", 10), "d_C": _P("int", 10), "d2_list": _P("int_list", [10, 20, 40, 80, 160]),
           **_NESTED, "full_samples": _P("int", 4000)}, exp_r_s_t_bounds)
_register("exp-tail-check", "Empirical tail frequencies versus concentration bounds",
          {"d1": _P("int", 4), "d2": _P("int", 4), "d_C": _P("int", 4), "samples": _P("int", 10000),
           "outer": _P("int", 200), "inner": _P("int", 100),
           "alphas": _P("float_list", [0.05, 0.1, 0.2, 0.3])}, exp_tail_check)
_register("exp-overlap-law", "Fixed-overlap distance scaling and the overlap density",
          {"d1": _P("int", 3), "d2": _P("int", 3), "d_C": _P("int", 4), "samples": _P("int", 20000),
           "a_grid": _P("float_list", [0.0, 0.25, 0.5, 0.75, 1.0]), "a": _P("opt_float", None),
           "ks_samples": _P("int", 10000), "bins": _P("int", 20)}, exp_overlap_law)
_register("exp-kuniform", "k-uniform defect of Haar states versus the multipartite tail",
          {"m": _P("int", 10), "d": _P("int", 2), "k_list": _P("int_list", [1, 2]), "samples": _P("int", 500),
           "alpha": _P("float", 0.1)}, exp_kuniform)
_register("exp-gmw", "Generalized Meyer-Wallach measure versus its lower bound",
          {"m": _P("int", 10), "d": _P("int", 2), "k": _P("int", 1), "samples": _P("int", 500),
           "required_fraction": _P("float", 0.99)}, exp_gmw)
_register("exp-rmt", "Code-space inaccuracy versus the random-matrix approximation (4/3pi) s",
          {"d1": _P("int", 10), "d_C": _P("int", 10), "d2_list": _P("int_list", [100, 200, 400]),
           "outer": _P("int", 100), "inner": _P("int", 100),
           "ratio_low": _P("float", 0.5), "ratio_high": _P("float", 1.5)}, exp_rmt)
_register("exp-thresholds", "Threshold scans m*(l) with fitted slopes and code rates",
          {"d": _P("int", 2), "cases": _P("str_list", ["mask1", "mask2", "mask3", "aqecc_fixed", "aqecc_decaying"]),
           "alpha": _P("float", 1e-4), "zeta": _P("float", 0.25),
           "l_min": _P("int", 8), "l_max": _P("int", 24),
           "slope_l_min": _P("int", 20), "slope_l_max": _P("int", 60), "slope_l_step": _P("int", 2),
           "rate_l": _P("int", 30), "rate_halfwidth": _P("int", 5),
           "gammas": _P("float_list", [0.05, 0.1, 1.0 / 6.0, 1.0 / 3.0]), "eta0": _P("float", 1e-3),
           "a": _P("float", 1.0 / 6.0), "decay_gammas": _P("float_list", [0.25, 0.4]),
           "mask_tol": _P("float", 0.10), "rate_tol": _P("float", 0.15)}, exp_thresholds)
_register("exp-aqecc-interval", "Subsystem variance of random codes and its QEC interval",
          {"m": _P("int", 4), "d": _P("int", 2), "k": _P("int", 1), "d_C": _P("int", 2),
           "samples": _P("int", 2000), "codes": _P("int", 5)}, exp_aqecc_interval)


def list_experiments() -> list[dict]:
    return [REGISTRY[k].describe() for k in sorted(REGISTRY)]


def _coerce(kind: str, value):
    if kind == "opt_float":
        if value is None or (isinstance(value, str) and value.lower() in ("", "none")):
            return None
        return float(value)
    if kind in ("int_list", "float_list", "str_list"):
        if isinstance(value, str):
            value = [v for v in value.replace(" ", "").split(",") if v]
        elif not isinstance(value, (list, tuple)):
            value = [value]
        conv = {"int_list": _to_int, "float_list": float, "str_list": str}[kind]
        return [conv(v) for v in value]
    if kind == "int":
        return _to_int(value)
    if kind == "float":
        return float(value)
    if kind == "str":
        return str(value)
    raise ValueError(f"unknown parameter kind {kind}")


def _to_int(v) -> int:
    f = float(v)
    if f != int(f):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(f)


def resolve_params(name: str, params: dict | None) -> dict:
    if name not in REGISTRY:
        raise KeyError(f"unknown experiment {name!r}; known: {sorted(REGISTRY)}")
    schema = REGISTRY[name].schema
    params = dict(params or {})
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {unknown}; accepted: {sorted(schema)}")
    out = {}
    for key, spec in schema.items():
        raw = params.get(key, spec.default)
        try:
            out[key] = _coerce(spec.kind, raw)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"parameter {key!r} of {name}: {exc}") from None
    return out


def run_experiment(name: str, params: dict | None = None, seed: int = 42, workers: int = 1,
                   timing: bool = False) -> list[ExperimentRecord]:
    """Run a registered experiment; deterministic in (name, params, seed, workers).

    wall_time_ms is filled only when timing=True so that repeated runs
    serialize identically.
    """
    p = resolve_params(name, params)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    t0 = time.perf_counter()
    records = REGISTRY[name].runner(p, RngStream(int(seed)), int(workers))
    ms = (time.perf_counter() - t0) * 1000.0 if timing else 0.0
    for r in records:
        r.seed = int(seed)
        r.wall_time_ms = round(ms, 3)
    return records
