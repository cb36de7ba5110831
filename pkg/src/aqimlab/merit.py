"""Masking figures of merit over finite ensembles and sampled subspaces.

Variations V^M / V^A compare reductions of pairs of states, inaccuracies
Lambda^M / Lambda^A compare each reduction to the ensemble-mean reduction, and
the "mixed" variants compare to the maximally mixed state instead.  An integer
`sel_or_k` means "order k": the merit is maximized over every k-party subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, sqrt
from typing import Sequence

import numpy as np

from .haar import (
    Isometry,
    RngStream,
    as_generator,
    haar_state_vectors,
    parallel_map,
    rows_per_block,
    chunk_sizes,
)
from .linalg import (
    DensityMatrix,
    PartitionSpec,
    PureState,
    SubsystemSelector,
    as_selector,
    reduce_pure_batch,
    trace_distance_batch,
)

EXACT = "exact_over_ensemble"
MC_MEAN = "mc_mean"
MC_MAX = "mc_max_lower_estimate"

DEFAULT_SAMPLES = 2000

# canonical merit name -> (family, mode, reference)
MERITS = {
    "lambda_avg": ("lambda", "avg", "mean"),
    "lambda_max": ("lambda", "max", "mean"),
    "lambda_mixed_avg": ("lambda", "avg", "mixed"),
    "lambda_mixed_max": ("lambda", "max", "mixed"),
    "variation_avg": ("variation", "avg", None),
    "variation_max": ("variation", "max", None),
}

_ALIASES = {
    "Λ^A": "lambda_avg", "LA": "lambda_avg", "Lambda^A": "lambda_avg",
    "Λ^M": "lambda_max", "LM": "lambda_max", "Lambda^M": "lambda_max",
    "Λ̃^A": "lambda_mixed_avg", "LtA": "lambda_mixed_avg", "Lambda~^A": "lambda_mixed_avg",
    "Λ̃^M": "lambda_mixed_max", "LtM": "lambda_mixed_max", "Lambda~^M": "lambda_mixed_max",
    "V^A": "variation_avg", "VA": "variation_avg",
    "V^M": "variation_max", "VM": "variation_max",
}


def canonical_merit(name: str) -> str:
    if name in MERITS:
        return name
    if name in _ALIASES:
        return _ALIASES[name]
    raise ValueError(f"unknown merit {name!r}; choose from {sorted(MERITS)}")


@dataclass(frozen=True)
class MeritReport:
    """An estimate of a figure of merit.

    kind is one of exact_over_ensemble, mc_mean or mc_max_lower_estimate.
    Only mc_mean carries a nonzero standard error; a sampled maximum is a
    lower estimate of the supremum it targets.
    """

    value: float
    std_error: float
    kind: str
    samples: int

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True, eq=False)
class StateEnsemble:
    """A finite set of pure states on one partition."""

    states: tuple[PureState, ...]
    provenance: dict | None = None

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValueError("an ensemble needs at least one state")
        part = states[0].partition
        if any(s.partition != part for s in states):
            raise ValueError("all states must share one partition")
        object.__setattr__(self, "states", states)

    @classmethod
    def from_vectors(cls, vectors, dims, normalize: bool = False, provenance=None):
        vs = np.atleast_2d(np.asarray(vectors, dtype=complex))
        return cls(tuple(PureState.from_vector(v, dims, normalize) for v in vs), provenance)

    @classmethod
    def from_isometry(cls, v: Isometry):
        """The columns of V as an ensemble (its mean state is V V^dagger / d_C)."""
        cols = v.columns.T
        return cls(tuple(PureState(c, v.ambient) for c in cols), {"isometry": "columns"})

    @property
    def partition(self) -> PartitionSpec:
        return self.states[0].partition

    def matrix(self) -> np.ndarray:
        return np.stack([s.amplitudes for s in self.states])

    def __len__(self):
        return len(self.states)


def selectors_for(sel_or_k, partition: PartitionSpec) -> list[SubsystemSelector]:
    """All selectors an argument stands for: one subset, or every k-subset."""
    if isinstance(sel_or_k, (int, np.integer)):
        k = int(sel_or_k)
        if not 1 <= k <= partition.m:
            raise ValueError(f"order k={k} out of range [1, {partition.m}]")
        return [SubsystemSelector(tuple(i + 1 for i in s), partition)
                for s in combinations(range(partition.m), k)]
    return [as_selector(sel_or_k, partition)]


def _pairwise_distances(red: np.ndarray) -> np.ndarray:
    n = red.shape[0]
    if n < 2:
        return np.zeros(0)
    i, j = np.triu_indices(n, 1)
    return trace_distance_batch(red[i], red[j])


def ensemble_mean_state(c: StateEnsemble, sel=None) -> DensityMatrix:
    """Sample mean of psi over the ensemble, optionally reduced to `sel`."""
    psis = c.matrix()
    part = c.partition
    if sel is None:
        mean = psis.T @ psis.conj() / len(c)
        mean = 0.5 * (mean + mean.conj().T)
        return DensityMatrix(mean, part)
    s = as_selector(sel, part)
    red = reduce_pure_batch(psis, part.dims, s.axes).mean(axis=0)
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(red, PartitionSpec(s.dims))


def _ensemble_value(c: StateEnsemble, sel_or_k, family: str, mode: str, reference) -> MeritReport:
    if mode not in ("max", "avg"):
        raise ValueError(f"mode must be 'max' or 'avg', got {mode!r}")
    part = c.partition
    psis = c.matrix()
    n = len(c)
    best = 0.0
    for s in selectors_for(sel_or_k, part):
        red = reduce_pure_batch(psis, part.dims, s.axes)
        if family == "variation":
            d = _pairwise_distances(red)
            val = (d.max() if d.size else 0.0) if mode == "max" else 2.0 * d.sum() / (n * n)
        else:
            if reference == "mean":
                ref = red.mean(axis=0)
            elif reference == "mixed":
                ref = np.eye(s.d_S) / s.d_S
            else:
                raise ValueError(f"reference must be 'mean' or 'mixed', got {reference!r}")
            d = trace_distance_batch(red, ref)
            val = d.max() if mode == "max" else d.mean()
        best = max(best, float(val))
    return MeritReport(best, 0.0, EXACT, n)


def variation(c: StateEnsemble, sel_or_k, mode: str = "max") -> MeritReport:
    """V^M (mode='max') or V^A (mode='avg') over a finite ensemble.

    The average runs over all ordered pairs, including a state with itself.
    """
    return _ensemble_value(c, sel_or_k, "variation", mode, None)


def inaccuracy(c: StateEnsemble, sel_or_k, mode: str = "max", reference: str = "mean") -> MeritReport:
    """Lambda^M / Lambda^A (reference='mean') or their maximally-mixed variants."""
    return _ensemble_value(c, sel_or_k, "lambda", mode, reference)


def exact_mask_check(c: StateEnsemble, k: int, tol: float = 1e-9) -> bool:
    return variation(c, int(k), "max").value <= tol


# ---------------------------------------------------------------- single states


def _check_k(k: int, m: int):
    if not 1 <= k <= m:
        raise ValueError(f"k={k} out of range [1, {m}]")


def k_uniform_defects(psis: np.ndarray, dims: Sequence[int], k: int) -> np.ndarray:
    """max_{|S|=k} D(psi_S, 1/d_S) for each row of psis."""
    dims = tuple(dims)
    _check_k(k, len(dims))
    out = np.zeros(psis.shape[0])
    for axes in combinations(range(len(dims)), k):
        red = reduce_pure_batch(psis, dims, axes)
        d_s = red.shape[-1]
        out = np.maximum(out, trace_distance_batch(red, np.eye(d_s) / d_s))
    return out


def k_uniform_defect(psi: PureState, k: int) -> float:
    return float(k_uniform_defects(psi.amplitudes[None, :], psi.partition.dims, k)[0])


def gmw_qk_batch(psis: np.ndarray, dims: Sequence[int], k: int) -> np.ndarray:
    dims = tuple(dims)
    if len(set(dims)) != 1:
        raise NotImplementedError("the GMW measure needs equal local dimensions")
    m, d = len(dims), dims[0]
    _check_k(k, m)
    total = np.zeros(psis.shape[0])
    for axes in combinations(range(m), k):
        red = reduce_pure_batch(psis, dims, axes)
        total += np.sum(np.abs(red) ** 2, axis=(1, 2))
    mean_purity = total / comb(m, k)
    dk = float(d) ** k
    return dk / (dk - 1.0) * (1.0 - mean_purity)


def gmw_qk(psi: PureState, k: int) -> float:
    """Generalized Meyer-Wallach measure Q_k."""
    q = gmw_qk_batch(psi.amplitudes[None, :], psi.partition.dims, k)[0]
    return float(min(max(q, 0.0), 1.0))


# ---------------------------------------------------------------- subspaces


def code_reductions(v: Isometry, selectors: list[SubsystemSelector]) -> list[np.ndarray]:
    """Exact reduce(V V^dagger / d_C, S) for each selector."""
    cols = v.columns.T
    return [reduce_pure_batch(cols, v.ambient.dims, s.axes).mean(axis=0) for s in selectors]


def _sample_distances(cols, dims, selectors, refs, pair: bool, gen, count):
    """Distances for `count` sampled code states; shape (count, n_selectors)."""
    D, d_C = cols.shape
    out = np.empty((count, len(selectors)))
    block = rows_per_block(D * (2 if pair else 1))
    done = 0
    while done < count:
        c = min(block, count - done)
        psi = haar_state_vectors(d_C, c, gen) @ cols.T
        if pair:
            phi = haar_state_vectors(d_C, c, gen) @ cols.T
        for j, s in enumerate(selectors):
            red = reduce_pure_batch(psi, dims, s.axes)
            other = reduce_pure_batch(phi, dims, s.axes) if pair else refs[j]
            out[done:done + c, j] = trace_distance_batch(red, other)
        done += c
    return out


def subspace_distance_samples(v: Isometry, selectors, merit: str, n_samples: int, rng, workers: int = 1) -> np.ndarray:
    """Per-sample distances (n_samples, n_selectors) behind a subspace merit."""
    family, _, reference = MERITS[canonical_merit(merit)]
    dims = v.ambient.dims
    pair = family == "variation"
    if pair:
        refs = None
    elif reference == "mean":
        refs = code_reductions(v, selectors)
    else:
        refs = [np.eye(s.d_S) / s.d_S for s in selectors]
    cols = v.columns

    def job(arg):
        gen, cnt = arg
        return _sample_distances(cols, dims, selectors, refs, pair, gen, cnt)

    if isinstance(rng, RngStream):
        sizes = chunk_sizes(n_samples, max(1, min(workers, n_samples)))
        jobs = [(s.generator, c) for s, c in zip(rng.split(len(sizes)), sizes)]
    else:
        if workers > 1:
            raise TypeError("splitting work across workers needs an RngStream")
        jobs = [(as_generator(rng), n_samples)]
    return np.concatenate(parallel_map(job, jobs, workers), axis=0)


def summarize_samples(dist: np.ndarray, mode: str) -> MeritReport:
    """Reduce per-sample distances to a report: the max over selectors of
    per-selector means (avg) or the overall sampled maximum (max)."""
    n = dist.shape[0]
    if mode == "avg":
        means = dist.mean(axis=0)
        j = int(np.argmax(means))
        se = float(dist[:, j].std(ddof=1) / sqrt(n))
        return MeritReport(float(means[j]), se, MC_MEAN, n)
    return MeritReport(float(dist.max()), 0.0, MC_MAX, n)


def subspace_merit_estimate(v: Isometry, sel_or_k, merit: str, n_samples: int = DEFAULT_SAMPLES,
                            rng=None, workers: int = 1) -> MeritReport:
    """Monte Carlo estimate of a merit over all pure states of span(V).

    The reference Pi_C^(S) is computed exactly from V.  Average merits
    return mean +/- standard error; maximum merits return the sampled maximum,
    which can only underestimate the true supremum.
    """
    name = canonical_merit(merit)
    family, mode, reference = MERITS[name]
    if mode == "avg" and n_samples < 2:
        raise ValueError("average merits need n_samples >= 2")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    selectors = selectors_for(sel_or_k, v.ambient)
    if v.code_dim == 1 and reference != "mixed":
        # every state of a one-dimensional code equals its mean up to phase
        return MeritReport(0.0, 0.0, MC_MEAN if mode == "avg" else MC_MAX, n_samples)
    dist = subspace_distance_samples(v, selectors, name, n_samples, rng, workers)
    return summarize_samples(dist, mode)


def qec_interval_from_eta(eta: float, d_C: int) -> tuple[float, float]:
    """Two-sided bound [eta/4, sqrt(d_C * eta)] on the QEC inaccuracy."""
    return eta / 4.0, sqrt(d_C * eta)


def qec_interval(v: Isometry, k: int, n_samples: int = DEFAULT_SAMPLES, rng=None, workers: int = 1):
    """Subsystem variance eta (sampled Lambda^M of order k) and its QEC interval.

    eta is a sampled lower estimate, so the returned interval inherits that
    caveat.
    """
    m = v.ambient.m
    if not 1 <= k <= m // 2:
        raise ValueError(f"k={k} must lie in [1, {m // 2}]")
    eta = subspace_merit_estimate(v, int(k), "lambda_max", n_samples, rng, workers)
    lo, hi = qec_interval_from_eta(eta.value, v.code_dim)
    return eta, lo, hi
