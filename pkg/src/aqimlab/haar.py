"""Seeded samplers for Haar-random unitaries, states, subspaces and state pairs."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import MAX_TOTAL_DIM, CapacityError, PartitionSpec, PureState

ISOMETRY_TOL = 1e-10

# keep each sampled block below roughly this many complex entries
_CHUNK_ENTRIES = 1 << 21


@dataclass(frozen=True)
class RngStream:
    """A splittable PCG64 stream identified by (seed, stream_id).

    Children produced by split() extend the spawn key, so every descendant is
    reproducible from the root seed and its position in the split tree.
    """

    seed: int
    stream_id: tuple[int, ...] = ()
    _gen: np.random.Generator = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        sid = self.stream_id
        if isinstance(sid, (int, np.integer)):
            sid = (int(sid),)
        sid = tuple(int(s) for s in sid)
        object.__setattr__(self, "stream_id", sid)
        ss = np.random.SeedSequence(int(self.seed) & ((1 << 64) - 1), spawn_key=sid)
        object.__setattr__(self, "_gen", np.random.Generator(np.random.PCG64(ss)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def split(self, n: int) -> list["RngStream"]:
        return [RngStream(self.seed, self.stream_id + (i,)) for i in range(n)]

    def child(self, i: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id + (int(i),))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot use {type(rng).__name__} as a random source")


def _check_dim(d: int):
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if d > MAX_TOTAL_DIM:
        raise CapacityError(f"dimension {d} exceeds cap {MAX_TOTAL_DIM}")


def ginibre(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian entries with E|z|^2 = 1."""
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)


def _qr_haar(z: np.ndarray) -> np.ndarray:
    # the phase fix makes the QR factor Haar distributed
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    ph = diag / np.abs(diag)
    return q * ph[..., None, :]


def haar_unitary(d: int, rng) -> np.ndarray:
    _check_dim(d)
    if d * d > 4 * MAX_TOTAL_DIM:
        raise CapacityError(f"unitary of dimension {d} is too large")
    return _qr_haar(ginibre(as_generator(rng), (d, d)))


def haar_state_vectors(d: int, n: int, rng) -> np.ndarray:
    """n Haar-random unit vectors of dimension d as an (n, d) array."""
    _check_dim(d)
    z = ginibre(as_generator(rng), (n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_state(d: int | PartitionSpec, rng) -> PureState:
    part = d if isinstance(d, PartitionSpec) else PartitionSpec((int(d),))
    v = haar_state_vectors(part.total_dim, 1, rng)[0]
    return PureState(v, part)


@dataclass(frozen=True, eq=False)
class Isometry:
    """D x d_C matrix with orthonormal columns spanning a code space."""

    columns: np.ndarray
    ambient: PartitionSpec

    def __post_init__(self):
        v = np.asarray(self.columns, dtype=complex)
        if v.ndim != 2 or v.shape[0] != self.ambient.total_dim:
            raise ValueError(f"isometry shape {v.shape} does not match ambient {self.ambient.dims}")
        if not 1 <= v.shape[1] <= v.shape[0]:
            raise ValueError(f"code dimension {v.shape[1]} out of range")
        err = np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1])))
        if err > ISOMETRY_TOL:
            raise ValueError(f"columns are not orthonormal (error {err:.3g})")
        v.setflags(write=False)
        object.__setattr__(self, "columns", v)

    @property
    def code_dim(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        """Normalized projector V V^dagger / d_C."""
        v = self.columns
        return (v @ v.conj().T) / self.code_dim


def random_isometry_columns(D: int, d_C: int, gen: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Orthonormal D x d_C frames with Haar-uniform span.

    Phase-corrected QR of a D x d_C Ginibre block has the law of the first d_C
    columns of a Haar unitary.  With n given, returns a stack (n, D, d_C).
    """
    shape = (D, d_C) if n is None else (n, D, d_C)
    return _qr_haar(ginibre(gen, shape))


def random_isometry(ambient: PartitionSpec | Sequence[int], d_C: int, rng) -> Isometry:
    part = ambient if isinstance(ambient, PartitionSpec) else PartitionSpec(tuple(ambient))
    D = part.total_dim
    if not 1 <= d_C <= D:
        raise ValueError(f"d_C={d_C} must lie in [1, {D}]")
    return Isometry(random_isometry_columns(D, d_C, as_generator(rng)), part)


def subspace_state_vectors(v: Isometry | np.ndarray, n: int, rng) -> np.ndarray:
    cols = v.columns if isinstance(v, Isometry) else np.asarray(v)
    phi = haar_state_vectors(cols.shape[1], n, rng)
    return phi @ cols.T


def subspace_state(v: Isometry, rng) -> PureState:
    """V|phi> with |phi> Haar on the code space."""
    return PureState(subspace_state_vectors(v, 1, rng)[0], v.ambient)


def overlap_pair_vectors(D: int, a: float, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """n pairs (U|v_a>, U|0>) with |v_a> = a|0> + sqrt(1-a^2)|1> and U Haar.

    Only the first two columns of U matter, so they are drawn as a Haar
    2-frame.
    """
    gen = as_generator(rng)
    frames = random_isometry_columns(D, 2, gen, n)
    phi = frames[:, :, 0]
    psi = a * frames[:, :, 0] + np.sqrt(max(1.0 - a * a, 0.0)) * frames[:, :, 1]
    return psi, phi


def sample_overlap_pair(d_C: int, ambient: PartitionSpec | Sequence[int], rng, a: float | None = None):
    """Return (psi, phi, overlap).

    With `a` given the pair has |<psi|phi>| = a exactly and is rotated by an
    ambient Haar unitary.  Without it, two independent Haar states of a shared
    random d_C-dimensional subspace are drawn and their overlap reported.
    """
    part = ambient if isinstance(ambient, PartitionSpec) else PartitionSpec(tuple(ambient))
    D = part.total_dim
    if d_C < 2:
        raise ValueError("d_C must be at least 2")
    if D < 2:
        raise ValueError("ambient dimension must be at least 2")
    if d_C > D:
        raise ValueError(f"d_C={d_C} exceeds ambient dimension {D}")
    gen = as_generator(rng)
    if a is not None:
        a = float(a)
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"overlap a={a} outside [0, 1]")
        psi, phi = overlap_pair_vectors(D, a, 1, gen)
        return PureState(psi[0], part), PureState(phi[0], part), a
    cols = random_isometry_columns(D, d_C, gen)
    pair = subspace_state_vectors(cols, 2, gen)
    ov = float(abs(np.vdot(pair[0], pair[1])))
    return PureState(pair[0], part), PureState(pair[1], part), ov


def chunk_sizes(n: int, parts: int) -> list[int]:
    """Split n into `parts` near-equal nonnegative pieces (larger first)."""
    parts = max(1, int(parts))
    q, r = divmod(int(n), parts)
    return [q + (1 if i < r else 0) for i in range(parts)]


def rows_per_block(row_entries: int) -> int:
    return max(1, _CHUNK_ENTRIES // max(1, row_entries))


def parallel_map(fn: Callable, jobs: list, workers: int = 1) -> list:
    """Map fn over jobs, returning results in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def partitioned_sampling(rng: RngStream, n: int, workers: int, fn: Callable[[np.random.Generator, int], np.ndarray]) -> np.ndarray:
    """Draw n samples split across `workers` child streams and concatenate.

    fn(gen, count) must return an array whose first axis has length count.
    The result depends on (rng, n, workers) only.
    """
    if not isinstance(rng, RngStream):
        if workers > 1:
            raise TypeError("partitioned sampling across workers needs an RngStream")
        return fn(as_generator(rng), n)
    sizes = chunk_sizes(n, max(1, min(workers, n)))
    streams = rng.split(len(sizes))
    out = parallel_map(lambda job: fn(job[0].generator, job[1]), list(zip(streams, sizes)), workers)
    return np.concatenate(out, axis=0)
