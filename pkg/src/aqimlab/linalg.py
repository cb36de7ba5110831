"""Dense linear algebra over multipartite qudit spaces.

Party 1 is the most significant tensor factor, so a basis index of a state on
dims (d_1, ..., d_m) is the row-major flattening of (i_1, ..., i_m).  Trace
distances follow the convention D(rho, sigma) = ||rho - sigma||_1 with no 1/2
factor, so D ranges over [0, 2].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_TOTAL_DIM = 2**20

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-8
HERMITIAN_REJECT_TOL = 1e-6
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
FIDELITY_PSD_TOL = 1e-8


class CapacityError(ValueError):
    """Raised when a Hilbert space would exceed the configured dimension cap."""


class DomainError(ValueError):
    """Raised when an input lies outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class PartitionSpec:
    """Local dimensions (d_1, ..., d_m) of a multipartite space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise ValueError("a partition needs at least one party")
        if any(d < 1 for d in dims):
            raise ValueError(f"local dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)
        if self.total_dim > MAX_TOTAL_DIM:
            raise CapacityError(f"total dimension {self.total_dim} exceeds cap {MAX_TOTAL_DIM}")

    @property
    def m(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @classmethod
    def qudits(cls, m: int, d: int = 2) -> "PartitionSpec":
        return cls((d,) * m)

    def concat(self, other: "PartitionSpec") -> "PartitionSpec":
        return PartitionSpec(self.dims + other.dims)


@dataclass(frozen=True)
class SubsystemSelector:
    """A subset S of parties, given as 1-based indices into a partition."""

    keep: tuple[int, ...]
    partition: PartitionSpec

    def __post_init__(self):
        keep = tuple(int(i) for i in self.keep)
        if not keep:
            raise ValueError("selector must keep at least one party")
        if any(b <= a for a, b in zip(keep, keep[1:])):
            raise ValueError(f"selector indices must be strictly increasing, got {keep}")
        if keep[0] < 1 or keep[-1] > self.partition.m:
            raise ValueError(f"selector {keep} out of range for {self.partition.m} parties")
        object.__setattr__(self, "keep", keep)

    @property
    def d_S(self) -> int:
        return int(np.prod([self.partition.dims[i - 1] for i in self.keep], dtype=np.int64))

    @property
    def complement(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.partition.m + 1) if i not in self.keep)

    @property
    def axes(self) -> tuple[int, ...]:
        """Zero-based axes kept."""
        return tuple(i - 1 for i in self.keep)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.partition.dims[i - 1] for i in self.keep)


def as_selector(keep, partition: PartitionSpec) -> SubsystemSelector:
    if isinstance(keep, SubsystemSelector):
        if keep.partition != partition:
            raise ValueError("selector belongs to a different partition")
        return keep
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    return SubsystemSelector(tuple(sorted(keep)), partition)


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector on a partition."""

    amplitudes: np.ndarray
    partition: PartitionSpec

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape[0] != self.partition.total_dim:
            raise ValueError(f"vector length {v.shape[0]} != total_dim {self.partition.total_dim}")
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={nrm!r})")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def from_vector(cls, v, dims: Sequence[int] | PartitionSpec, normalize: bool = False):
        part = dims if isinstance(dims, PartitionSpec) else PartitionSpec(tuple(dims))
        v = np.asarray(v, dtype=complex).reshape(-1)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(v, part)

    @classmethod
    def basis(cls, index: int | Sequence[int], dims: Sequence[int] | PartitionSpec):
        part = dims if isinstance(dims, PartitionSpec) else PartitionSpec(tuple(dims))
        if not isinstance(index, (int, np.integer)):
            index = int(np.ravel_multi_index(tuple(index), part.dims))
        v = np.zeros(part.total_dim, dtype=complex)
        v[index] = 1.0
        return cls(v, part)

    @property
    def dim(self) -> int:
        return self.partition.total_dim

    def density(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), self.partition)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator on a partition."""

    matrix: np.ndarray
    partition: PartitionSpec

    def __post_init__(self):
        a = np.array(self.matrix, dtype=complex)
        n = self.partition.total_dim
        if a.shape != (n, n):
            raise ValueError(f"matrix shape {a.shape} does not match total_dim {n}")
        asym = np.max(np.abs(a - a.conj().T)) if n else 0.0
        if asym > HERMITIAN_TOL:
            raise DomainError(f"matrix is not Hermitian (max asymmetry {asym:.3g})")
        a = 0.5 * (a + a.conj().T)
        tr = np.trace(a).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise DomainError(f"trace {tr!r} differs from 1")
        lo = np.linalg.eigvalsh(a)[0]
        if lo < -PSD_TOL:
            raise DomainError(f"negative eigenvalue {lo:.3g}")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @classmethod
    def from_matrix(cls, a, dims: Sequence[int] | PartitionSpec):
        part = dims if isinstance(dims, PartitionSpec) else PartitionSpec(tuple(dims))
        return cls(np.asarray(a, dtype=complex), part)

    @property
    def dim(self) -> int:
        return self.partition.total_dim


def _matrix_of(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, PureState):
        v = x.amplitudes
        return np.outer(v, v.conj())
    return np.asarray(x, dtype=complex)


def tensor_product(a, b):
    """Kronecker product with `a` as the more significant factor."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        part = _joint_partition(a.partition, b.partition)
        return PureState(np.kron(a.amplitudes, b.amplitudes), part)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        part = _joint_partition(a.partition, b.partition)
        return DensityMatrix(np.kron(a.matrix, b.matrix), part)
    raise TypeError("tensor_product needs two PureState or two DensityMatrix operands")


def _joint_partition(p: PartitionSpec, q: PartitionSpec) -> PartitionSpec:
    if p.total_dim * q.total_dim > MAX_TOTAL_DIM:
        raise CapacityError(
            f"product dimension {p.total_dim * q.total_dim} exceeds cap {MAX_TOTAL_DIM}"
        )
    return p.concat(q)


# ---------------------------------------------------------------- raw kernels


def reduce_pure_batch(psis: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    """Reduced density matrices of a stack of pure states.

    psis has shape (n, D); keep_axes are zero-based party indices.  Returns an
    array of shape (n, d_S, d_S).
    """
    psis = np.asarray(psis)
    n = psis.shape[0]
    dims = tuple(dims)
    keep_axes = tuple(keep_axes)
    rest = tuple(i for i in range(len(dims)) if i not in keep_axes)
    d_s = int(np.prod([dims[i] for i in keep_axes], dtype=np.int64))
    d_r = int(np.prod([dims[i] for i in rest], dtype=np.int64)) if rest else 1
    t = psis.reshape((n,) + dims)
    if keep_axes + rest != tuple(range(len(dims))):
        t = t.transpose((0,) + tuple(1 + i for i in keep_axes + rest))
    t = t.reshape(n, d_s, d_r)
    return np.einsum("nab,ncb->nac", t, t.conj())


def reduce_operator(rho: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    """Partial trace of a single operator over the parties not in keep_axes."""
    dims = tuple(dims)
    m = len(dims)
    keep_axes = tuple(keep_axes)
    rest = tuple(i for i in range(m) if i not in keep_axes)
    d_s = int(np.prod([dims[i] for i in keep_axes], dtype=np.int64))
    d_r = int(np.prod([dims[i] for i in rest], dtype=np.int64)) if rest else 1
    t = np.asarray(rho).reshape(dims + dims)
    perm = keep_axes + rest
    t = t.transpose(perm + tuple(m + i for i in perm))
    t = t.reshape(d_s, d_r, d_s, d_r)
    return np.einsum("arbr->ab", t)


def hermitian_part(m: np.ndarray, reject_tol: float = HERMITIAN_REJECT_TOL) -> np.ndarray:
    m = np.asarray(m)
    mh = np.swapaxes(m.conj(), -1, -2)
    if m.size:
        asym = np.max(np.abs(m - mh))
        if asym > reject_tol:
            raise DomainError(f"operator is not Hermitian (max asymmetry {asym:.3g})")
    return 0.5 * (m + mh)


def trace_norm_batch(ms: np.ndarray) -> np.ndarray:
    """Schatten 1-norms of a stack of Hermitian matrices (..., d, d)."""
    try:
        ev = np.linalg.eigvalsh(ms)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"Hermitian eigensolver failed: {exc}") from exc
    return np.abs(ev).sum(axis=-1)


def trace_distance_batch(rhos: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """Elementwise D(rho_i, sigma_i) for stacks (broadcasting allowed)."""
    return trace_norm_batch(np.asarray(rhos) - np.asarray(sigmas))


# ---------------------------------------------------------------- public ops


def reduce(state, keep) -> DensityMatrix:
    """Partial trace Tr_{S^c}, keeping the parties in `keep` (1-based)."""
    if not isinstance(state, (PureState, DensityMatrix)):
        raise TypeError("reduce expects a PureState or DensityMatrix")
    sel = as_selector(keep, state.partition)
    dims = state.partition.dims
    if isinstance(state, PureState):
        red = reduce_pure_batch(state.amplitudes[None, :], dims, sel.axes)[0]
    else:
        red = reduce_operator(state.matrix, dims, sel.axes)
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(red, PartitionSpec(sel.dims))


def schatten_norm(m, p: int = 1) -> float:
    """Schatten p-norm (p in {1, 2}) of a Hermitian matrix."""
    a = hermitian_part(_matrix_of(m))
    if p == 1:
        return float(trace_norm_batch(a))
    if p == 2:
        return float(np.sqrt(np.sum(np.abs(a) ** 2)))
    raise ValueError(f"unsupported Schatten index p={p}")


def _check_same_dim(rho, sigma):
    a, b = _matrix_of(rho), _matrix_of(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return a, b


def trace_distance(rho, sigma) -> float:
    """D(rho, sigma) = ||rho - sigma||_1, in [0, 2]."""
    a, b = _check_same_dim(rho, sigma)
    return schatten_norm(a - b, 1)


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(a))
    if w[0] < -FIDELITY_PSD_TOL:
        raise DomainError(f"operator has negative eigenvalue {w[0]:.3g}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1."""
    if isinstance(rho, PureState) or isinstance(sigma, PureState):
        if isinstance(sigma, PureState):
            rho, sigma = sigma, rho
        s = _matrix_of(sigma)
        v = rho.amplitudes
        if s.shape != (v.shape[0], v.shape[0]):
            raise ValueError("dimension mismatch")
        _psd_sqrt(s)
        val = np.real(np.vdot(v, s @ v))
        return float(np.sqrt(max(val, 0.0)))
    a, b = _check_same_dim(rho, sigma)
    prod = _psd_sqrt(a) @ _psd_sqrt(b)
    sv = np.linalg.svd(prod, compute_uv=False)
    return float(min(sv.sum(), 1.0))


def purity(rho) -> float:
    a = _matrix_of(rho)
    return float(np.real(np.sum(np.abs(a) ** 2)))


def maximally_mixed(sel) -> DensityMatrix:
    """Identity on the selected subsystem divided by its dimension."""
    if isinstance(sel, SubsystemSelector):
        part = PartitionSpec(sel.dims)
    elif isinstance(sel, PartitionSpec):
        part = sel
    else:
        part = PartitionSpec((int(sel),))
    d = part.total_dim
    return DensityMatrix(np.eye(d, dtype=complex) / d, part)
