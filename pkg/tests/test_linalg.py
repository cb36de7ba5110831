import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqimlab.linalg import (
    CapacityError,
    DensityMatrix,
    DomainError,
    PartitionSpec,
    PureState,
    SubsystemSelector,
    fidelity,
    maximally_mixed,
    purity,
    reduce,
    schatten_norm,
    tensor_product,
    trace_distance,
)


def brute_partial_trace(rho, dims, keep):
    """Reference partial trace by explicit index summation (0-based keep)."""
    m = len(dims)
    keep = sorted(keep)
    rest = [i for i in range(m) if i not in keep]
    kd = [dims[i] for i in keep]
    rd = [dims[i] for i in rest]
    d_s = int(np.prod(kd))
    out = np.zeros((d_s, d_s), dtype=complex)
    for a in itertools.product(*[range(d) for d in kd]):
        for b in itertools.product(*[range(d) for d in kd]):
            s = 0j
            for r in itertools.product(*[range(d) for d in rd]):
                ia = [0] * m
                ib = [0] * m
                for pos, i in enumerate(keep):
                    ia[i] = a[pos]
                    ib[i] = b[pos]
                for pos, i in enumerate(rest):
                    ia[i] = r[pos]
                    ib[i] = r[pos]
                s += rho[np.ravel_multi_index(ia, dims), np.ravel_multi_index(ib, dims)]
            out[np.ravel_multi_index(a, kd), np.ravel_multi_index(b, kd)] = s
    return out


def random_density(d, rng, rank=None):
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(d, rng):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------- types


def test_partition_basics():
    p = PartitionSpec((2, 3, 4))
    assert p.total_dim == 24 and p.m == 3
    with pytest.raises(ValueError):
        PartitionSpec(())
    with pytest.raises(ValueError):
        PartitionSpec((2, 0))
    with pytest.raises(CapacityError):
        PartitionSpec((2,) * 21)


def test_selector_validation():
    p = PartitionSpec((2, 3, 4))
    s = SubsystemSelector((1, 3), p)
    assert s.d_S == 8 and s.complement == (2,)
    for bad in [(), (0,), (4,), (2, 1), (1, 1)]:
        with pytest.raises(ValueError):
            SubsystemSelector(bad, p)


def test_pure_state_requires_norm():
    with pytest.raises(ValueError):
        PureState(np.array([1.0, 1.0]), PartitionSpec((2,)))
    s = PureState.from_vector([1, 1], (2,), normalize=True)
    assert np.isclose(np.linalg.norm(s.amplitudes), 1)


def test_density_matrix_invariants():
    p = PartitionSpec((2,))
    with pytest.raises(DomainError):
        DensityMatrix(np.array([[1, 0], [0, 1]]), p)  # trace 2
    with pytest.raises(DomainError):
        DensityMatrix(np.array([[1.5, 0], [0, -0.5]]), p)  # negative eigenvalue
    with pytest.raises(DomainError):
        DensityMatrix(np.array([[0.5, 0.1], [0.3, 0.5]]), p)  # not Hermitian


# ---------------------------------------------------------------- tensor_product


def test_tensor_basis_bookkeeping():
    s = tensor_product(PureState.basis(0, (2,)), PureState.basis(1, (2,)))
    assert s.partition.dims == (2, 2)
    assert np.allclose(s.amplitudes, [0, 1, 0, 0])


def test_tensor_then_reduce_returns_factor():
    rng = np.random.default_rng(1)
    rho = DensityMatrix.from_matrix(random_density(3, rng), (3,))
    joint = tensor_product(rho, maximally_mixed(PartitionSpec((4,))))
    assert np.allclose(reduce(joint, [1]).matrix, rho.matrix, atol=1e-12)


def test_purity_multiplicative():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a = random_density(2, rng)
        b = random_density(2, rng)
        joint = tensor_product(DensityMatrix.from_matrix(a, (2,)), DensityMatrix.from_matrix(b, (2,)))
        # direct arithmetic oracle
        pa = np.real(np.trace(a @ a))
        pb = np.real(np.trace(b @ b))
        assert np.isclose(purity(joint), pa * pb, atol=1e-12)


def test_tensor_capacity():
    big = PureState.basis(0, (2,) * 11)
    with pytest.raises(CapacityError):
        tensor_product(big, big)


# ---------------------------------------------------------------- reduce


def test_bell_reduction():
    bell = PureState.from_vector([1, 0, 0, 1], (2, 2), normalize=True)
    assert np.allclose(reduce(bell, [1]).matrix, np.eye(2) / 2)


def test_product_reduction_second_party():
    rng = np.random.default_rng(3)
    rho = random_density(3, rng)
    zero = DensityMatrix.from_matrix(np.diag([1.0, 0.0]), (2,))
    joint = tensor_product(zero, DensityMatrix.from_matrix(rho, (3,)))
    assert np.allclose(reduce(joint, [2]).matrix, rho, atol=1e-12)


def test_ghz_noncontiguous_reduction():
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = 1 / np.sqrt(2)
    s = PureState.from_vector(ghz, (2, 2, 2))
    got = reduce(s, [1, 3]).matrix
    oracle = brute_partial_trace(np.outer(ghz, ghz), (2, 2, 2), [0, 2])
    assert np.allclose(got, oracle)
    assert np.allclose(got, np.diag([0.5, 0, 0, 0.5]))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=1, max_size=4), st.data())
def test_reduce_matches_bruteforce(dims, data):
    dims = tuple(dims)
    m = len(dims)
    keep = data.draw(st.lists(st.integers(1, m), min_size=1, max_size=m, unique=True))
    seed = data.draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    D = int(np.prod(dims))
    v = random_state(D, rng)
    oracle = brute_partial_trace(np.outer(v, v.conj()), dims, [k - 1 for k in keep])
    assert np.allclose(reduce(PureState(v, PartitionSpec(dims)), keep).matrix, oracle, atol=1e-12)
    rho = random_density(D, rng, rank=2)
    assert np.allclose(reduce(DensityMatrix(rho, PartitionSpec(dims)), keep).matrix,
                       brute_partial_trace(rho, dims, [k - 1 for k in keep]), atol=1e-12)


def test_reduce_bad_selector():
    s = PureState.basis(0, (2, 2))
    with pytest.raises(ValueError):
        reduce(s, [])
    with pytest.raises(ValueError):
        reduce(s, [3])


# ---------------------------------------------------------------- norms and distances


def test_schatten_examples():
    assert schatten_norm(np.diag([1.0, -1.0]), 1) == pytest.approx(2)
    for p in (1, 2):
        assert schatten_norm(np.zeros((3, 3)), p) == 0
    plus = np.array([1, 1]) / np.sqrt(2)
    m = np.diag([1.0, 0.0]) - np.outer(plus, plus)
    # eigenvalues are +-1/sqrt(2)
    assert schatten_norm(m, 1) == pytest.approx(np.sqrt(2), abs=1e-12)


def test_schatten_rejects_non_hermitian():
    with pytest.raises(DomainError):
        schatten_norm(np.array([[0, 1], [0, 0]]), 1)
    # small asymmetry is symmetrized away
    m = np.diag([1.0, -1.0]).astype(complex)
    m[0, 1] = 1e-9
    assert schatten_norm(m, 1) == pytest.approx(2, abs=1e-8)


def test_trace_distance_examples():
    rng = np.random.default_rng(4)
    rho = random_density(3, rng)
    assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-14)
    zero, one = np.diag([1.0, 0]), np.diag([0, 1.0])
    assert trace_distance(zero, one) == pytest.approx(2)
    assert trace_distance(zero, np.eye(2) / 2) == pytest.approx(1)
    with pytest.raises(ValueError):
        trace_distance(np.eye(2) / 2, np.eye(3) / 3)


def test_fidelity_examples():
    rng = np.random.default_rng(5)
    rho = random_density(3, rng)
    assert fidelity(rho, rho) == pytest.approx(1, abs=1e-7)
    assert fidelity(np.diag([1.0, 0]), np.diag([0, 1.0])) == pytest.approx(0, abs=1e-12)
    assert fidelity(np.diag([1.0, 0]), np.eye(2) / 2) == pytest.approx(1 / np.sqrt(2))
    psi = PureState.basis(0, (2,))
    assert fidelity(psi, np.eye(2) / 2) == pytest.approx(1 / np.sqrt(2))
    with pytest.raises(DomainError):
        fidelity(np.diag([1.5, -0.5]), np.eye(2) / 2)


def test_fidelity_pure_matches_mixed_formula():
    rng = np.random.default_rng(6)
    for _ in range(10):
        v = random_state(4, rng)
        sigma = random_density(4, rng)
        a = fidelity(PureState.from_vector(v, (4,)), sigma)
        b = fidelity(np.outer(v, v.conj()), sigma)
        assert a == pytest.approx(b, abs=1e-6)


def test_purity_examples():
    assert purity(PureState.basis(1, (3,))) == pytest.approx(1)
    assert purity(np.eye(4) / 4) == pytest.approx(0.25)
    bell = PureState.from_vector([1, 0, 0, 1], (2, 2), normalize=True)
    assert purity(reduce(bell, [1])) == pytest.approx(0.5)


def test_maximally_mixed():
    p = PartitionSpec((2, 3))
    mm = maximally_mixed(SubsystemSelector((1,), p))
    assert np.allclose(mm.matrix, np.eye(2) / 2)
    assert maximally_mixed(PartitionSpec((1,))).matrix.shape == (1, 1)
    assert trace_distance(mm, mm) == 0


# ---------------------------------------------------------------- properties


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(2, 4), st.integers(0, 2**31))
def test_contractivity(d1, d2, seed):
    rng = np.random.default_rng(seed)
    part = PartitionSpec((d1, d2))
    rho = DensityMatrix(random_density(d1 * d2, rng), part)
    sigma = DensityMatrix(random_density(d1 * d2, rng), part)
    assert trace_distance(reduce(rho, [1]), reduce(sigma, [1])) <= trace_distance(rho, sigma) + 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(2, 5), st.integers(0, 2**31))
def test_schmidt_symmetry(d1, d2, seed):
    rng = np.random.default_rng(seed)
    psi = PureState(random_state(d1 * d2, rng), PartitionSpec((d1, d2)))
    e1 = np.sort(np.linalg.eigvalsh(reduce(psi, [1]).matrix))[::-1]
    e2 = np.sort(np.linalg.eigvalsh(reduce(psi, [2]).matrix))[::-1]
    r = min(d1, d2)
    assert np.allclose(e1[:r], e2[:r], atol=1e-8)
    assert np.allclose(e1[r:], 0, atol=1e-8) and np.allclose(e2[r:], 0, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_fuchs_van_de_graaf_lower(d, seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(d, rng), random_density(d, rng)
    assert trace_distance(rho, sigma) >= 2 - 2 * fidelity(rho, sigma) - 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_norm_ordering(d, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g + g.conj().T
    n1, n2 = schatten_norm(m, 1), schatten_norm(m, 2)
    rank = np.linalg.matrix_rank(m)
    assert n2 <= n1 + 1e-10
    assert n1 <= np.sqrt(rank) * n2 + 1e-10
