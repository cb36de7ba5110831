import numpy as np
import pytest
from scipy import stats

from aqimlab.haar import (
    Isometry,
    RngStream,
    chunk_sizes,
    haar_state,
    haar_state_vectors,
    haar_unitary,
    partitioned_sampling,
    random_isometry,
    sample_overlap_pair,
    subspace_state,
    subspace_state_vectors,
)
from aqimlab.linalg import CapacityError, PartitionSpec


def within(emp, exact, se, z=5.0, floor=1e-12):
    return abs(emp - exact) <= z * se + floor


def test_unitary_is_unitary():
    rng = RngStream(0)
    for d in (1, 2, 5, 16):
        u = haar_unitary(d, rng)
        assert np.allclose(u.conj().T @ u, np.eye(d), atol=1e-12)


def test_unitary_first_moment_vanishes():
    # E[U] = 0 entrywise; check the (0,0) entry within 5 SE
    gen = np.random.default_rng(1)
    vals = np.array([haar_unitary(3, gen)[0, 0] for _ in range(4000)])
    se = np.sqrt(np.var(vals) / len(vals))
    assert abs(vals.mean()) <= 5 * se


def test_unitary_twirl_gives_mixed_state():
    gen = np.random.default_rng(2)
    d, n = 3, 4000
    rho = np.diag([1.0, 0, 0])
    acc = np.zeros((n, d, d), dtype=complex)
    for i in range(n):
        u = haar_unitary(d, gen)
        acc[i] = u @ rho @ u.conj().T
    mean = acc.mean(axis=0)
    se = acc.std(axis=0) / np.sqrt(n)
    target = np.eye(d) / d
    assert np.all(np.abs(mean - target) <= 5 * se + 1e-12)


def test_unitary_fourth_moment_of_entry():
    # E|U_00|^4 = 2 / (d (d + 1))
    gen = np.random.default_rng(3)
    d, n = 4, 20000
    x = np.abs(np.array([haar_unitary(d, gen)[0, 0] for _ in range(n)])) ** 4
    assert within(x.mean(), 2 / (d * (d + 1)), x.std() / np.sqrt(n))


def test_state_second_moment_is_symmetric_projector():
    d, n = 3, 40000
    psis = haar_state_vectors(d, n, RngStream(4))
    assert np.allclose(np.linalg.norm(psis, axis=1), 1)
    # E[|psi><psi| (x) |psi><psi|] = (1 + SWAP) / (d (d + 1)); check several entries
    t = np.einsum("ni,nj,nk,nl->nikjl", psis, psis.conj(), psis, psis.conj()).reshape(n, d * d, d * d)
    swap = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1
    target = (np.eye(d * d) + swap) / (d * (d + 1))
    mean = t.mean(axis=0)
    se = t.std(axis=0) / np.sqrt(n)
    assert np.all(np.abs(mean - target) <= 5 * se + 1e-12)


def test_state_fidelity_law():
    # |<0|psi>|^2 is Beta(1, d-1)
    d = 5
    psis = haar_state_vectors(d, 20000, RngStream(5))
    p = np.abs(psis[:, 0]) ** 2
    assert stats.kstest(p, stats.beta(1, d - 1).cdf).pvalue > 1e-3


def test_reproducibility_and_streams():
    a = haar_state_vectors(4, 10, RngStream(7))
    b = haar_state_vectors(4, 10, RngStream(7))
    c = haar_state_vectors(4, 10, RngStream(8))
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    s = RngStream(7)
    k1, k2 = s.split(2)
    assert k1.stream_id == (0,) and k2.stream_id == (1,)
    assert not np.allclose(haar_state_vectors(4, 3, k1), haar_state_vectors(4, 3, k2))
    assert np.array_equal(haar_state_vectors(4, 3, s.child(1)), haar_state_vectors(4, 3, RngStream(7, (1,))))


def test_haar_state_partition():
    s = haar_state(PartitionSpec((2, 3)), RngStream(0))
    assert s.partition.dims == (2, 3)


def test_capacity():
    with pytest.raises(CapacityError):
        haar_state_vectors(2**21, 1, RngStream(0))
    with pytest.raises(ValueError):
        haar_state_vectors(0, 1, RngStream(0))


def test_isometry_properties():
    v = random_isometry((2, 2, 2), 3, RngStream(9))
    assert v.code_dim == 3
    assert np.allclose(v.columns.conj().T @ v.columns, np.eye(3), atol=1e-12)
    p = v.projector()
    assert np.isclose(np.trace(p).real, 1)
    with pytest.raises(ValueError):
        random_isometry((2, 2), 5, RngStream(0))
    with pytest.raises(ValueError):
        Isometry(np.ones((4, 2)), PartitionSpec((2, 2)))


def test_isometry_mean_projector_is_mixed():
    # E[V V^dagger / d_C] = 1/D
    gen = np.random.default_rng(10)
    D, d_C, n = 4, 2, 4000
    ps = np.array([random_isometry((D,), d_C, gen).projector() for _ in range(n)])
    mean, se = ps.mean(axis=0), ps.std(axis=0) / np.sqrt(n)
    assert np.all(np.abs(mean - np.eye(D) / D) <= 5 * se + 1e-12)


def test_subspace_states_lie_in_span():
    v = random_isometry((3, 3), 4, RngStream(11))
    psis = subspace_state_vectors(v, 50, RngStream(12))
    proj = v.columns @ v.columns.conj().T
    assert np.allclose(psis @ proj.T, psis, atol=1e-12)
    s = subspace_state(v, RngStream(13))
    assert np.isclose(np.linalg.norm(s.amplitudes), 1)


def test_overlap_pair_exact():
    for a in (0.0, 0.3, 1.0):
        psi, phi, ov = sample_overlap_pair(4, (3, 3), RngStream(14), a=a)
        assert ov == a
        assert abs(np.vdot(psi.amplitudes, phi.amplitudes)) == pytest.approx(a, abs=1e-12)
    psi, phi, _ = sample_overlap_pair(4, (3, 3), RngStream(15), a=1.0)
    assert np.allclose(psi.amplitudes, phi.amplitudes)


def test_overlap_pair_validation():
    with pytest.raises(ValueError):
        sample_overlap_pair(1, (3, 3), RngStream(0))
    with pytest.raises(ValueError):
        sample_overlap_pair(10, (3, 3), RngStream(0))
    with pytest.raises(ValueError):
        sample_overlap_pair(4, (3, 3), RngStream(0), a=1.5)


def test_free_overlap_follows_beta_law():
    # |<psi|phi>|^2 for independent Haar states of a d_C-dim space is Beta(1, d_C - 1)
    d_C = 4
    gen = np.random.default_rng(16)
    ov = np.array([sample_overlap_pair(d_C, (3, 3), gen)[2] for _ in range(4000)])
    assert stats.kstest(ov ** 2, stats.beta(1, d_C - 1).cdf).pvalue > 1e-3


def test_chunking_and_partitioned_sampling():
    assert chunk_sizes(10, 3) == [4, 3, 3]
    assert sum(chunk_sizes(7, 4)) == 7
    fn = lambda gen, c: haar_state_vectors(3, c, gen)
    a = partitioned_sampling(RngStream(3), 11, 4, fn)
    b = partitioned_sampling(RngStream(3), 11, 4, fn)
    assert a.shape == (11, 3) and np.array_equal(a, b)
    # more workers than samples never produces empty chunks
    c = partitioned_sampling(RngStream(3), 2, 8, fn)
    assert c.shape == (2, 3)
    with pytest.raises(TypeError):
        partitioned_sampling(np.random.default_rng(0), 4, 2, fn)
