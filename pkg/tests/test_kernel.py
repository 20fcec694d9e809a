import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tangency_lab.errors import DimensionMismatch, NearParallelRows
from tangency_lab.kernel import grad_loss, hvp, kernel_phi, loss


def random_matrix(d, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * rng.normal(size=(d, d))


def test_phi_aligned_vectors():
    w = np.array([0.0, 2.0, 0.0, 0.0])
    assert kernel_phi(w, 3 * w) == pytest.approx(12.0, abs=1e-12)


def test_phi_orthogonal_vectors():
    w = np.array([1.0, 0.0, 0.0, 0.0])
    v = np.array([0.0, 1.0, 0.0, 0.0])
    assert kernel_phi(w, v) == pytest.approx(1.0 / np.pi, abs=1e-12)


def test_phi_antiparallel_vanishes():
    w = np.array([1.0, 1.0, 0.0, 0.0])
    assert kernel_phi(w, -w) == pytest.approx(0.0, abs=1e-12)


def test_loss_at_teacher_is_zero():
    for d in (4, 7, 11):
        assert abs(loss(np.eye(d))) <= 1e-12


def test_loss_at_doubled_teacher():
    # at W = 2I the student-teacher cross sum cancels the student-student
    # sum exactly, leaving the pure teacher term: d diagonal quarters plus
    # d(d-1) orthogonal pairs worth 1/(4*pi) each
    for d in (4, 6, 9):
        expected = d / 4 + d * (d - 1) / (4 * np.pi)
        assert loss(2 * np.eye(d)) == pytest.approx(expected, rel=1e-13)


def test_loss_rejects_zero_rows():
    from tangency_lab.errors import DegenerateVector

    W = np.eye(4)
    W[2] = 0.0
    with pytest.raises(DegenerateVector):
        loss(W)


def test_loss_rejects_non_square():
    with pytest.raises(DimensionMismatch):
        loss(np.zeros((3, 5)))
    with pytest.raises(DimensionMismatch):
        loss(np.zeros((3, 3)))


def test_grad_matches_finite_differences():
    d = 5
    W = np.eye(d) + 0.3 * random_matrix(d, seed=7)
    g = grad_loss(W)
    h = 1e-6
    fd = np.zeros_like(W)
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d))
            E[i, j] = h
            fd[i, j] = (loss(W + E) - loss(W - E)) / (2 * h)
    assert np.max(np.abs(g - fd)) <= 1e-6


def test_grad_raises_on_antiparallel_rows():
    W = np.eye(4)
    W[1] = -W[0]
    with pytest.raises(NearParallelRows):
        grad_loss(W)


def test_loss_is_finite_on_antiparallel_rows():
    W = np.eye(4)
    W[1] = -W[0]
    assert np.isfinite(loss(W))


def test_monte_carlo_loss_agreement():
    # sample the population risk directly; the closed form must sit
    # within three standard errors of the chunked estimate
    d = 5
    W = np.eye(d) + 0.4 * random_matrix(d, seed=3)
    rng = np.random.default_rng(12345)
    chunk, n_chunks = 500_000, 20
    means = []
    for _ in range(n_chunks):
        X = rng.normal(size=(chunk, d))
        student = np.maximum(X @ W.T, 0.0).sum(axis=1)
        teacher = np.maximum(X, 0.0).sum(axis=1)
        means.append(0.5 * np.mean((student - teacher) ** 2))
    means = np.array(means)
    est = means.mean()
    sem = means.std(ddof=1) / np.sqrt(n_chunks)
    assert abs(loss(W) - est) <= 3 * sem


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 6))
def test_loss_nonnegative_and_permutation_invariant(seed, d):
    W = random_matrix(d, seed)
    base = loss(W)
    assert base >= -1e-12
    perm = np.random.default_rng(seed + 1).permutation(d)
    P = np.eye(d)[perm]
    assert loss(P @ W @ P.T) == pytest.approx(base, rel=1e-11, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_grad_permutation_equivariant(seed):
    d = 5
    W = np.eye(d) + 0.5 * random_matrix(d, seed)
    perm = np.random.default_rng(seed + 13).permutation(d)
    P = np.eye(d)[perm]
    left = grad_loss(P @ W @ P.T)
    right = P @ grad_loss(W) @ P.T
    assert np.max(np.abs(left - right)) <= 1e-10


def test_hvp_is_symmetric_bilinear():
    d = 5
    W = np.eye(d) + 0.3 * random_matrix(d, seed=21)
    rng = np.random.default_rng(22)
    V1, V2 = rng.normal(size=(2, d, d))
    h1 = hvp(W, V1)
    h2 = hvp(W, V2)
    assert abs(np.sum(h1 * V2) - np.sum(h2 * V1)) <= 1e-6
    combo = hvp(W, 2.0 * V1 - 0.5 * V2)
    assert np.max(np.abs(combo - 2.0 * h1 + 0.5 * h2)) <= 1e-6


def test_hvp_matches_dense_quadratic_form():
    d = 4
    W = np.eye(d) + 0.2 * random_matrix(d, seed=31)
    V = random_matrix(d, seed=32)
    h = 1e-5
    fd = (loss(W + h * V) - 2 * loss(W) + loss(W - h * V)) / h**2
    assert np.sum(hvp(W, V) * V) == pytest.approx(fd, rel=5e-4, abs=5e-6)
