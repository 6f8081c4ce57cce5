import cmath
import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from semispec import eigenvalues_dense, filter_trusted
from semispec.linalg import EigensolverError, MAX_DENSE_DIM

from conftest import rotated_cloud


def same_multiset(a, b, tol):
    a = np.asarray(a)
    b = list(np.asarray(b))
    for z in a:
        j = int(np.argmin(np.abs(np.asarray(b) - z)))
        if abs(b[j] - z) > tol:
            return False
        b.pop(j)
    return not b


def test_diagonal():
    d = np.array([3, -1j, 2 + 2j, 0.5])
    assert same_multiset(eigenvalues_dense(np.diag(d)), d, 1e-15)


@pytest.mark.parametrize("alpha", [0.2, math.pi / 3, 2.5])
def test_rotated_hamilton_map(alpha):
    ev = eigenvalues_dense(np.array([[0, 1], [-cmath.exp(1j * alpha), 0]]))
    mu = 1j * cmath.exp(0.5j * alpha)
    assert same_multiset(ev, [mu, -mu], 1e-14)


def test_unitary_similarity(rng):
    for seed in range(5):
        Q = unitary_group.rvs(40, random_state=seed)
        D = rng.normal(size=40) + 1j * rng.normal(size=40)
        ev = eigenvalues_dense(Q @ np.diag(D) @ Q.conj().T)
        assert same_multiset(ev, D, 1e-10)


def test_similarity_invariance(rng):
    M = rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30))
    base = eigenvalues_dense(M)
    done = 0
    while done < 5:
        T = np.eye(30) + 0.1 * (rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30)))
        if np.linalg.cond(T) >= 100:
            continue
        ev = eigenvalues_dense(T @ M @ np.linalg.inv(T))
        assert same_multiset(ev, base, 1e-8 * np.abs(base).max())
        done += 1


def test_trace_consistency(rng):
    for n in (5, 50, 200):
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        ev = eigenvalues_dense(M)
        assert len(ev) == n
        assert abs(ev.sum() - np.trace(M)) <= 1e-9 * np.linalg.norm(M, 2) * n


def test_backward_error(rng):
    M = rng.normal(size=(60, 60)) + 1j * rng.normal(size=(60, 60))
    norm = np.linalg.norm(M, 2)
    for z in eigenvalues_dense(M):
        smin = np.linalg.svd(M - z * np.eye(60), compute_uv=False)[-1]
        assert smin <= 1e-12 * norm


def test_size_limit_and_nonfinite():
    with pytest.raises(EigensolverError):
        eigenvalues_dense(np.zeros((MAX_DENSE_DIM + 1, 1)))
    with pytest.raises(EigensolverError):
        eigenvalues_dense(np.array([[np.nan, 0], [0, 1]]))


# --- trust filter -----------------------------------------------------------


def test_identical_lists_all_trusted(rng):
    v = rng.normal(size=20) + 1j * rng.normal(size=20)
    c = filter_trusted(v, v.copy(), 0.1)
    assert c.trusted.all()
    assert c.basis_pair == (20, 20)


def test_constructed_filter():
    c = filter_trusted([1, 5 + 5j], [1 + 1e-9, 7j, 100], 0.1)
    assert c.trusted.tolist() == [True, False]
    assert np.array_equal(c.trusted_values(), [1])


def test_high_values_consumed_once():
    # both low values want the same high partner; only the nearer gets it
    c = filter_trusted([1, 1 + 1e-8], [1 + 2e-8, 50], 0.1)
    assert c.trusted.tolist() == [False, True]


def test_filter_monotone_in_tol(rng):
    low = rng.normal(size=50) + 1j * rng.normal(size=50)
    high = low + 10 ** rng.uniform(-12, -2, size=50) * np.exp(2j * math.pi * rng.uniform(size=50))
    high = np.concatenate([high, rng.normal(size=10)])
    prev = None
    for tol in [1e-1, 1e-3, 1e-5, 1e-7, 1e-9]:
        t = filter_trusted(low, high, 0.1, tol).trusted
        if prev is not None:
            assert not np.any(t & ~prev)
        prev = t


def test_filter_rejects_bad_tol():
    with pytest.raises(ValueError):
        filter_trusted([1], [1], 0.1, 0)


@pytest.mark.parametrize("alpha", [math.pi / 6, math.pi / 4, math.pi / 3])
def test_rotated_trusted_values_match_closed_form(alpha):
    h = 0.05
    cloud = rotated_cloud(alpha, h, 256)
    exact = cmath.exp(0.5j * alpha) * h * (2 * np.arange(200) + 1)
    tv = cloud.trusted_values()
    hits = [z for z in tv if np.abs(exact - z).min() <= 1e-6 * abs(z)]
    assert len(hits) >= 8
    # the eight nearest the origin are the first eight of the string
    near = cloud.nearest(0, 8)
    assert np.abs(near - exact[:8]).max() <= 1e-6 * np.abs(exact[:8]).max()
