import pytest

from presched.model import Instance, Job


@pytest.fixture
def two_job_single():
    # A(p=2, p_hat=2), B(p=4, p_hat=1) on one machine
    return Instance.single([Job(1, 2, 2), Job(2, 4, 1)])


def random_unrelated(rng, n_max=6, m_max=3, p_max=20, zero_frac=0.3):
    """Small random unrelated instance; every job keeps a feasible machine."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    rates = rng.integers(1, 5, size=(m, n)).astype(float)
    mask = rng.random((m, n)) < zero_frac
    rates[mask] = 0.0
    for j in range(n):
        if not (rates[:, j] > 0).any():
            rates[int(rng.integers(0, m)), j] = float(rng.integers(1, 5))
    jobs = []
    for j in range(n):
        p = float(rng.integers(1, p_max + 1))
        p_hat = float(rng.integers(1, int(p) + 1))
        jobs.append(Job(j, p, p_hat))
    return Instance(jobs, rates)


def random_single(rng, n_max=12, p_max=50):
    n = int(rng.integers(1, n_max + 1))
    jobs = []
    for j in range(n):
        p = float(rng.integers(1, p_max + 1))
        p_hat = float(rng.integers(1, int(p) + 1))
        jobs.append(Job(j, p, p_hat))
    return Instance.single(jobs)
