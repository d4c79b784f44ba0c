"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the code paths they check: eigenvalues
come from a cyclic Jacobi sweep, likelihoods from the dense Gaussian density,
and the MAP projection from Newton descent on the full log posterior.
"""

import numpy as np
import pytest

from probrom.ppca import PpcaModel


def jacobi_eigenvalues(A, sweeps=100, tol=1e-15):
    """Cyclic Jacobi rotations; returns eigenvalues sorted descending."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * np.linalg.norm(A):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))[::-1]


def dense_log_likelihood(Y, mu, phi, sigma2_w, sigma2_eps):
    """Log-likelihood of rows of ``Y`` under N(mu, phi diag(sigma2_w) phi^T + sigma2_eps I)."""
    Y = np.atleast_2d(Y)
    n, d = Y.shape
    C = phi @ np.diag(sigma2_w) @ phi.T + sigma2_eps * np.eye(d)
    sign, logdet = np.linalg.slogdet(C)
    assert sign > 0
    R = Y - mu
    quad = sum(r @ np.linalg.solve(C, r) for r in R)
    return -0.5 * d * n * np.log(2 * np.pi) - 0.5 * n * logdet - 0.5 * quad


def neg_log_posterior(w, t, y, mu, phi, sigma2_w):
    """Trial-data negative log posterior in ``(w, log sigma2_T)``, constants dropped."""
    d = y.shape[0]
    r = y - phi @ w - mu
    return 0.5 * d * t + (r @ r) / (2 * np.exp(t)) + 0.5 * np.sum(w**2 / sigma2_w)


def posterior_mode_oracle(y, mu, phi, sigma2_w):
    """Minimize the trial-data log posterior by grid search in log-noise then Newton descent."""
    d, m = phi.shape
    G = phi.T @ phi
    P = np.diag(1 / sigma2_w)

    def w_at(t):
        return np.linalg.solve(G / np.exp(t) + P, phi.T @ (y - mu) / np.exp(t))

    grid = np.linspace(np.log(1e-8), np.log(1e3), 2001)
    vals = [neg_log_posterior(w_at(t), t, y, mu, phi, sigma2_w) for t in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    for _ in range(3):
        fine = np.linspace(lo, hi, 401)
        vals = [neg_log_posterior(w_at(t), t, y, mu, phi, sigma2_w) for t in fine]
        j = int(np.argmin(vals))
        lo, hi = fine[max(j - 1, 0)], fine[min(j + 1, len(fine) - 1)]
    t = fine[j]
    x = np.concatenate([w_at(t), [t]])
    for _ in range(50):
        w, t = x[:m], x[m]
        s = np.exp(t)
        r = y - phi @ w - mu
        grad = np.concatenate([-phi.T @ r / s + P @ w, [0.5 * d - (r @ r) / (2 * s)]])
        H = np.zeros((m + 1, m + 1))
        H[:m, :m] = G / s + P
        H[:m, m] = H[m, :m] = phi.T @ r / s
        H[m, m] = (r @ r) / (2 * s)
        step = np.linalg.solve(H, grad)
        x = x - step
        if np.max(np.abs(step)) < 1e-14:
            break
    return x[:m], float(np.exp(x[m])), float(np.max(np.abs(grad)))


def make_model(phi, mu, sigma2_w, sigma2_eps, n=100):
    d, m = phi.shape
    lam = np.concatenate([np.asarray(sigma2_w) + sigma2_eps, np.full(d - m, sigma2_eps)])
    return PpcaModel(mu=mu, phi=phi, sigma2_w=sigma2_w, sigma2_eps=sigma2_eps, eigenvalues=lam, n=n, logL=0.0)


def random_instance(rng, d=None, m=None):
    """A random model with orthonormal basis plus one trial vector drawn from it."""
    d = int(rng.integers(4, 9)) if d is None else d
    m = int(rng.integers(1, 4)) if m is None else m
    phi, _ = np.linalg.qr(rng.standard_normal((d, m)))
    sigma2_w = np.sort(rng.uniform(0.1, 2.0, m))[::-1]
    mu = rng.standard_normal(d)
    noise = rng.uniform(0.05, 1.0)
    w = rng.standard_normal(m) * np.sqrt(sigma2_w)
    y = phi @ w + mu + rng.standard_normal(d) * np.sqrt(noise)
    return make_model(phi, mu, sigma2_w, noise), y


@pytest.fixture
def rng():
    return np.random.default_rng(20160427)


@pytest.fixture(scope="session")
def sweep_rows():
    """Training statistics of the noisy and clean model-problem sets over 20 seeds."""
    from probrom.bench import seed_sweep

    return seed_sweep(range(20))


@pytest.fixture(scope="session")
def clean_ensemble():
    from probrom.bench import training_spec
    from probrom.synth import generate

    return generate(training_spec("clean", 0))


@pytest.fixture(scope="session")
def noisy_ensemble():
    from probrom.bench import training_spec
    from probrom.synth import generate

    return generate(training_spec("noisy", 0))


def centered_with_spectrum(lam, n, rng):
    """Rows with zero mean whose biased covariance is exactly diag(lam) up to round-off."""
    d = len(lam)
    A = rng.standard_normal((n, d))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(A)
    return np.sqrt(n) * Q * np.sqrt(lam)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
