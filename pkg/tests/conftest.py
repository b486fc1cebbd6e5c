import numpy as np
import pytest


def rand_unit(rng, L, real=False):
    x = rng.standard_normal(L)
    if not real:
        x = x + 1j * rng.standard_normal(L)
    return x / np.linalg.norm(x)


def rand_psd(rng, L, rank=None):
    r = L if rank is None else rank
    V = rng.standard_normal((L, r)) + 1j * rng.standard_normal((L, r))
    X = V @ V.conj().T
    return X / np.trace(X).real


def loop_shift_matrix(tau, nu, L):
    """Entry-by-entry S_(tau,nu), written independently of the package."""
    S = np.zeros((L, L), dtype=complex)
    for m in range(L):
        for n in range(L):
            if m == (n + tau) % L:
                S[m, n] = np.exp(2j * np.pi * nu * m / L)
    return S


def dense_conjugation(X, atoms, L):
    """sum w S X S^* over (tau, nu, w) atoms using explicit matrices."""
    out = np.zeros((L, L), dtype=complex)
    for tau, nu, w in atoms:
        S = loop_shift_matrix(tau, nu, L)
        out += w * S @ X @ S.conj().T
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
