"""Shared randomized-structure generators for the test suite.

Random matrices are built so the properties the tests rely on hold by
construction (diagonal dominance for Hurwitz, row-sum scaling for
Schur) instead of by spectral checks, which keeps the generators
independent of the certificate machinery they are used to test.
"""

import numpy as np
import pytest

from obsynth.benchmarks import CORPUS_DIR


@pytest.fixture
def corpus_dir():
    return CORPUS_DIR


def random_metzler_hurwitz(rng, n):
    """Metzler matrix with a strictly dominant negative diagonal."""
    A = rng.uniform(0.0, 1.0, size=(n, n))
    np.fill_diagonal(A, 0.0)
    A[np.diag_indices(n)] = -A.sum(axis=1) - rng.uniform(0.2, 1.5, size=n)
    return A


def random_schur(rng, n):
    """Nonnegative matrix whose row sums stay strictly below one."""
    Z = rng.uniform(0.0, 1.0, size=(n, n))
    total = max(float(Z.sum(axis=1).max()), 1e-3)
    return Z * (rng.uniform(0.3, 0.9) / total)


def random_feasible_loop(rng, n, p, r):
    """(A, E, C, F, L0) with L0 an admissible observer gain.

    The closed loop (A - L0 C, E - L0 F) is drawn first with the
    required structure, then A and E are reassembled from it, so
    admissibility of L0 holds by construction.
    """
    Acl = random_metzler_hurwitz(rng, n)
    Bcl = rng.uniform(0.0, 1.0, size=(n, p))
    C = rng.uniform(0.0, 1.0, size=(r, n))
    F = rng.uniform(0.0, 0.5, size=(r, p))
    L0 = rng.uniform(-0.5, 0.5, size=(n, r))
    return Acl + L0 @ C, Bcl + L0 @ F, C, F, L0
