from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from secslot import _kernels_py, kernels

try:
    from secslot import _kernels as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_backend_selected():
    assert kernels.BACKEND == ("cython" if compiled is not None else "python")


def test_env_forces_fallback():
    env = dict(os.environ, SECSLOT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from secslot import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_point_queue_small():
    served = _kernels_py.point_queue(np.array([[1000.0, 0, 0], [10, 900, 0]]), np.full(3, 800.0))
    np.testing.assert_array_equal(served, [[800, 200, 0], [10, 800, 100]])


def test_realized_pmf_small():
    x = np.array([[0.0, 1.0]])
    beta = np.array([[0.4, 0.6]])
    p = _kernels_py.realized_pmf(x, np.array([[0.5, 0.7]]), beta)
    np.testing.assert_allclose(p, [[0.3 * 0.4, 0.7 + 0.3 * 0.6]])
    lit = _kernels_py.realized_pmf(x, np.array([[0.5, 0.7]]), beta, literal=True)
    np.testing.assert_allclose(lit, [[0.7 * 0.4, 0.7 + 0.7 * 0.6]])


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), R=st.integers(1, 8), T=st.integers(1, 60))
def test_point_queue_backends_agree(seed, R, T):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 1500, size=(R, T)).astype(float)
    cap = rng.integers(0, 1000, size=T).astype(float)
    np.testing.assert_array_equal(compiled.point_queue(counts, cap), _kernels_py.point_queue(counts, cap))


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(1, 20), W=st.integers(1, 16), literal=st.booleans())
def test_realized_pmf_backends_agree(seed, N, W, literal):
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(W), size=N)
    alpha = rng.normal(0.7, 0.3, size=(N, W))
    beta = rng.dirichlet(np.ones(W), size=N)
    np.testing.assert_allclose(compiled.realized_pmf(x, alpha, beta, literal),
                               _kernels_py.realized_pmf(x, alpha, beta, literal), rtol=1e-14, atol=1e-15)


@needs_compiled
def test_compiled_accepts_readonly_inputs():
    cap = np.full(3, 800.0)
    cap.setflags(write=False)
    counts = np.array([[1000.0, 0, 0]])
    counts.setflags(write=False)
    np.testing.assert_array_equal(compiled.point_queue(counts, cap), [[800, 200, 0]])
