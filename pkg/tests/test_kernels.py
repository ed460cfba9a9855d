"""Compiled and pure kernel backends must be interchangeable bit for bit."""

import numpy as np
import pytest

from particle import _kernels
from particle._kernels import pure


def test_backend_reports_name():
    assert _kernels.BACKEND in ("compiled", "pure")
    assert pure.BACKEND == "pure"


def test_lloyd_backends_agree_exactly():
    rng = np.random.default_rng(51)
    for trial in range(15):
        n = int(rng.integers(16, 400))
        d = int(rng.integers(2, 10))
        k = int(rng.integers(2, 8))
        x = rng.normal(size=(n, d))
        init = x[rng.choice(n, size=k, replace=False)].copy()
        la, ca, ia, na, ta = _kernels.lloyd(x, init, 500)
        lb, cb, ib, nb, tb = pure.lloyd(x, init, 500)
        assert np.array_equal(np.asarray(la), np.asarray(lb)), f"trial {trial}"
        np.testing.assert_allclose(np.asarray(ca), cb, rtol=1e-12, atol=1e-12)
        assert ia == pytest.approx(ib, rel=1e-12, abs=1e-12)
        assert na == nb
        np.testing.assert_allclose(np.asarray(ta), tb, rtol=1e-12, atol=1e-12)


def test_lloyd_backends_agree_with_duplicates_and_empty_reseeds():
    rng = np.random.default_rng(53)
    # Duplicated rows plus k close to n forces empty clusters and ties.
    base = rng.normal(size=(10, 3))
    x = np.vstack([base, base, base])
    init = np.vstack([base[:4], base[:2] + 1e3])  # two far-off empties
    la, ca, ia, _, _ = _kernels.lloyd(x, init, 200)
    lb, cb, ib, _, _ = pure.lloyd(x, init, 200)
    assert np.array_equal(np.asarray(la), np.asarray(lb))
    np.testing.assert_allclose(np.asarray(ca), cb, rtol=1e-12, atol=1e-12)


def test_fh_backends_agree_exactly():
    rng = np.random.default_rng(59)
    for trial in range(15):
        h = int(rng.integers(4, 16))
        w = int(rng.integers(4, 16))
        n = h * w
        idx = np.arange(n, dtype=np.int32).reshape(h, w)
        src = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
        dst = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
        weights = rng.uniform(0, 60, size=src.shape[0])
        order = np.argsort(weights, kind="stable")
        args = (n, src[order], dst[order], weights[order],
                float(rng.uniform(10, 200)), int(rng.integers(1, 9)))
        a = np.asarray(_kernels.fh_segment_grid(*args))
        b = np.asarray(pure.fh_segment_grid(*args))
        assert np.array_equal(a, b), f"trial {trial}"


def test_env_var_forces_pure_backend():
    import subprocess
    import sys

    code = ("import particle._kernels as k; print(k.BACKEND)")
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PARTICLE_PURE_KERNELS": "1", "PATH": "/usr/bin:/bin"},
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "pure"
