from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dspin import _pykernels as py
from dspin import kernels

ck = pytest.importorskip("dspin._ckernels")

rotvecs = arrays(np.float64, st.tuples(st.integers(1, 60), st.just(3)), elements=st.floats(-3.0, 3.0))


@settings(max_examples=60, deadline=None)
@given(rotvecs)
def test_backend_parity(w):
    np.testing.assert_allclose(ck.chain_product(w), py.chain_product(w), atol=1e-12)
    np.testing.assert_allclose(ck.cumulative_product(w), py.cumulative_product(w), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(rotvecs)
def test_products_stay_unit(w):
    q = py.cumulative_product(w)
    assert q.shape == (len(w) + 1, 4)
    np.testing.assert_allclose(q[0], [1, 0, 0, 0])
    np.testing.assert_allclose(np.linalg.norm(q, axis=-1), 1.0, atol=1e-12)
    np.testing.assert_allclose(q[-1], py.chain_product(w), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (2, 3), elements=st.floats(-2.0, 2.0)))
def test_later_factor_is_leftmost(w):
    a, b = py.rotvec_to_quat(w[0]), py.rotvec_to_quat(w[1])
    np.testing.assert_allclose(py.chain_product(w), py.qmul(b, a), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (3,), elements=st.floats(-5.0, 5.0)))
def test_inverse_rotation_cancels(w):
    q = py.chain_product(np.stack([w, -w]))
    np.testing.assert_allclose(q, [1, 0, 0, 0], atol=1e-14)


def test_empty_and_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    np.testing.assert_allclose(py.chain_product(np.zeros((0, 3))), [1, 0, 0, 0])
    np.testing.assert_allclose(ck.chain_product(np.zeros((0, 3))), [1, 0, 0, 0])


def test_python_backend_end_to_end():
    import subprocess
    import sys

    code = (
        "import numpy as np\n"
        "from dspin import kernels, curves, transport\n"
        "c = curves.viviani('sphere')\n"
        "U = transport.path_ordered_propagator(c, 0.0, c.length, 5000)\n"
        "print(kernels.BACKEND, *U.q)\n"
    )
    env = dict(__import__("os").environ, DSPIN_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True).stdout.split()
    assert out[0] == "python"
    from dspin import curves, transport

    c = curves.viviani("sphere")
    U = transport.path_ordered_propagator(c, 0.0, c.length, 5000)
    np.testing.assert_allclose([float(x) for x in out[1:]], U.q, atol=1e-12)
