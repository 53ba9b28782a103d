"""Backend selection for the SU(2) product kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over. ``DSPIN_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
chain_product = _pykernels.chain_product
cumulative_product = _pykernels.cumulative_product

if os.environ.get("DSPIN_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        chain_product = _ckernels.chain_product
        cumulative_product = _ckernels.cumulative_product

qmul = _pykernels.qmul
rotvec_to_quat = _pykernels.rotvec_to_quat

__all__ = ["BACKEND", "chain_product", "cumulative_product", "qmul", "rotvec_to_quat"]
