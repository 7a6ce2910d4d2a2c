"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when importable; otherwise (or
when ``MLDFS_PURE_PYTHON=1``) the numpy implementations in ``_pykernels``.
"""

import os

from . import _pykernels

FAM_ADD = _pykernels.FAM_ADD
FAM_SUB = _pykernels.FAM_SUB
FAM_MUL = _pykernels.FAM_MUL
FAM_LOGIC = _pykernels.FAM_LOGIC
FAM_SHIFT = _pykernels.FAM_SHIFT

_compiled = None
if os.environ.get("MLDFS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

backend = _compiled if _compiled is not None else _pykernels
BACKEND_NAME = "cython" if _compiled is not None else "python"

carry_chain = backend.carry_chain
carry_chain_batch = backend.carry_chain_batch
delay_scalar = backend.delay_scalar
delay_batch = backend.delay_batch
best_split = backend.best_split
forest_vote = backend.forest_vote


def backends():
    """All importable backends keyed by name (for tests and benchmarks)."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
