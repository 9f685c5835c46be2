"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it imports; otherwise the numpy
reference in ``_pykernels`` is used. Setting ``CARADORY_PURE_PYTHON=1`` forces
the reference backend.

``argmin_dot`` and ``max_pairwise_distance`` always come from the reference
module: they are BLAS or vectorized-``pow`` bound, and a compiled scalar loop
measured slower than numpy for both.
"""
import os

from caradory import _pykernels

CONVERGED = _pykernels.CONVERGED
ITER_CAP = _pykernels.ITER_CAP
STALLED = _pykernels.STALLED

_impl = _pykernels
BACKEND = "python"
if os.environ.get("CARADORY_PURE_PYTHON", "") in ("", "0"):
    try:
        from caradory import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

argmin_dot = _pykernels.argmin_dot
max_pairwise_distance = _pykernels.max_pairwise_distance
nep_argmin = _impl.nep_argmin
simplex_correction = _impl.simplex_correction


def available_backends():
    """Map backend name to module for every backend importable here."""
    out = {"python": _pykernels}
    try:
        from caradory import _ckernels
    except ImportError:
        return out
    out["cython"] = _ckernels
    return out
