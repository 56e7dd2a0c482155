"""Kernel backend selection: compiled extension if available, numpy fallback.

Set FREECONV_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the backend-agreement tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("FREECONV_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

cauchy_atoms = _impl.cauchy_atoms
cauchy_atoms_d = _impl.cauchy_atoms_d
cauchy_segments = _impl.cauchy_segments
cauchy_segments_d = _impl.cauchy_segments_d
psi_circle_atoms = _impl.psi_circle_atoms
psi_circle_atoms_d = _impl.psi_circle_atoms_d
horner = _impl.horner
