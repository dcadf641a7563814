"""Hot kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly, unless the environment
variable ``FBDOF_NUMBA`` is set to ``0`` (or ``false``/``no``/``off``).
Both paths share signatures; ``tests/test_kernels.py`` checks they agree.
"""

import os

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None


def _wants_numba():
    flag = os.environ.get("FBDOF_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


if numba_backend is not None and _wants_numba():
    _active = numba_backend
    BACKEND = "numba"
else:
    _active = numpy_backend
    BACKEND = "numpy"

merge_terms = _active.merge_terms
densify = _active.densify
sparsify = _active.sparsify
singular_values = _active.singular_values
cholesky_logdet = _active.cholesky_logdet

__all__ = [
    "BACKEND",
    "merge_terms",
    "densify",
    "sparsify",
    "singular_values",
    "cholesky_logdet",
    "numpy_backend",
    "numba_backend",
]
