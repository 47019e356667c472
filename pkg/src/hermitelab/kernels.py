"""Inner-loop backend: the compiled extension when importable, else numpy.

Set ``HERMITELAB_PURE=1`` to force the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("HERMITELAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def hermite_eval(q, x):
    """Probabilists' Hermite polynomial ``He_q`` evaluated elementwise."""
    import numpy as np

    return _impl.hermite_eval(int(q), np.ascontiguousarray(x, dtype=np.float64))


def hermite_block_sums(xi, q, m):
    """``sum_{j<m} He_q(xi[b*m + j])`` for each complete block ``b``."""
    import numpy as np

    return _impl.hermite_block_sums(np.ascontiguousarray(xi, dtype=np.float64), int(q), int(m))


def linear_recursion(a, u, y0=0.0):
    """First-order recursion ``y[k] = a*y[k-1] + u[k]``, ``y[-1] = y0``."""
    import numpy as np

    return _impl.linear_recursion(float(a), np.ascontiguousarray(u, dtype=np.float64), float(y0))
