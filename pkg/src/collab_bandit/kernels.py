"""Backend selection for the hot reward-draw loop.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``COLLAB_BANDIT_BACKEND=python`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
draw_counts = _fallback.draw_counts
draw_indices = _fallback.draw_indices

if os.environ.get("COLLAB_BANDIT_BACKEND", "").lower() != "python":
    try:
        from . import _kernels
    except ImportError:  # extension not built
        _kernels = None
    if _kernels is not None:
        BACKEND = "cython"
        draw_counts = _kernels.draw_counts
        draw_indices = _kernels.draw_indices


def available_backends():
    """Map of backend name to ``(draw_counts, draw_indices)``."""
    out = {"python": (_fallback.draw_counts, _fallback.draw_indices)}
    try:
        from . import _kernels as compiled
    except ImportError:
        return out
    out["cython"] = (compiled.draw_counts, compiled.draw_indices)
    return out
