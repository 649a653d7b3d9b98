"""Vote-accumulation kernel, compiled when available.

The Cython extension and the numpy fallback implement the identical contract
(see ``accum_np.accumulate_pairs``); the compiled one is picked at import
unless ``VOTELOC_PURE_PYTHON`` is set.  ``BACKEND`` names the active one.
"""

import os

from . import accum_np

if os.environ.get("VOTELOC_PURE_PYTHON"):
    accumulate_pairs = accum_np.accumulate_pairs
    BACKEND = "numpy"
else:
    try:
        from . import _accum_cy

        accumulate_pairs = _accum_cy.accumulate_pairs
        BACKEND = "cython"
    except ImportError:
        accumulate_pairs = accum_np.accumulate_pairs
        BACKEND = "numpy"

__all__ = ["accumulate_pairs", "BACKEND", "accum_np"]
