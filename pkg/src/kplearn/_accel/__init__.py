"""Backend selection for the ragged-data hot loops.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing or when ``KPLEARN_DISABLE_EXT=1`` is set.  Both
modules export the same functions with identical contracts, and
``BACKEND`` reports which one is active.
"""

import os

from . import _fallback

if os.environ.get("KPLEARN_DISABLE_EXT", "") == "1":
    _impl = _fallback
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
nu_columns = _impl.nu_columns
gram_blocks = _impl.gram_blocks
loss_and_columns = _impl.loss_and_columns
integral_gaussian_gram = _impl.integral_gaussian_gram
integral_gaussian_cross = _impl.integral_gaussian_cross

__all__ = [
    "BACKEND",
    "nu_columns",
    "gram_blocks",
    "loss_and_columns",
    "integral_gaussian_gram",
    "integral_gaussian_cross",
]
