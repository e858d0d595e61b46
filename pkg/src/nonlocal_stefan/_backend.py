"""Pick the compiled core when it is importable, else the numpy fallback.

Set ``NONLOCAL_STEFAN_PURE=1`` to force the fallback.
"""
import os

from . import _pure

NAME = "pure"
impl = _pure

if os.environ.get("NONLOCAL_STEFAN_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:  # extension not built
        pass
    else:
        impl = _core
        NAME = "compiled"

__all__ = ["impl", "NAME", "_pure"]
