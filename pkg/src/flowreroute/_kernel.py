"""Kernel selection: compiled extension if importable, pure Python otherwise.

Set FLOWREROUTE_PURE=1 to force the pure backend.
"""

from __future__ import annotations

import os

from . import _kernel_py

_compiled = None
if not os.environ.get("FLOWREROUTE_PURE"):
    try:
        from . import _speedups as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None


def backend_name() -> str:
    return "compiled" if _compiled is not None else "pure"


def kernel_for(net, backend: str | None = None):
    """The state kernel for ``net``, cached on the network object."""
    key = backend or backend_name()
    cache = net._kernel_cache
    if key not in cache:
        if key == "compiled":
            if _compiled is None:
                raise RuntimeError("compiled kernel is not available")
            cache[key] = _compiled.StateKernel(**net.kernel_tables())
        else:
            cache[key] = _kernel_py.StateKernel(**net.kernel_tables())
    return cache[key]
