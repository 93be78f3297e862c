"""Hot pixel kernels: compiled core with a numpy fallback chosen at import.

Set ``SEMCOM_PURE=1`` to force the fallback.  ``active_backend()`` reports
which one is in use; ``available_backends()`` lists both for tests and
benchmarks.
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("SEMCOM_PURE"):
    _impl = _fallback
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

label_components = _impl.label_components
dilate = _impl.dilate
median_filter = _impl.median_filter


def active_backend() -> str:
    return "fallback" if _impl is _fallback else "native"


def available_backends() -> dict[str, object]:
    backends: dict[str, object] = {"fallback": _fallback}
    try:
        from . import _native

        backends["native"] = _native
    except ImportError:
        pass
    return backends
