"""Selection of the event-loop kernel implementation.

Prefers the compiled extension; falls back to the NumPy version when it is
not built.  Set SPINLDP_PURE=1 to force the fallback (the benchmark uses
this to time both).  Either way the simulated paths are bit-identical.
"""

import os

if os.environ.get("SPINLDP_PURE"):
    from . import _glauber_fallback as _impl
else:
    try:
        from . import _glauber_core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _glauber_fallback as _impl


def using_compiled_core() -> bool:
    return bool(_impl.COMPILED)


def get_impl(force_pure: bool = False):
    if force_pure:
        from . import _glauber_fallback

        return _glauber_fallback
    return _impl
