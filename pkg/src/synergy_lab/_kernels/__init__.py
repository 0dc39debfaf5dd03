"""Hot-loop kernels with a compiled core and a pure numpy fallback.

The compiled extension ``_native`` is preferred when it imported cleanly;
set ``SYNERGY_LAB_BACKEND=numpy`` or ``=native`` to force a choice. Both
backends consume pre-drawn uniform variates in the same order, so sampled
spins agree bit for bit and float outputs agree to rounding.

``SYNERGY_LAB_THREADS`` caps the worker threads used by chunked table
builders (default: all cores); results are written to disjoint slices, so
outputs do not depend on the thread count.
"""
import os

_requested = os.environ.get("SYNERGY_LAB_BACKEND", "auto").strip().lower() or "auto"

if _requested in ("auto", "native"):
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        if _requested == "native":
            raise ImportError(
                "SYNERGY_LAB_BACKEND=native but the compiled kernels are not built"
            ) from None
        from . import _numpy as _impl
        BACKEND = "numpy"
elif _requested == "numpy":
    from . import _numpy as _impl
    BACKEND = "numpy"
else:
    raise ImportError(f"unknown SYNERGY_LAB_BACKEND value {_requested!r}")

cd_stats = _impl.cd_stats
gibbs_chain = _impl.gibbs_chain
wht_inplace = _impl.wht_inplace
moebius_inplace = _impl.moebius_inplace


def thread_cap() -> int:
    """Worker-thread limit for chunked table builders."""
    raw = os.environ.get("SYNERGY_LAB_THREADS", "").strip()
    if raw:
        cap = int(raw)
        if cap < 1:
            raise ValueError("SYNERGY_LAB_THREADS must be >= 1")
        return cap
    return os.cpu_count() or 1
