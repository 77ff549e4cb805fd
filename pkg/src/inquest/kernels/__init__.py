"""Numeric kernel backend selection.

The compiled Cython core is used when it was built; otherwise the
pure-Python twin takes over transparently. Set ``INQUEST_PURE_PYTHON=1``
to force the fallback (useful for benchmarking and debugging).
"""

import os

if os.environ.get("INQUEST_PURE_PYTHON"):
    from inquest.kernels import pure as _impl

    BACKEND = "pure"
else:
    try:
        from inquest.kernels import _fast as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from inquest.kernels import pure as _impl

        BACKEND = "pure"

PROB_EPS = _impl.PROB_EPS
entropy_bits = _impl.entropy_bits
kl_bits = _impl.kl_bits
restrict_renorm = _impl.restrict_renorm
zscore = _impl.zscore
log_softmax = _impl.log_softmax

__all__ = [
    "BACKEND",
    "PROB_EPS",
    "entropy_bits",
    "kl_bits",
    "restrict_renorm",
    "zscore",
    "log_softmax",
]
