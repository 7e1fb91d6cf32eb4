"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always available.  ``CARRIERTAG_KERNELS=numpy|compiled`` forces a backend
(``compiled`` raises if the extension is missing).  ``use_backend`` switches
at runtime, which the equivalence tests and benchmark rely on.
"""

from __future__ import annotations

import os

from . import numpy_backend

_BACKENDS = {"numpy": numpy_backend}

try:
    from carriertag.nn import _lstm_cy as _compiled
except ImportError:
    _compiled = None
else:
    _BACKENDS["compiled"] = _compiled

_active_name = "numpy"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def use_backend(name: str) -> None:
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {', '.join(available_backends())}"
        )
    global _active_name
    _active_name = name


def active_backend() -> str:
    return _active_name


def lstm_seq_forward(preact, w_hidden):
    return _BACKENDS[_active_name].lstm_seq_forward(preact, w_hidden)


def lstm_seq_backward(d_h_seq, gates, cells, tanh_cells, w_hidden):
    return _BACKENDS[_active_name].lstm_seq_backward(
        d_h_seq, gates, cells, tanh_cells, w_hidden
    )


_forced = os.environ.get("CARRIERTAG_KERNELS")
if _forced == "compiled" and "compiled" not in _BACKENDS:
    raise ImportError(
        "CARRIERTAG_KERNELS=compiled but the compiled extension is not built"
    )
if _forced:
    use_backend(_forced)
elif "compiled" in _BACKENDS:
    use_backend("compiled")
