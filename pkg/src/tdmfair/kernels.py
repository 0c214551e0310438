"""Hot solver kernels with backend selection at import time.

The compiled ``_ckernels`` extension is preferred. Set ``TDMFAIR_PURE_PYTHON=1``
to force the pure-Python fallback, which is also used when the extension is
not built. Both backends take and fill 1-D float64 arrays.
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("TDMFAIR_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
EQUALIZED = _pykernels.EQUALIZED


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


def _vec(x):
    return np.ascontiguousarray(x, dtype=float)


class Kernels:
    """Array-level wrappers around one backend module."""

    def __init__(self, impl):
        self.impl = impl
        self.name = impl.BACKEND
        self._py = impl is _pykernels

    def _in(self, x):
        x = _vec(x)
        return x.tolist() if self._py else x

    def _out(self, n):
        return [0.0] * n if self._py else np.zeros(n)

    def min_time_for_rate(self, c, a, max_iter):
        return self.impl.min_time_for_rate(float(c), float(a), int(max_iter))

    def ta_equalize(self, a, rate_tol, max_iter):
        a = _vec(a)
        times = self._out(a.size)
        c, it, width = self.impl.ta_equalize(self._in(a), float(rate_tol), int(max_iter), times)
        return c, np.asarray(times, dtype=float), it, width

    def tapa_equalize(self, g, pbar, max_iter):
        g = _vec(g)
        times, powers = self._out(g.size), self._out(g.size)
        c, it, res = self.impl.tapa_equalize(self._in(g), float(pbar), int(max_iter), times, powers)
        return c, np.asarray(times, dtype=float), np.asarray(powers, dtype=float), it, res

    def np_equalize(self, powers, eta, length, max_iter):
        powers = _vec(powers)
        d = self._out(powers.size)
        c, it, width, status = self.impl.np_equalize(
            self._in(powers), float(eta), float(length), int(max_iter), d)
        return c, np.asarray(d, dtype=float), it, width, status

    def powers_for_areas(self, g, areas, pbar, max_iter):
        g = _vec(g)
        out = self._out(g.size)
        c, it, width = self.impl.powers_for_areas(
            self._in(g), self._in(areas), float(pbar), int(max_iter), out)
        return c, np.asarray(out, dtype=float), it, width


default = Kernels(_impl)


def get(backend=None):
    """Kernels for ``backend`` (``"cython"``/``"python"``), or the import-time default."""
    if backend is None:
        return default
    backends = available_backends()
    if backend not in backends:
        raise ValueError(f"kernel backend {backend!r} is not available")
    return Kernels(backends[backend])
