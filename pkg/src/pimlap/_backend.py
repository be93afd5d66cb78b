"""Backend selection: compiled pair scan when available, NumPy otherwise.

Set PIMLAP_BACKEND=python to force the fallback (used by the benchmark and
the backend-equivalence tests).
"""
import os

from . import _pairscan_py

_forced = os.environ.get("PIMLAP_BACKEND", "").lower()

if _forced == "python":
    _impl = _pairscan_py
elif _forced in ("", "cython", "auto"):
    try:
        from . import _pairscan_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _pairscan_py
else:
    raise ValueError(f"unknown PIMLAP_BACKEND value {_forced!r}")

BACKEND = _impl.BACKEND
find_pairs_brute = _impl.find_pairs_brute
find_pairs_cell = _impl.find_pairs_cell


def backends_available():
    """Names of importable pair-scan implementations."""
    names = ["python"]
    try:
        from . import _pairscan_cy  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_impl(name):
    if name == "python":
        return _pairscan_py
    if name == "cython":
        from . import _pairscan_cy

        return _pairscan_cy
    raise ValueError(f"unknown backend {name!r}")
