"""Backend selection for the click assembly kernels.

Imports the compiled Cython extension when available and falls back to the
pure-numpy twin otherwise. Set HERALDSIM_BACKEND=python (or =c) to force a
backend; forcing `c` raises if the extension was not built.
"""

from __future__ import annotations

import os

from . import _assembly_py

_forced = os.environ.get("HERALDSIM_BACKEND", "").strip().lower()

_impl = None
if _forced in ("", "c"):
    try:
        from . import _assembly as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = None
        if _forced == "c":
            raise ImportError(
                "HERALDSIM_BACKEND=c requested but the compiled extension "
                "heraldsim._assembly is not available; build it with "
                "`pip install -e .` or `python setup.py build_ext --inplace`"
            )
if _impl is None:
    _impl = _assembly_py

BACKEND: str = _impl.BACKEND
assemble_trials = _impl.assemble_trials
window_counts = _impl.window_counts


def available_backends() -> dict[str, object]:
    """All importable backends, keyed by name (used by tests and benchmarks)."""
    out: dict[str, object] = {"python": _assembly_py}
    try:
        from . import _assembly  # type: ignore[attr-defined]
        out["c"] = _assembly
    except ImportError:
        pass
    return out
