"""Kernel selector: the compiled extension when built, else the pure mirror.

``COMPILED_KERNELS`` records which one was picked so benchmarks and bug
reports can say so.
"""
from __future__ import annotations

try:
    from . import _kernels as _impl  # type: ignore[attr-defined]

    COMPILED_KERNELS = True
except ImportError:  # extension not built — pure fallback
    from . import _kernels_py as _impl  # type: ignore[no-redef]

    COMPILED_KERNELS = False

mix_seed = _impl.mix_seed
anneal = _impl.anneal
tabu = _impl.tabu
