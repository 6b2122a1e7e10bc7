"""Simulation kernel dispatch.

At import we pick the compiled extension when it is available, falling
back to the pure-Python reference otherwise. Set POPERGM_PURE_PYTHON=1
to force the fallback. The two backends run the same floating-point
operations in the same order, so a chain driven by either makes the
same accept/reject decisions.
"""

from __future__ import annotations

import os

import numpy as np

from ..model import TermProgram
from . import reference

_impl = reference

if os.environ.get("POPERGM_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _speed as _compiled

        _impl = _compiled
    except ImportError:
        pass


def active_backend() -> str:
    """Name of the kernel backend in use: "compiled" or "python"."""
    return _impl.BACKEND_NAME


def run_toggle_chain(
    adj: np.ndarray,
    stats: np.ndarray,
    theta: np.ndarray,
    program: TermProgram,
    di: np.ndarray,
    dj: np.ndarray,
    uniforms: np.ndarray,
    record_every: int = 0,
    codes: np.ndarray | None = None,
) -> int:
    """Run dyad-toggle Metropolis steps in place; see reference kernel."""
    return _impl.run_toggle_chain(
        adj, stats, theta, program, di, dj, uniforms, record_every, codes
    )


def change_stats_batch(
    adj: np.ndarray, di: np.ndarray, dj: np.ndarray, program: TermProgram
) -> np.ndarray:
    """On-minus-off change statistics for many dyads, any current state."""
    di = np.ascontiguousarray(di, dtype=np.int32)
    dj = np.ascontiguousarray(dj, dtype=np.int32)
    adj = np.ascontiguousarray(adj, dtype=np.uint8)
    return _impl.change_stats_batch(adj, di, dj, program)


def change_stats(adj: np.ndarray, i: int, j: int, program: TermProgram) -> np.ndarray:
    """Change statistics of a single dyad, any current state."""
    di = np.array([i], dtype=np.int32)
    dj = np.array([j], dtype=np.int32)
    return change_stats_batch(adj, di, dj, program)[0]


def encode_graph(adj: np.ndarray) -> int:
    """Bit code of a small graph (dyads in upper-triangle order)."""
    return reference.encode_graph(adj)
