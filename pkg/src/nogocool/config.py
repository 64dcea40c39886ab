"""Numerical tolerances and runtime switches shared by every module."""

from __future__ import annotations

import importlib.util
import os
from dataclasses import dataclass

JIT_ENV_FLAG = "NOGO_COOL_DISABLE_JIT"
THREADS_ENV_FLAG = "NOGO_COOL_THREADS"


@dataclass(frozen=True)
class Tolerances:
    """Absolute tolerances used for validation and comparison.

    Every check in the package reads from one instance of this record so
    property tests and production code agree on what "equal" means.
    """

    hermitian: float = 1e-12
    trace: float = 1e-10
    psd: float = 1e-10
    unitary: float = 1e-10
    spectrum: float = 1e-10
    partial_trace: float = 1e-12
    probability_sum: float = 1e-9
    bound_slack: float = 1e-8
    pairing: float = 1e-10
    ratio: float = 1e-9
    lindblad_trace: float = 1e-8
    lindblad_positivity: float = 1e-6
    lindblad_step: float = 0.1
    violation_margin: float = 1e-6
    marginal_factor: float = 10.0
    haar_samples: int = 10_000
    haar_seed: int = 0


DEFAULT_TOLERANCES = Tolerances()


def jit_enabled() -> bool:
    """Return True when numba kernels should be used.

    Set ``NOGO_COOL_DISABLE_JIT=1`` to force the pure-numpy path. The flag is
    read on every call so tests can toggle it with ``monkeypatch``.
    """
    flag = os.environ.get(JIT_ENV_FLAG, "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    return importlib.util.find_spec("numba") is not None


def thread_cap(default: int | None = None) -> int:
    raw = os.environ.get(THREADS_ENV_FLAG)
    if raw is None or not raw.strip():
        return default or (os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)
