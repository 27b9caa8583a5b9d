"""Runtime backend selection for the hot numeric kernels.

The pairwise patch-distance kernels have two implementations: a numba
``@njit`` version and a pure-numpy fallback.  Selection order:

* ``PNP_BACKEND=numpy`` forces the numpy path,
* ``PNP_BACKEND=numba`` requires numba (raises if it cannot be imported),
* unset: numba when importable, numpy otherwise.

``PNP_DENSE_MAX`` overrides the desk-scale cap on dense materialization
(default 4096 unknowns).
"""

from __future__ import annotations

import os

from .errors import ConfigError

try:
    import numba  # noqa: F401

    _NUMBA_OK = True
except ImportError:  # pragma: no cover - exercised only without numba
    _NUMBA_OK = False

DEFAULT_DENSE_MAX = 4096


def numba_available() -> bool:
    return _NUMBA_OK


def use_numba() -> bool:
    """Resolve the backend flag at call time (so tests can flip the env var)."""
    flag = os.environ.get("PNP_BACKEND", "").strip().lower()
    if flag in ("", "auto"):
        return _NUMBA_OK
    if flag == "numpy":
        return False
    if flag == "numba":
        if not _NUMBA_OK:
            raise ConfigError("PNP_BACKEND=numba but numba is not importable")
        return True
    raise ConfigError(f"unknown PNP_BACKEND value: {flag!r} (expected numba|numpy)")


def dense_cap() -> int:
    raw = os.environ.get("PNP_DENSE_MAX", "")
    if not raw:
        return DEFAULT_DENSE_MAX
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"PNP_DENSE_MAX must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ConfigError("PNP_DENSE_MAX must be >= 1")
    return cap


def check_dense(n: int, what: str) -> None:
    cap = dense_cap()
    if n > cap:
        raise ConfigError(
            f"{what}: n={n} exceeds the dense desk-scale cap {cap} "
            "(set PNP_DENSE_MAX to override)"
        )
