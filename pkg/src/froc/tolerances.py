"""Numerical tolerances shared by every module.

``PREDICATE_TOL`` governs geometric yes/no decisions (touching, containment,
hypograph membership). ``ASSERT_TOL`` is the slack used when checking
postconditions such as the fairness gap. The predicate tolerance can be
overridden with the ``FROC_TOLERANCE`` environment variable.
"""

from __future__ import annotations

import os

DEFAULT_PREDICATE_TOL = 1e-12
ASSERT_TOL = 1e-9


def _predicate_tol_from_env() -> float:
    raw = os.environ.get("FROC_TOLERANCE")
    if raw is None or raw.strip() == "":
        return DEFAULT_PREDICATE_TOL
    try:
        value = float(raw)
    except ValueError as exc:
        raise ValueError(f"FROC_TOLERANCE must be a float, got {raw!r}") from exc
    if not value >= 0.0:
        raise ValueError(f"FROC_TOLERANCE must be nonnegative, got {value}")
    return value


PREDICATE_TOL = _predicate_tol_from_env()
