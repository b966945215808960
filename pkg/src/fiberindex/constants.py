"""Numerical constants and the default tolerance ledger.

Every factor of 2*pi used by the package is read from here.
"""

import math
from contextlib import contextmanager

TWO_PI = 2.0 * math.pi
EULER_GAMMA = 0.57721566490153286060651209008240243

# zeta(0), zeta(-1) in closed form
ZETA_AT_ZERO = -0.5
ZETA_AT_MINUS_ONE = -1.0 / 12.0

# Chern-Weil normalization of the first Chern class: c1 = (i / 2 pi) tr F
CHERN_WEIL = 1j / TWO_PI

# Calibration between the Chern-Simons residue pairing and K-theory integers.
# Fixed once on the shift symbol at a point cycle (pairing = +1 = oracle
# idempotent trace) and frozen; ``fiberindex.connecting.calibrate`` recomputes it.
KAPPA = 1.0

# Default tolerance ledger (name -> absolute tolerance)
TOLERANCES = {
    "identity": 1e-8,
    "exact_cancellation": 1e-10,
    "zeta_special": 1e-12,
    "fedosov": 1e-9,
    "boundary_formula": 1e-8,
    "transgression": 1e-10,
    "finite_model": 1e-10,
    "similarity": 1e-6,
    "oracle_delta": 1e-3,
    "oracle_stability": 1e-4,
    "integer_gap": 1e-2,
}


_OVERRIDES: dict = {}


def tolerance(name: str, scale: float = 1.0) -> float:
    return _OVERRIDES.get(name, TOLERANCES[name]) * scale


def tolerance_ledger(scale: float = 1.0) -> dict:
    """The tolerances currently in force (overrides applied, scaled)."""
    return {k: tolerance(k, scale) for k in TOLERANCES}


@contextmanager
def tolerance_overrides(values: dict):
    """Temporarily replace entries of the tolerance ledger."""
    unknown = set(values) - set(TOLERANCES)
    if unknown:
        raise KeyError(f"unknown tolerances: {sorted(unknown)}")
    saved = dict(_OVERRIDES)
    _OVERRIDES.update(values)
    try:
        yield
    finally:
        _OVERRIDES.clear()
        _OVERRIDES.update(saved)
