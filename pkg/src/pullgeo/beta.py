"""Sin/sinh ratio factors governing geodesic spreading and log/exp distortion.

All three functions take a curvature-operator eigenvalue ``kappa`` and switch
between the hyperbolic (kappa < 0), flat (kappa = 0) and spherical
(kappa > 0) branches.  Near zero a 3-term Taylor series removes the
catastrophic cancellation of the ratio forms.
"""

from __future__ import annotations

import numpy as np

from .errors import KappaTooLarge

# Branch switch: below this the series expansions are exact to ~1e-25.
SERIES_CUTOFF = 1e-8
KAPPA_MAX = np.pi**2 - 1e-9


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if kappa >= KAPPA_MAX:
        raise KappaTooLarge(f"kappa = {kappa} >= pi^2; sin(sqrt(kappa)) degenerates")
    return kappa


def beta_geo(kappa: float, t: float) -> float:
    """Geodesic spreading factor: sinh(sqrt(-k) t)/sinh(sqrt(-k)) and analogues.

    Continuous in kappa at 0 where it equals t; requires kappa < pi^2.
    """
    kappa = _check_kappa(kappa)
    t = float(t)
    if abs(kappa) < SERIES_CUTOFF:
        # sin(s t)/sin(s) with s^2 = kappa, expanded to second order in kappa
        c2 = t**4 / 120.0 - t**2 / 36.0 + 1.0 / 36.0 - 1.0 / 120.0
        return t * (1.0 + kappa * (1.0 - t * t) / 6.0 + kappa * kappa * c2)
    if kappa < 0:
        s = np.sqrt(-kappa)
        return float(np.sinh(s * t) / np.sinh(s))
    s = np.sqrt(kappa)
    return float(np.sin(s * t) / np.sin(s))


def beta_logpoint(kappa: float) -> float:
    """Log-map contraction factor: sqrt(-k)/sinh(sqrt(-k)) and analogues."""
    kappa = _check_kappa(kappa)
    if abs(kappa) < SERIES_CUTOFF:
        # x/sin(x) = 1 + x^2/6 + 7x^4/360 with x^2 = kappa
        return 1.0 + kappa / 6.0 + 7.0 * kappa * kappa / 360.0
    if kappa < 0:
        s = np.sqrt(-kappa)
        return float(s / np.sinh(s))
    s = np.sqrt(kappa)
    return float(s / np.sin(s))


def beta_exp(kappa: float) -> float:
    """Exp-map expansion factor: sinh(sqrt(-k))/sqrt(-k) and analogues.

    Reciprocal of :func:`beta_logpoint` on every branch.
    """
    kappa = _check_kappa(kappa)
    if abs(kappa) < SERIES_CUTOFF:
        # sin(x)/x = 1 - x^2/6 + x^4/120 with x^2 = kappa
        return 1.0 - kappa / 6.0 + kappa * kappa / 120.0
    if kappa < 0:
        s = np.sqrt(-kappa)
        return float(np.sinh(s) / s)
    s = np.sqrt(kappa)
    return float(np.sin(s) / s)
