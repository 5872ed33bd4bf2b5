"""Light transport in brain tissue for sizing the implant LED.

Grey matter is scattering dominated, so photons travel much further than
the straight-line distance and plain Beer-Lambert underestimates the loss.
The modified law corrects the geometric path with a differential
pathlength factor (DPF) that grows with distance and saturates at
(1/2)*sqrt(3*mu_s'/mu_a).

All distances are in mm and intensities in mW/mm^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Violation

# Light level needed to trigger the excitatory opsin construct (blue, ~480 nm).
CHR2_INTENSITY_MIN_MW_MM2 = 8.0
CHR2_INTENSITY_MAX_MW_MM2 = 12.0


@dataclass(frozen=True)
class OpticsParams:
    """Tissue coefficients (per mm) and the stimulation intensity target."""

    mu_a_mm: float = 0.07          # absorption coefficient, 1/mm
    mu_s_prime_mm: float = 1.404   # reduced scattering coefficient, 1/mm
    g_const: float = 0.0           # medium/geometry offset in the exponent
    target_mw_mm2: float = 10.0    # required intensity at the neuron
    wavelength_nm: float = 480.0   # informational only


def validate_optics(p: OpticsParams) -> list[Violation]:
    out = []
    if not p.mu_a_mm > 0:
        out.append(Violation("physics", "optics.mu_a_mm", "must be > 0"))
    if not p.mu_s_prime_mm > 0:
        out.append(Violation("physics", "optics.mu_s_prime_mm", "must be > 0"))
    if not (CHR2_INTENSITY_MIN_MW_MM2 <= p.target_mw_mm2 <= CHR2_INTENSITY_MAX_MW_MM2):
        out.append(Violation(
            "physics", "optics.target_mw_mm2",
            f"must lie in the opsin activation band [{CHR2_INTENSITY_MIN_MW_MM2:g}, "
            f"{CHR2_INTENSITY_MAX_MW_MM2:g}] mW/mm^2"))
    return out


def _check_domain(p: OpticsParams, d_mm) -> np.ndarray:
    if not (p.mu_a_mm > 0 and p.mu_s_prime_mm > 0):
        raise ValueError("tissue coefficients must be positive")
    d = np.asarray(d_mm, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0 mm")
    return d


def dpf(p: OpticsParams, d_mm):
    """Differential pathlength factor at distance d_mm (dimensionless).

    Strictly increasing in d, zero at d=0, bounded above by
    0.5*sqrt(3*mu_s'/mu_a).
    """
    d = _check_domain(p, d_mm)
    sup = 0.5 * np.sqrt(3.0 * p.mu_s_prime_mm / p.mu_a_mm)
    out = sup * (1.0 - 1.0 / (1.0 + d * np.sqrt(3.0 * p.mu_a_mm * p.mu_s_prime_mm)))
    return out if out.ndim else float(out)


def transmittance(p: OpticsParams, d_mm):
    """Intensity ratio T(d) = exp(-mu_a * d * DPF(d) + G).

    With G=0 this is exactly 1 at d=0 and strictly decreasing in d.
    """
    d = _check_domain(p, d_mm)
    out = np.exp(-p.mu_a_mm * d * dpf(p, d) + p.g_const)
    return out if out.ndim else float(out)


def required_source_intensity(p: OpticsParams, d_mm):
    """Source intensity (mW/mm^2) needed so the target arrives at distance d."""
    t = transmittance(p, d_mm)
    out = p.target_mw_mm2 / t
    return out if isinstance(out, np.ndarray) and out.ndim else float(out)


def distance_table(p: OpticsParams, d_mm_grid) -> list[tuple[float, float, float, float]]:
    """Rows of (d_mm, dpf, transmittance, required_source_mw_mm2) over a grid."""
    d = np.asarray(d_mm_grid, dtype=float)
    f = np.atleast_1d(dpf(p, d))
    t = np.atleast_1d(transmittance(p, d))
    r = np.atleast_1d(required_source_intensity(p, d))
    return [(float(di), float(fi), float(ti), float(ri))
            for di, fi, ti, ri in zip(np.atleast_1d(d), f, t, r)]
