"""Free-space link budget and the antenna-to-DC chain."""
from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.constants import c as C0

from .errors import FarFieldWarning, InvalidLink, OutOfCurveRange
from .rectifier import dbm_to_watts

CURVE_MARGIN_DB = 3.0


@dataclass(frozen=True, kw_only=True)
class LinkBudget:
    P_t: float          # dBm
    G_t: float          # dBi
    G_r: float = 2.5    # dBi
    d: float            # m
    f: float = 1.8e9    # Hz

    def __post_init__(self):
        for name in ("P_t", "G_t", "G_r", "d", "f"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidLink(f"{name} must be finite")
        if not (self.d > 0 and self.f > 0):
            raise InvalidLink("distance and frequency must be > 0")


@dataclass(frozen=True)
class DcEstimate:
    p_r_dbm: float
    efficiency: float
    p_dc: float
    v_dc: float


def path_loss_db(d, f):
    return 20 * math.log10(4 * math.pi * d * f / C0)


def received_power(link):
    """Friis received power in dBm (polarization and mismatch factors of 1)."""
    if link.d < 2 * C0 / link.f:
        warnings.warn(f"d = {link.d:g} m is inside two wavelengths; Friis may not hold",
                      FarFieldWarning, stacklevel=2)
    return link.P_t + link.G_t + link.G_r - path_loss_db(link.d, link.f)


def end_to_end_dc(link, curve):
    """DC power and voltage at the load for *link* feeding a rectifier *curve*.

    Efficiency and V_dc are interpolated linearly on the dBm axis. Within the
    3 dB margin outside the curve the nearest end value is held; further out
    the request is refused.
    """
    p = curve.column("p_in_dbm")
    if p.size == 0:
        raise OutOfCurveRange("curve has no valid rows")
    p_r = received_power(link)
    if not p[0] - CURVE_MARGIN_DB <= p_r <= p[-1] + CURVE_MARGIN_DB:
        raise OutOfCurveRange(f"received power {p_r:.3f} dBm is outside "
                              f"[{p[0] - CURVE_MARGIN_DB:g}, {p[-1] + CURVE_MARGIN_DB:g}] dBm")
    eff = float(np.interp(p_r, p, curve.column("efficiency")))
    v = float(np.interp(p_r, p, curve.column("v_dc")))
    return DcEstimate(p_r, eff, eff * dbm_to_watts(p_r), v)
