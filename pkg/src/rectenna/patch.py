"""Rectangular microstrip patch synthesis (transmission-line cavity model)."""
from dataclasses import dataclass
import math
import warnings

from scipy.constants import c as C0

from .errors import InvalidInput, InvalidSubstrate, ThickSubstrateWarning


@dataclass(frozen=True)
class SubstrateSpec:
    eps_r: float
    tan_d: float = 0.0
    h: float = 1.6e-3

    def __post_init__(self):
        if not (math.isfinite(self.eps_r) and self.eps_r >= 1):
            raise InvalidSubstrate(f"eps_r must be >= 1, got {self.eps_r!r}")
        if not 0 <= self.tan_d < 1:
            raise InvalidSubstrate(f"tan_d must lie in [0, 1), got {self.tan_d!r}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise InvalidSubstrate(f"thickness must be > 0, got {self.h!r}")


@dataclass(frozen=True)
class PatchDimensions:
    W: float
    L: float
    eps_eff: float
    delta_L: float
    f0: float


def effective_permittivity(eps_r, h, W):
    return (eps_r + 1) / 2 + (eps_r - 1) / 2 / math.sqrt(1 + 12 * h / W)


def fringing_extension(eps_eff, h, W):
    u = W / h
    return 0.412 * h * (eps_eff + 0.3) * (u + 0.264) / ((eps_eff - 0.258) * (u + 0.8))


def design_patch(f0, sub):
    """Width, length and fringing data of a patch resonant at *f0* on *sub*."""
    if not (math.isfinite(f0) and f0 > 0):
        raise InvalidInput(f"f0 must be > 0, got {f0!r}")
    lam0 = C0 / f0
    if sub.h > 0.05 * lam0:
        warnings.warn(f"substrate thickness {sub.h:g} m exceeds 0.05 free-space wavelengths",
                      ThickSubstrateWarning, stacklevel=2)
    W = C0 / (2 * f0) * math.sqrt(2 / (sub.eps_r + 1))
    eps_eff = effective_permittivity(sub.eps_r, sub.h, W)
    dL = fringing_extension(eps_eff, sub.h, W)
    L = C0 / (2 * f0 * math.sqrt(eps_eff)) - 2 * dL
    if not L > 0:
        raise InvalidSubstrate("substrate too thick: fringing consumes the whole patch length")
    return PatchDimensions(W, L, eps_eff, dL, f0)


def guided_wavelength(f, eps_eff):
    """Wavelength in a medium of effective permittivity *eps_eff*, in metres."""
    if not (f > 0 and eps_eff >= 1):
        raise InvalidInput("need f > 0 and eps_eff >= 1")
    return C0 / (f * math.sqrt(eps_eff))


def electrical_size(physical, lambda_g):
    """Dimensions expressed in guided wavelengths."""
    a, b = physical
    if not (a > 0 and b > 0 and lambda_g > 0):
        raise InvalidInput("sizes and wavelength must be positive")
    return a / lambda_g, b / lambda_g
