"""Equivalent circuit of a rectangular multi-turn complementary spiral resonator.

The outer loop inductance follows from the rectangle perimeter and a
per-unit-length inductance, the spiral inductance divides it by the number of
turns, and the coupling capacitance is tied to the spiral inductance through
the free-space admittance squared. Because ``C_c`` is proportional to ``L_s``,
the resonance reduces to ``f_o * L_s = eta0 / (4 pi)`` for any geometry.
"""
from dataclasses import dataclass
import math

from scipy.constants import c as C0, mu_0

from .errors import InvalidGeometry

ETA0 = mu_0 * C0  # free-space wave impedance, ohm
DEFAULT_L_PUL = 1e-6  # 1 nH/mm


def _positive(**values):
    for name, v in values.items():
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise InvalidGeometry(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class CsrGeometry:
    L: float
    W: float
    turns: int = 3
    L_pul: float = DEFAULT_L_PUL

    def __post_init__(self):
        _positive(L=self.L, W=self.W, L_pul=self.L_pul)
        if int(self.turns) != self.turns or self.turns < 1:
            raise InvalidGeometry(f"turns must be an integer >= 1, got {self.turns!r}")


@dataclass(frozen=True)
class CsrEquivalent:
    L_o: float
    L_s: float
    C_c: float
    f_o: float


def csr_resonant_frequency(L_s, C):
    """Resonance of the parallel L_s, C tank in Hz."""
    _positive(L_s=L_s, C=C)
    return 1.0 / (2 * math.pi * math.sqrt(L_s * C))


def csr_equivalent(geom):
    """Lumped tank values for *geom*."""
    L_o = 2 * (geom.L + geom.W) * geom.L_pul
    L_s = L_o / geom.turns
    C_c = 4 * L_s / ETA0 ** 2
    return CsrEquivalent(L_o, L_s, C_c, csr_resonant_frequency(L_s, C_c))


def csr_inverse_design(f_target, L_pul=DEFAULT_L_PUL, aspect=1.0, turns=3):
    """Rectangle whose tank resonates at *f_target*; ``aspect`` is W/L."""
    _positive(f_target=f_target, L_pul=L_pul, aspect=aspect)
    L_s = ETA0 / (4 * math.pi * f_target)
    perimeter_half = turns * L_s / (2 * L_pul)
    L = perimeter_half / (1 + aspect)
    return CsrGeometry(L, perimeter_half - L, turns, L_pul)
