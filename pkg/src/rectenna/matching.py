"""Lumped L-section matching synthesis and ABCD cascade evaluation.

Impedances are plain Python complex numbers in ohms. A network is an ordered
list of ``(placement, kind, value)`` tuples running from the source port
toward the termination, where placement is ``"series"`` or ``"shunt"`` and
kind is ``"inductor"``, ``"capacitor"`` or ``"resistor"`` (SI values).
"""
from dataclasses import dataclass
import math
import warnings

import numpy as np

from .errors import (AlreadyMatchedWarning, DegenerateInput, InvalidElement, InvalidInput,
                     Unmatchable)

RETURN_LOSS_CAP_DB = 200.0
ALREADY_MATCHED = 1e-6


@dataclass(frozen=True)
class LSection:
    """Two-element match. ``series-first`` puts the series element at the source side."""
    topology: str
    series_kind: str
    series_value: float
    shunt_kind: str
    shunt_value: float
    frequency: float

    def __post_init__(self):
        if self.topology not in ("series-first", "shunt-first"):
            raise InvalidElement(f"unknown L-section topology {self.topology!r}")
        for kind, value in ((self.series_kind, self.series_value),
                            (self.shunt_kind, self.shunt_value)):
            if kind not in ("inductor", "capacitor"):
                raise InvalidElement(f"L-section element must be reactive, got {kind!r}")
            if not value > 0:
                raise InvalidElement("L-section element values must be > 0")

    @property
    def elements(self):
        ser = ("series", self.series_kind, self.series_value)
        sh = ("shunt", self.shunt_kind, self.shunt_value)
        return [ser, sh] if self.topology == "series-first" else [sh, ser]

    @property
    def is_lowpass(self):
        return self.series_kind == "inductor" and self.shunt_kind == "capacitor"

    def reactances(self, f=None):
        """Series reactance and shunt reactance (ohms) at *f*."""
        w = 2 * math.pi * (f or self.frequency)
        return _reactance(self.series_kind, self.series_value, w), \
            _reactance(self.shunt_kind, self.shunt_value, w)


def _reactance(kind, value, w):
    return w * value if kind == "inductor" else -1.0 / (w * value)


def _impedance(kind, value, w):
    if not (value > 0 and math.isfinite(value)):
        raise InvalidElement(f"{kind} value must be positive and finite, got {value!r}")
    if kind == "resistor":
        return complex(value)
    if kind == "inductor":
        return 1j * w * value
    if kind == "capacitor":
        return 1 / (1j * w * value)
    raise InvalidElement(f"unknown element kind {kind!r}")


def abcd(network, f):
    """Cascade ABCD matrix of an element list at frequency *f*."""
    if isinstance(network, LSection):
        network = network.elements
    w = 2 * math.pi * f
    M = np.eye(2, dtype=complex)
    for placement, kind, value in network:
        z = _impedance(kind, value, w)
        if placement == "series":
            step = np.array([[1, z], [0, 1]], dtype=complex)
        elif placement == "shunt":
            step = np.array([[1, 0], [1 / z, 1]], dtype=complex)
        else:
            raise InvalidElement(f"placement must be 'series' or 'shunt', got {placement!r}")
        M = M @ step
    return M


def input_impedance(network, z_term, f):
    """Impedance looking into *network* terminated by *z_term*."""
    (A, B), (C, D) = abcd(network, f)
    return complex((A * z_term + B) / (C * z_term + D))


def reflection_coefficient(z, z0=50.0):
    """Return ``(gamma, return_loss_db)``; a perfect match reports 200 dB."""
    if not z0 > 0:
        raise InvalidInput("reference impedance must be > 0")
    z = complex(z)
    if z + z0 == 0:
        raise DegenerateInput("Z = -Z0 makes the reflection coefficient undefined")
    gamma = (z - z0) / (z + z0)
    mag = abs(gamma)
    rl = RETURN_LOSS_CAP_DB if mag == 0 else min(-20 * math.log10(mag), RETURN_LOSS_CAP_DB)
    return gamma, rl


def _element_for_reactance(x, w):
    return ("inductor", x / w) if x > 0 else ("capacitor", -1.0 / (w * x))


def _element_for_susceptance(b, w):
    return ("capacitor", b / w) if b > 0 else ("inductor", -1.0 / (w * b))


def synthesize_l_section(z_load, z0=50.0, f=1.8e9):
    """All lossless L-sections that transform *z_load* to *z0* at *f*.

    Returns up to four :class:`LSection` solutions, lowpass (series L, shunt C)
    first and then by total reactance magnitude. Every solution is checked
    with :func:`input_impedance` before it is returned.
    """
    z_load = complex(z_load)
    if not (z0 > 0 and f > 0):
        raise InvalidInput("z0 and f must be > 0")
    rl, xl = z_load.real, z_load.imag
    if not rl > 0:
        raise Unmatchable(f"load {z_load} has no positive resistance")
    if abs(reflection_coefficient(z_load, z0)[0]) < ALREADY_MATCHED:
        warnings.warn(f"load {z_load} is already matched to {z0} ohm", AlreadyMatchedWarning,
                      stacklevel=2)
        return []
    w = 2 * math.pi * f
    tiny = 1e-9
    candidates = []

    # shunt element next to the load, series element toward the source
    mag2 = rl * rl + xl * xl
    disc = mag2 - z0 * rl
    if disc >= 0:
        root = math.sqrt(rl / z0) * math.sqrt(disc)
        for sign in (1.0, -1.0):
            b = (xl + sign * root) / mag2
            if abs(b) * z0 < tiny:
                continue
            x = 1 / b + xl * z0 / rl - z0 / (b * rl)
            if abs(x) < tiny * z0:
                continue
            candidates.append(("series-first", x, b))

    # series element next to the load, shunt element toward the source
    if rl <= z0:
        for sign in (1.0, -1.0):
            x = sign * math.sqrt(rl * (z0 - rl)) - xl
            b = sign * math.sqrt((z0 - rl) / rl) / z0
            if abs(b) * z0 < tiny or abs(x) < tiny * z0:
                continue
            candidates.append(("shunt-first", x, b))

    out = []
    for topo, x, b in candidates:
        sk, sv = _element_for_reactance(x, w)
        hk, hv = _element_for_susceptance(b, w)
        sec = LSection(topo, sk, sv, hk, hv, f)
        if abs(reflection_coefficient(input_impedance(sec, z_load, f), z0)[0]) < 1e-9:
            out.append((not sec.is_lowpass, abs(x) + abs(1 / b), topo, sec))
    out.sort(key=lambda t: t[:3])
    return [t[3] for t in out]


def parse_impedance(text):
    """Parse ``"R+jX"``, ``"R-jX"`` or ``"R"`` into a complex number."""
    s = text.strip().replace(" ", "").replace("J", "j").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        pass
    head, sep, tail = s.partition("j")
    if sep and head[-1:] in ("+", "-", ""):
        try:
            return complex(head + (tail or "1") + "j")
        except ValueError:
            pass
    raise InvalidInput(f"cannot parse impedance {text!r}")
