"""Exponential-junction Schottky diode model.

The scalar device laws are compiled with numba so that the transient kernel in
:mod:`rectenna.circuit.kernel` and the public helpers below evaluate exactly the
same expressions.
"""
from dataclasses import dataclass, fields
from importlib import resources
import math

import numpy as np
from numba import njit

from .errors import InvalidInput

THERMAL_VOLTAGE = 0.025852  # kT/q at 300 K
GMIN_JUNCTION = 1e-12       # parallel junction conductance, keeps I(v) strictly monotone
FC = 0.5                    # depletion-capacitance linearization point, fraction of Vj
EXP_LIMIT = 80.0            # exp() is continued linearly beyond this argument

CARD_KEYS = {"IS": "Is", "N": "N", "RS": "Rs", "CJ0": "Cj0", "VJ": "Vj",
             "M": "M", "BV": "Bv", "IBV": "Ibv"}


@dataclass(frozen=True)
class DiodeModelCard:
    """Junction diode parameters in SI units."""
    Is: float = 3e-6
    N: float = 1.06
    Rs: float = 25.0
    Cj0: float = 0.18e-12
    Vj: float = 0.35
    M: float = 0.5
    Bv: float = 3.8
    Ibv: float = 3e-4
    Vt: float = THERMAL_VOLTAGE

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise InvalidInput(f"diode parameter {f.name} must be finite")
        if self.Is <= 0:
            raise InvalidInput("IS must be > 0")
        if not 1.0 <= self.N <= 2.0:
            raise InvalidInput("N must lie in [1, 2]")
        if self.Rs < 0 or self.Cj0 < 0:
            raise InvalidInput("RS and CJ0 must be >= 0")
        if not 0.0 < self.M < 1.0:
            raise InvalidInput("M must lie in (0, 1)")
        if self.Bv <= 0 or self.Vj <= 0 or self.Ibv <= 0 or self.Vt <= 0:
            raise InvalidInput("BV, VJ, IBV and Vt must be > 0")

    def params(self):
        """Pack the card for the compiled kernels."""
        return np.array([self.Is, self.N, self.Vt, self.Bv, self.Ibv,
                         self.Cj0, self.Vj, self.M])


def parse_model_card(text):
    """Parse ``KEY=value`` lines (``#`` comments allowed) into a card."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"line {lineno}: expected KEY=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.upper()
        if key not in CARD_KEYS:
            raise InvalidInput(f"line {lineno}: unknown model-card key {key!r}")
        try:
            values[CARD_KEYS[key]] = float(val)
        except ValueError:
            raise InvalidInput(f"line {lineno}: bad number {val!r}") from None
    return DiodeModelCard(**values)


def load_model_card(path=None):
    """Load a model card from *path*, or the bundled HSMS-285x defaults."""
    if path is None:
        text = resources.files("rectenna.data").joinpath("hsms285x.card").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return parse_model_card(text)


def format_model_card(card):
    inv = {v: k for k, v in CARD_KEYS.items()}
    return "".join(f"{inv[name]}={getattr(card, name)!r}\n" for name in CARD_KEYS.values())


@njit(cache=True)
def _explim(x):
    if x > EXP_LIMIT:
        e = math.exp(EXP_LIMIT)
        return e * (1.0 + x - EXP_LIMIT), e
    e = math.exp(x)
    return e, e


@njit(cache=True)
def junction(v, Is, N, Vt, Bv, Ibv):
    """Junction current and conductance (forward law, breakdown, GMIN)."""
    nvt = N * Vt
    x = v / nvt
    ef, def_ = _explim(x)
    # expm1 keeps full relative accuracy near zero bias
    i = Is * (math.expm1(x) if x <= EXP_LIMIT else ef - 1.0)
    g = Is * def_ / nvt
    # breakdown term offset so that I(0) == 0 exactly
    xb = -(v + Bv) / Vt
    eb, deb = _explim(xb)
    eb0 = math.exp(-Bv / Vt)
    i -= Ibv * (eb0 * math.expm1(-v / Vt) if xb <= EXP_LIMIT else eb - eb0)
    g += Ibv * deb / Vt
    return i + GMIN_JUNCTION * v, g + GMIN_JUNCTION


@njit(cache=True)
def depletion(v, Cj0, Vj, M):
    """Depletion charge and capacitance, linearized above FC*Vj."""
    if Cj0 == 0.0:
        return 0.0, 0.0
    vfc = FC * Vj
    if v < vfc:
        base = 1.0 - v / Vj
        c = Cj0 * base ** (-M)
        q = Cj0 * Vj / (1.0 - M) * (1.0 - base ** (1.0 - M))
        return q, c
    f1 = Vj / (1.0 - M) * (1.0 - (1.0 - FC) ** (1.0 - M))
    f2 = (1.0 - FC) ** (1.0 + M)
    f3 = 1.0 - FC * (1.0 + M)
    c = Cj0 / f2 * (f3 + M * v / Vj)
    q = Cj0 * f1 + Cj0 / f2 * (f3 * (v - vfc) + M / (2.0 * Vj) * (v * v - vfc * vfc))
    return q, c


def diode_current(v, card=DiodeModelCard()):
    """Junction current in amperes; accepts scalars or arrays."""
    f = np.vectorize(lambda x: junction(x, card.Is, card.N, card.Vt, card.Bv, card.Ibv)[0],
                     otypes=[float])
    out = f(np.asarray(v, dtype=float))
    return float(out) if out.ndim == 0 else out


def diode_small_signal(v, card=DiodeModelCard()):
    """Return ``(conductance, capacitance)`` of the junction biased at *v*."""
    def one(x):
        g = junction(x, card.Is, card.N, card.Vt, card.Bv, card.Ibv)[1]
        c = depletion(x, card.Cj0, card.Vj, card.M)[1]
        return g, c
    f = np.vectorize(one, otypes=[float, float])
    g, c = f(np.asarray(v, dtype=float))
    if g.ndim == 0:
        return float(g), float(c)
    return g, c


def junction_charge(v, card=DiodeModelCard()):
    f = np.vectorize(lambda x: depletion(x, card.Cj0, card.Vj, card.M)[0], otypes=[float])
    out = f(np.asarray(v, dtype=float))
    return float(out) if out.ndim == 0 else out
