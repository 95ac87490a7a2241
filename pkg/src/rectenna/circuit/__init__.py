"""Nonlinear lumped-circuit engine (modified nodal analysis)."""
from .analysis import (AcResult, OperatingPoint, TransientStepper, Waveform, mna_matrix,
                       sample_count, solve_ac, solve_dc, solve_transient)
from .netlist import GROUND, Element, Netlist, Source, build_netlist, parse_netlist_text

__all__ = ["AcResult", "Element", "GROUND", "Netlist", "OperatingPoint", "Source",
           "TransientStepper", "Waveform", "build_netlist", "mna_matrix",
           "parse_netlist_text", "sample_count", "solve_ac", "solve_dc", "solve_transient"]
