"""Design and simulation toolkit for miniaturized patch rectennas."""
__version__ = "0.1.0"
