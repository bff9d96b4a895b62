"""Stark resonance positions and ionization half-widths for the molecular
orbitals of water, computed with a single-center partial-wave expansion,
a three-center screened model potential, a radial finite-element basis and
exterior complex scaling.
"""

__version__ = "0.1.0"
