"""Photon emission by laser-modulated free-electron wavepackets into a single cavity mode."""

__version__ = "0.1.0"
