"""Desk-scale simulator for an NB-IoT controlled mmWave reflective surface."""

__version__ = "0.1.0"
