"""Acoustic beacon deployment, HTN mission planning, and fleet simulation
for GNSS-denied underwater navigation."""

__version__ = "0.1.0"
