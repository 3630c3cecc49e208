"""LTE-U / Wi-Fi coexistence laboratory.

Simulates duty-cycled LTE-U next to CSMA/CA Wi-Fi access points, produces the
energy, auto-correlation and beacon observables an LTE-U base station sees
while it is silent, and counts the active access points from them.
"""

__version__ = "0.1.0"
