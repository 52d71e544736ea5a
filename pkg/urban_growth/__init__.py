"""
Urban Growth - SLEUTH-style cellular automaton
Growth simulation, brute-force calibration and scenario forecasting.
"""

__version__ = "1.0.0"
