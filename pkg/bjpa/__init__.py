"""
Blochnium Josephson parametric amplifier simulator
"""

__version__ = "0.1.0"
