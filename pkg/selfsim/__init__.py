"""
Porous medium equation lab: closed-form self-similar solutions, a conservative
explicit solver and the diagnostics comparing the two.
"""
__version__ = "0.1.0"
