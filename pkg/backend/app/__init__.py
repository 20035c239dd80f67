"""Controlled filter stability and prior-robustness toolkit for finite POMDPs"""
__version__ = "1.0.0"
