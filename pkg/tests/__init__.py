# File: tests/__init__.py
"""
Test package for the BlindDPS toolkit.

Run with `pytest`; add --runslow for the desk-scale acceptance experiments.
"""
