"""
BlindDPS Project

This package contains tools for blind inverse problems solved by parallel
diffusion posterior sampling.
"""
