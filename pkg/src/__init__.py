"""Floquet-Bloch-Redfield simulator for dissipative LZSM interference"""
__version__ = "0.1.0"
