"""Solver physics: model, Floquet, Bloch-Redfield"""
