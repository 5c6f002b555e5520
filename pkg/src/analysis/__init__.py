"""Closed-form results, Fourier-space arcs and spectra"""
