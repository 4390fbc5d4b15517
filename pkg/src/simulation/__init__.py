"""Spectrum, dynamics and parameter-sweep engines for the LZ spectator model"""
