"""Data models for parameters, spectra, trajectories, sweeps and run configuration"""
