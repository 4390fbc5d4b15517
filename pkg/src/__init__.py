"""LZ Spectator Simulator - Main Package"""

__version__ = "0.1.0"
