"""Acceptance checks of the published LZ spectator results"""
