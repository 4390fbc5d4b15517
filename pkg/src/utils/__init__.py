"""Utility modules for logging, configuration, manifests, tabular output and the run journal"""
