"""Test suite for the LZ spectator simulator"""
