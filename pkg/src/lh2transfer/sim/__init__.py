"""Flowsheet simulation."""
