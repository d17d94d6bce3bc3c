"""Exact simulation of the BCJL quantum bit commitment and the purification attack on it."""

__version__ = "0.1.0"
