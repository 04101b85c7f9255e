"""Polar and PAC codes: channel analysis, construction, decoding and FER simulation."""

__version__ = "0.1.0"
