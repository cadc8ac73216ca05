"""
Utils Package
=============
Utility functions and helpers.
"""

from .hexdump import HexdumpError, format_hexdump, load_hexdump

__all__ = ['HexdumpError', 'format_hexdump', 'load_hexdump']
