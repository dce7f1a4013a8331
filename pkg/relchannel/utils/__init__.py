# Output helpers

from .tabular import Column, ScanResult, format_value

__all__ = ["Column", "ScanResult", "format_value"]
