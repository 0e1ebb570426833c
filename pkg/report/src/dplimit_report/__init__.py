"""Offline report generator for dplimit experiment CSVs."""

from .figures import ReportSpec, SchemaError, make_figures, read_table

__version__ = "0.1.0"
