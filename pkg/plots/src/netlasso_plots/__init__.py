"""Batch figure rendering for netlasso experiment outputs."""

from .render import KINDS, PlotSchemaError, PlotSpec, render

__all__ = ["KINDS", "PlotSchemaError", "PlotSpec", "render"]
