"""Base-change lifts of weight-one forms and their verification toolkit."""

__version__ = "0.1.0"
