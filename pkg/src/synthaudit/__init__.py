"""Privacy auditing for synthetic tabular data."""

__version__ = "0.1.0"
