"""Compliance auditing of privacy policies over encrypted relational logs."""

__version__ = "0.1.0"
