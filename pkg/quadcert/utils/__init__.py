"""Serialization, reporting and post-processing helpers."""
