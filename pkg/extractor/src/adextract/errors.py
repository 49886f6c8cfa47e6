"""Error types for the extractor CLI."""


class ExtractError(Exception):
    """Any failure the extractor reports as a single-line CLI error."""
