"""Core operator algebra, verdicts and reports."""
