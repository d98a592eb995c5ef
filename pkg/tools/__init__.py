"""Helper package for reporting tools.

Ensures `from tools.make_report import generate_report` works in CI and locally.
"""
