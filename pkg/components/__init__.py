"""Reporting, configuration and export pieces used by the command-line entry point."""
