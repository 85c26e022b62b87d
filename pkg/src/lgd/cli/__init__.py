"""Command line interface for lgd."""
