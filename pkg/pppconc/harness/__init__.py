"""Experiment harness: configuration, orchestration and the CLI."""
