"""Experiment harness: configs, seeded runs, metric emission, acceptance checks and the CLI."""
