"""Benchmark harness and verification suite."""
