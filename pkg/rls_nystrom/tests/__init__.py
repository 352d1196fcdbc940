"""
Tests for the RLS-Nystrom toolkit.
"""
