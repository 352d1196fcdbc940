"""
Utility modules for the RLS-Nystrom toolkit.
"""
