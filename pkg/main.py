#!/usr/bin/env python3
"""
Main entry point for the RLS-Nystrom toolkit.
This is a simple wrapper that calls the main function from the rls_nystrom package.
"""

import sys
from rls_nystrom.main import main

if __name__ == "__main__":
    sys.exit(main())
