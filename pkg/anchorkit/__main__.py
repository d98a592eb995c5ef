#!/usr/bin/env python3
"""
anchorkit command line interface (``python -m anchorkit``).
"""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
