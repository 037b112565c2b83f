#!/usr/bin/env python3
"""
gradflow runner

Thin wrapper around the command-line interface, e.g.

    python run.py run harness/configs/disc.ini
"""

import sys

from harness.cli import main

if __name__ == '__main__':
    sys.exit(main())
