"""
Entry point: python main.py swap --scheme five_qubit --erase 1,2
"""

import sys

from harness.cli import main

if __name__ == "__main__":
    sys.exit(main())
