# src/main.py

import sys
import os

# Add "src/" into Python's search path
current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.append(current_dir)

import cli


def main():
    sys.exit(cli.main())


if __name__ == "__main__":
    main()
