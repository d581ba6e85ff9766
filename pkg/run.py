#!/usr/bin/env python3
"""
Script to run the simulator: `python run.py <command>`
"""
import sys

from app.harness.cli import main

if __name__ == "__main__":
    sys.exit(main())
