#!/usr/bin/env python3
"""
Main entry point for the Bayesian privacy accountant.
"""
import sys

from src.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
