#!/usr/bin/env python3
"""
Run the simulator from a source checkout without installing it
"""
from bjpa.cli import main

if __name__ == '__main__':
    raise SystemExit(main())
