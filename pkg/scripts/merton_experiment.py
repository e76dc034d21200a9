#!/usr/bin/env python3
"""Merton jump-diffusion experiment: the approximating-scheme iteration,
the regularity report and a Monte Carlo comparison."""

import sys

from jumpput.cli import main

OUT = sys.argv[1] if len(sys.argv) > 1 else "out/merton"
COMMON = ["--out", OUT, "--config", "configs/merton.yaml"]

for cmd in ("iterate", "diagnose", "mc"):
    rc = main([cmd] + COMMON)
    if rc != 0:
        sys.exit(rc)
