#!/usr/bin/env python3
"""Diffusion-only benchmark (r=0.05, q=0, sigma=0.2, K=100, T=1): full
solve, regularity report and the Volterra cross-check in one output dir."""

import sys

from jumpput.cli import main

OUT = sys.argv[1] if len(sys.argv) > 1 else "out/benchmark_diffusion"
COMMON = ["--out", OUT, "--grid.nx", "400", "--grid.nt", "400"]

for cmd in ("solve", "diagnose", "volterra"):
    rc = main([cmd] + COMMON)
    if rc != 0:
        sys.exit(rc)
