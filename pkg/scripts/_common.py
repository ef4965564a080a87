"""Shared argument handling for the experiment scripts."""

import argparse
from pathlib import Path


def parser(description: str, out: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--t-total", type=float, default=0.5, help="simulated time per run")
    p.add_argument("--out", type=Path, default=Path("results") / out)
    p.add_argument("--workers", type=int, default=1, help="threads for independent runs")
    return p
