#!/usr/bin/env python3
"""Run the parametric-regime study (representer two orders smoother than the
spectrum decay) and certify the n^-1 slope."""

import sys
from pathlib import Path

from funcreg.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "certify",
                "--config", str(ROOT / "configs" / "ppp_parametric.yaml"),
                "--out", "out/parametric",
                *sys.argv[1:],
            ]
        )
    )
