#!/usr/bin/env python3
"""Run the shipped certified rate study and report the slope verdict.

Exit code 0 means the fitted log-log MSE slope matched the catalog order
within the configured tolerance; 2 means certification failed.
"""

import sys
from pathlib import Path

from funcreg.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "certify",
                "--config", str(ROOT / "configs" / "ppp_certified.yaml"),
                "--out", "out/certified",
                *sys.argv[1:],
            ]
        )
    )
