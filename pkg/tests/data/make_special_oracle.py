"""Regenerate special_oracle.json with mpmath at 40 digits."""

import json
from pathlib import Path

import mpmath

mpmath.mp.dps = 40

GAMMA_PROBES = [
    (0.5, 0.01), (0.5, 1.0), (0.5, 12.0), (1.0, 0.5), (1.0, 30.0), (1.5, 2.0),
    (2.5, 0.3), (2.5, 7.0), (3.0, 3.0), (3.0, 25.0), (4.5, 1.0), (4.5, 4.5),
    (4.5, 20.0), (8.0, 5.0), (8.0, 9.0), (50.0, 40.0), (50.0, 70.0), (74.0, 74.0),
    (1024.0, 990.0), (1024.0, 1100.0), (8192.0, 8000.0), (8192.0, 8400.0),
    (16384.0, 16384.0), (32768.0, 32500.0), (32768.0, 33200.0), (3.0, 80.0),
]
ERFC_PROBES = [0.0, 0.1, 0.4472135955, 0.632455532 / 2 ** 0.5, 1.0, 2.5, 5.0, 7.0710678, 12.0]

data = {
    "igamc": [[a, x, mpmath.nstr(mpmath.gammainc(a, x, mpmath.inf, regularized=True), 25)]
              for a, x in GAMMA_PROBES],
    "igam": [[a, x, mpmath.nstr(mpmath.gammainc(a, 0, x, regularized=True), 25)]
             for a, x in GAMMA_PROBES],
    "erfc": [[x, mpmath.nstr(mpmath.erfc(x), 25)] for x in ERFC_PROBES],
}
Path(__file__).with_name("special_oracle.json").write_text(json.dumps(data, indent=1) + "\n")
