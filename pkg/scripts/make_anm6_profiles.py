#!/usr/bin/env python3
"""Generate the frozen daily profiles for the 6-bus reference task.

Produces smooth, fully deterministic 24-hour curves at quarter-hour
resolution: residential demand with morning and evening peaks, an
industrial plateau over working hours, an EV-garage evening spike, a
midday solar bell, and a two-harmonic wind curve.  Values are rounded to
six decimals, written as JSON, and checksummed; the repository ships the
frozen output, so rerunning this script must reproduce it byte-for-byte.

Usage: make_anm6_profiles.py [--out DIR]
"""

import argparse
import hashlib
import json
import math
from pathlib import Path

STEPS_PER_DAY = 96
DELTA_T_HOURS = 0.25

# device ids in the reference network
RESIDENTIAL, SOLAR, INDUSTRIAL, WIND, EV_GARAGE = 1, 2, 3, 4, 5


def bump(h: float, center: float, width: float) -> float:
    """Cosine bell of unit height, zero outside +-width hours."""
    d = abs(h - center)
    if d >= width:
        return 0.0
    return 0.5 * (1.0 + math.cos(math.pi * d / width))


def plateau(h: float, start: float, stop: float, ramp: float) -> float:
    """Unit plateau with smooth cosine ramps of the given width."""
    if h <= start - ramp or h >= stop + ramp:
        return 0.0
    if h < start:
        return 0.5 * (1.0 + math.cos(math.pi * (start - h) / ramp))
    if h > stop:
        return 0.5 * (1.0 + math.cos(math.pi * (h - stop) / ramp))
    return 1.0


def residential(h: float) -> float:
    return 0.06 + 0.05 * bump(h, 7.5, 2.5) + 0.13 * bump(h, 19.5, 4.0)


def industrial(h: float) -> float:
    return 0.08 + 0.22 * plateau(h, 8.0, 17.0, 2.0)


def ev_garage(h: float) -> float:
    return 0.02 + 0.14 * bump(h, 20.0, 3.5)


def solar(h: float) -> float:
    if not 6.0 < h < 20.0:
        return 0.0
    return 0.28 * math.sin(math.pi * (h - 6.0) / 14.0) ** 2


def wind(h: float) -> float:
    v = (0.18 + 0.12 * math.sin(2 * math.pi * h / 24.0 + 1.0)
         + 0.07 * math.sin(4 * math.pi * h / 24.0 + 2.3))
    return min(max(v, 0.02), 0.38)


def series(fn, sign=1.0):
    return [round(sign * fn(t * DELTA_T_HOURS), 6)
            for t in range(STEPS_PER_DAY)]


def build_document() -> dict:
    return {
        "steps_per_day": STEPS_PER_DAY,
        "demand": {
            str(RESIDENTIAL): series(residential, sign=-1.0),
            str(INDUSTRIAL): series(industrial, sign=-1.0),
            str(EV_GARAGE): series(ev_garage, sign=-1.0),
        },
        "potential": {
            str(SOLAR): series(solar),
            str(WIND): series(wind),
        },
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent
                        / "src" / "anmsim" / "data")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    doc = build_document()
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    target = args.out / "anm6_profiles.json"
    target.write_text(text, encoding="utf-8")

    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    (args.out / "anm6_profiles.json.sha256").write_text(
        f"{digest}  anm6_profiles.json\n", encoding="utf-8")
    print(f"wrote {target} ({digest[:12]}...)")


if __name__ == "__main__":
    main()
