#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The MambaGaze Authors
"""Writes the small CLARE-schema fixture used by the smoke tests.

Two participants, each with a 30 s baseline session, a 120 s experiment
session and twelve 10 s ratings covering both classes. The tracker runs at a
jittered ~60 Hz with dropped rows and blink gaps; velocity and acceleration
columns are absent so the pipeline has to derive them.
"""

import argparse
import csv
import math
import random
from pathlib import Path

COLUMNS = [
    "time_ms",
    "pupil_diameter_left",
    "pupil_diameter_right",
    "gaze_point_x",
    "gaze_point_y",
    "fixation",
    "saccade",
    "blink",
    "eye_distance",
]

PARTICIPANTS = {
    "P01": [2, 3, 7, 8, 2, 6, 7, 1, 3, 8, 4, 6],
    "P02": [6, 2, 1, 7, 8, 3, 2, 9, 5, 4, 7, 1],
}


def fmt(v):
    return "" if v is None else f"{v:.4f}"


def session_rows(rng, seconds, ratings, base_pupil):
    rows = []
    t = 0.0
    gx, gy = rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)
    fixation_left = 0.0
    blink_until = -1.0
    while t < seconds:
        interval = int(t // 10.0)
        level = 0.0
        if ratings is not None and interval < len(ratings):
            level = 0.08 * (ratings[interval] - 5)
        if rng.random() < 0.004:
            blink_until = t + rng.uniform(0.1, 0.3)
        blink = t < blink_until
        if fixation_left <= 0.0:
            gx = min(max(gx + rng.gauss(0.0, 0.15), 0.0), 1.0)
            gy = min(max(gy + rng.gauss(0.0, 0.15), 0.0), 1.0)
            fixation_left = rng.uniform(0.2, 0.6)
            saccade = 1
        else:
            saccade = 0
        fixation_left -= 1.0 / 60.0
        if rng.random() < 0.03:
            t += rng.uniform(0.012, 0.022)
            continue  # dropped row
        pupil = base_pupil + level + 0.05 * math.sin(t / 3.0) + rng.gauss(0.0, 0.03)
        rows.append(
            [
                f"{t * 1000.0:.1f}",
                fmt(None if blink else pupil + rng.gauss(0.0, 0.01)),
                fmt(None if blink else pupil - 0.05 + rng.gauss(0.0, 0.01)),
                fmt(None if blink else gx + rng.gauss(0.0, 0.003)),
                fmt(None if blink else gy + rng.gauss(0.0, 0.003)),
                "0" if blink or saccade else "1",
                str(saccade),
                "1" if blink else "0",
                fmt(600.0 + 20.0 * math.sin(t / 17.0) + rng.gauss(0.0, 1.0)),
            ]
        )
        t += rng.uniform(0.012, 0.022)
    return rows


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    for pid, ratings in PARTICIPANTS.items():
        d = args.out / pid
        d.mkdir(parents=True, exist_ok=True)
        base = rng.uniform(3.2, 3.8)
        write_csv(d / "baseline.csv", COLUMNS, session_rows(rng, 30.0, None, base))
        write_csv(d / "experiment.csv", COLUMNS, session_rows(rng, 120.0, ratings, base))
        write_csv(d / "labels.csv", ["interval", "rating"], list(enumerate(ratings)))


if __name__ == "__main__":
    main()
