#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Generates the synthetic end-to-end fixtures and their expected outputs.

The expected outputs are computed here with exact rational arithmetic and
brute-force enumeration, independently of the C++ library:

  * state win probabilities by enumerating every (share_c1, share_c2) pair,
  * the Electoral College PMF by a dictionary subset-sum over states,
  * error tables by direct summation.

All masses are dyadic and only ten states are uncertain, so every value the
library computes is exactly representable in a double. That makes byte
comparison of the rendered CSVs meaningful.

Run once and commit the outputs:

    python3 tests/fixtures/generate_fixtures.py tests/fixtures
"""

import json
import math
import random
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

ALLOCATION_2024 = {
    "Alabama": 9, "Alaska": 3, "Arizona": 11, "Arkansas": 6, "California": 54,
    "Colorado": 10, "Connecticut": 7, "Delaware": 3, "District of Columbia": 3,
    "Florida": 30, "Georgia": 16, "Hawaii": 4, "Idaho": 4, "Illinois": 19,
    "Indiana": 11, "Iowa": 6, "Kansas": 6, "Kentucky": 8, "Louisiana": 8,
    "Maine": 4, "Maryland": 10, "Massachusetts": 11, "Michigan": 15,
    "Minnesota": 10, "Mississippi": 6, "Missouri": 10, "Montana": 4,
    "Nebraska": 5, "Nevada": 6, "New Hampshire": 4, "New Jersey": 14,
    "New Mexico": 5, "New York": 28, "North Carolina": 16, "North Dakota": 3,
    "Ohio": 17, "Oklahoma": 7, "Oregon": 8, "Pennsylvania": 19,
    "Rhode Island": 4, "South Carolina": 9, "South Dakota": 3, "Tennessee": 11,
    "Texas": 40, "Utah": 6, "Vermont": 3, "Virginia": 13, "Washington": 12,
    "West Virginia": 4, "Wisconsin": 10, "Wyoming": 3,
}
assert len(ALLOCATION_2024) == 51 and sum(ALLOCATION_2024.values()) == 538

C1 = "Avery Stone"
C2 = "Morgan Reyes"
YEAR = 2024
SWING_STATES = ["Arizona", "Georgia", "Michigan", "Nevada", "New Hampshire",
                "North Carolina", "Pennsylvania", "Wisconsin", "Minnesota", "Iowa"]

SAFE_PATTERNS = [(Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)),
                 (Fraction(1, 8), Fraction(3, 4), Fraction(1, 8)),
                 (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)),
                 (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2))]
SWING_PATTERNS = [(Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)),
                  (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)),
                  (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2))]


def fmt(x):
    """Shortest positional decimal that round-trips, e.g. 0.45, 1, 0."""
    x = float(x)
    if x == 0.0:
        return "0"
    return np.format_float_positional(x, unique=True, trim="-")


def spread(center, pattern):
    return {center - 2: pattern[0], center: pattern[1], center + 2: pattern[2]}


def mean(dist):
    return sum(Fraction(y) * p for y, p in dist.items())


def win_probability(d1, d2):
    w1 = sum(p1 * p2 for y1, p1 in d1.items() for y2, p2 in d2.items() if y2 < y1)
    w2 = sum(p1 * p2 for y1, p1 in d1.items() for y2, p2 in d2.items() if y1 < y2)
    tie = sum(p1 * p2 for y1, p1 in d1.items() for y2, p2 in d2.items() if y1 == y2)
    assert w1 + w2 + tie == 1
    return w1 / (w1 + w2), w2 / (w1 + w2), tie


def ec_pmf(wins, alloc):
    pmf = {0: Fraction(1)}
    for state, ev in alloc.items():
        p = wins[state]
        nxt = {}
        for k, v in pmf.items():
            nxt[k] = nxt.get(k, 0) + v * (1 - p)
            nxt[k + ev] = nxt.get(k + ev, 0) + v * p
        pmf = nxt
    total = sum(alloc.values())
    out = [pmf.get(k, Fraction(0)) for k in range(total + 1)]
    assert sum(out) == 1
    return out


def exactly_double(x):
    return Fraction(float(x)) == x


def build(rng):
    cells = {}
    for state in sorted(ALLOCATION_2024):
        while True:
            if state in SWING_STATES:
                d1 = spread(rng.choice([48, 50, 52]), rng.choice(SWING_PATTERNS))
                d2 = spread(rng.choice([47, 49, 51]), rng.choice(SWING_PATTERNS))
            else:
                hi = rng.choice(range(52, 66, 2))
                lo = rng.choice(range(33, 46, 2))
                pattern_hi, pattern_lo = rng.choice(SAFE_PATTERNS), rng.choice(SAFE_PATTERNS)
                if rng.random() < 0.5:
                    d1, d2 = spread(hi, pattern_hi), spread(lo + 1, pattern_lo)
                else:
                    d1, d2 = spread(lo, pattern_lo), spread(hi + 1, pattern_hi)
            if mean(d1) != mean(d2):
                break
        cells[state] = (d1, d2)
    return cells


def cell_json(state, cand, opp, dist, conforming):
    return {
        "meta": {"state": state, "candidate": cand, "opponent": opp, "year": YEAR,
                 "model": "synthetic-fixture", "prompt_fingerprint": ""},
        "conforming_mass": conforming,
        "masses": {str(y): float(p) for y, p in sorted(dist.items())},
    }


def main(out_dir):
    out = Path(out_dir)
    rng = random.Random(20241105)
    cells = build(rng)

    doc = {"version": 1, "cells": []}
    truth_rows = ["state,candidate,share_percent"]
    truth = {}
    for state, (d1, d2) in cells.items():
        doc["cells"].append(cell_json(state, C1, C2, d1, round(rng.uniform(0.6, 1.0), 4)))
        doc["cells"].append(cell_json(state, C2, C1, d2, round(rng.uniform(0.6, 1.0), 4)))
        a1 = f"{float(mean(d1)) + rng.uniform(-1.5, 1.5):.2f}"
        a2 = f"{float(mean(d2)) + rng.uniform(-1.5, 1.5):.2f}"
        truth[state] = (float(a1), float(a2))
        truth_rows.append(f"{state},{C1},{a1}")
        truth_rows.append(f"{state},{C2},{a2}")
    (out / "e2e_cells.json").write_text(json.dumps(doc, indent=2) + "\n")
    (out / "e2e_truth.csv").write_text("\n".join(truth_rows) + "\n")

    # Error table: absolute error of the mean, states in name order, sample
    # standard deviation.
    lines = [f"state,{C1},{C2}"]
    e1, e2 = [], []
    for state in sorted(cells):
        d1, d2 = cells[state]
        m1, m2 = float(mean(d1)), float(mean(d2))
        assert m1 == mean(d1) and m2 == mean(d2)
        err1, err2 = abs(m1 - truth[state][0]), abs(m2 - truth[state][1])
        e1.append(err1)
        e2.append(err2)
        lines.append(f"{state},{fmt(err1)},{fmt(err2)}")

    def mean_sd(xs):
        s = 0.0
        for x in xs:
            s += x
        mu = s / len(xs)
        ss = 0.0
        for x in xs:
            ss += (x - mu) * (x - mu)
        return mu, math.sqrt(ss / (len(xs) - 1))

    mu1, sd1 = mean_sd(e1)
    mu2, sd2 = mean_sd(e2)
    lines.append(f"Average Error,{fmt(mu1)},{fmt(mu2)}")
    lines.append(f"Standard Deviation,{fmt(sd1)},{fmt(sd2)}")
    (out / "expected_error_table.csv").write_text("\n".join(lines) + "\n")

    # Average-case map.
    lines = ["state,winner,color"]
    tally = {C1: 0, C2: 0}
    for state in sorted(cells):
        d1, d2 = cells[state]
        winner = C1 if mean(d1) > mean(d2) else C2
        tally[winner] += ALLOCATION_2024[state]
        lines.append(f"{state},{winner},{'#2166ac' if winner == C1 else '#b2182b'}")
    (out / "expected_map.csv").write_text("\n".join(lines) + "\n")

    # State win probabilities and the Electoral College PMF.
    lines = ["state,p_c1_wins,p_c2_wins,raw_tie_mass,mean_c1,mean_c2"]
    wins = {}
    for state in sorted(cells):
        d1, d2 = cells[state]
        p1, p2, tie = win_probability(d1, d2)
        wins[state] = p1
        assert exactly_double(p1) and exactly_double(p2)
        lines.append(f"{state},{fmt(p1)},{fmt(p2)},{fmt(tie)},{fmt(mean(d1))},{fmt(mean(d2))}")
    (out / "expected_wins.csv").write_text("\n".join(lines) + "\n")

    pmf = ec_pmf(wins, ALLOCATION_2024)
    assert all(exactly_double(v) for v in pmf)
    lines = ["k,probability"] + [f"{k},{fmt(v)}" for k, v in enumerate(pmf)]
    (out / "expected_ec_pmf.csv").write_text("\n".join(lines) + "\n")

    win270 = sum(pmf[270:])
    print(f"average-case EVs: {tally}; P({C1} >= 270) = {float(win270):.6f}; "
          f"P(269-269) = {float(pmf[269]):.6f}")

    # Two-state allocation {A: 1, B: 2} where both states are coin flips.
    uniform = {49: Fraction(1, 3), 50: Fraction(1, 3), 51: Fraction(1, 3)}
    tiny = {"version": 1, "cells": []}
    for state in ["A", "B"]:
        tiny["cells"].append(cell_json(state, C1, C2, uniform, 1.0))
        tiny["cells"].append(cell_json(state, C2, C1, uniform, 1.0))
    (out / "tiny_cells.json").write_text(json.dumps(tiny, indent=2) + "\n")
    (out / "tiny_allocation.csv").write_text("state,electoral_votes\nA,1\nB,2\n")
    tiny_pmf = ec_pmf({"A": Fraction(1, 2), "B": Fraction(1, 2)}, {"A": 1, "B": 2})
    lines = ["k,probability"] + [f"{k},{fmt(v)}" for k, v in enumerate(tiny_pmf)]
    (out / "expected_tiny_ec_pmf.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
