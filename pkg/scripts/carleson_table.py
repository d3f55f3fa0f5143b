"""Pushforward-measure decay slopes for a few symbols and radial weights.

    python3 scripts/carleson_table.py [--samples 1e7] [--threads 4]
"""
import argparse

from _run import run

CASES = [
    ("3/2-2^-s", 1.0, 2.0),
    ("3/2-1/2*2^-s-1/2*3^-s", 0.0, 1.5),
    ("3/4-1/8*2^-s-1/8*3^-s", 1.0, 3.5),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", default="1e7")
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--seed", type=int, default=7)
    a = ap.parse_args()
    print(f"{'symbol':<28}{'beta':>6}{'expected':>10}{'slope':>9}{'stderr':>9}")
    for symbol, beta, expected in CASES:
        _, doc = run("carleson", "--symbol", symbol, "--beta", beta, "--samples", a.samples,
                     "--threads", a.threads, "--seed", a.seed, "--expect", expected)
        fit = doc["results"]["fits"][0]
        if "error" in fit:
            print(f"{symbol:<28}{beta:>6g}{expected:>10g}  fit failed: {fit['error']}")
            continue
        print(f"{symbol:<28}{beta:>6g}{expected:>10g}{fit['slope']:>9.3f}{fit['slope_stderr']:>9.3f}")


if __name__ == "__main__":
    main()
