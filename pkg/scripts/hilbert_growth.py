"""Hilbert-matrix experiments: norm ratio, the convergence split, and h4 growth.

    python3 scripts/hilbert_growth.py [--threads 4]
"""
import argparse
import json

from _run import run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--threads", type=int, default=4)
    a = ap.parse_args()
    for mode in ("ratio", "dichotomy", "h4"):
        code, doc = run("hilbert", mode, "--threads", a.threads, "--seed", 10)
        print(f"== {mode} (exit {code})")
        print(json.dumps(doc["results"], indent=1, default=str)[:2000])


if __name__ == "__main__":
    main()
