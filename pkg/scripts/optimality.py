"""Fitted decay slopes of the optimality probe on a (p, beta) grid.

    python3 scripts/optimality.py
"""
import argparse

from _run import run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ps", default="1.25,1.5,1.75")
    ap.add_argument("--eps", default="2^-6..2^-12")
    a = ap.parse_args()
    print(f"{'p':>6}{'beta':>8}{'slope':>9}{'theory':>9}")
    for p in map(float, a.ps.split(",")):
        at = 2 / p - 1
        for beta in (at / 2, at, at + 0.25):
            _, doc = run("embed", "optimality", "--p", p, "--beta", beta, "--eps", a.eps)
            res = doc["results"]
            print(f"{p:>6g}{beta:>8.3f}{res['lhs']:>9.3f}{res['rhs']:>9.3f}")


if __name__ == "__main__":
    main()
