"""Partial sums of multiplicative functions against their predicted log power.

    python3 scripts/avg_order.py [--x 1e8] [--threads 4]
"""
import argparse

from _run import run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--x", default="1e8")
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--specs", default="omega:1.5,omega:2,divisor:1,divisor:2")
    a = ap.parse_args()
    for spec in a.specs.split(","):
        code, doc = run("avg-order", "--spec", spec, "--x", a.x, "--threads", a.threads)
        res = doc["results"]
        first, last = res["rows"][0], res["rows"][-1]
        print(f"{spec:<12} log power {res['log_power']:g}  ratio {first[-1]:.4f} -> {last[-1]:.4f}  "
              f"{'ok' if code == 0 else 'FAIL'}")


if __name__ == "__main__":
    main()
