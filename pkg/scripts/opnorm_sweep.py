"""Truncated composition-operator norms over N for several weight pairs.

    python3 scripts/opnorm_sweep.py [--n 2^4..2^12]
"""
import argparse

from _run import run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--symbol", default="3/2-2^-s")
    ap.add_argument("--n", default="2^4..2^12")
    ap.add_argument("--pairs", default="1:1,1:0.5,0:0,1:0")
    a = ap.parse_args()
    for pair in a.pairs.split(","):
        alpha, beta = pair.split(":")
        _, doc = run("opnorm", "--symbol", a.symbol, "--alpha", alpha, "--beta", beta, "--n", a.n)
        res = doc["results"]
        cells = " ".join(f"{N}:{v:.4f}" for N, v in zip(res["N"], res["norms"]))
        print(f"alpha={alpha} beta={beta}  {cells}  growth={res['growth_total']:.2%} "
              f"last3 change={res['relative_change_last3']:.3%}")


if __name__ == "__main__":
    main()
