#!/usr/bin/env python3
"""Generate a synthetic four-table CSV ledger for demos and smoke tests.

Usage: python3 scripts/make_synthetic_data.py --out data/demo --accounts 200 --seed 0
"""

import argparse

from creditshap.synthetic import write_ledger_fixture


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/demo", help="output directory")
    parser.add_argument("--accounts", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bad-rate", type=float, default=0.2)
    args = parser.parse_args()
    out = write_ledger_fixture(args.out, n_accounts=args.accounts, seed=args.seed, bad_rate=args.bad_rate)
    print(f"wrote clients/accounts/transactions/loans CSVs to {out}")


if __name__ == "__main__":
    main()
