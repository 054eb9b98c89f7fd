"""Synthetic data generators for tests, benchmarks and the demo fixture.

Two layers: raw ledger CSVs that exercise the full ingest path, and a
direct numeric benchmark matrix with a planted monotone + interaction
signal at a credit-like bad rate.
"""

from __future__ import annotations

import csv
import datetime
from pathlib import Path

import numpy as np


def planted_signal_dataset(n: int = 2000, p: int = 20, bad_rate: float = 0.111, seed: int = 0):
    """Numeric matrix whose label depends on a monotone trend in the first
    features plus a pairwise interaction; intercept tuned to the bad rate."""
    if p < 7:
        raise ValueError("planted signal spans the first 7 columns; need p >= 7")
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    signal = (
        1.8 * X[:, 0]
        - 1.0 * X[:, 1]
        + 1.6 * X[:, 2] * X[:, 3]
        + 1.2 * np.sign(X[:, 4] * X[:, 5])
        + 0.5 * np.tanh(X[:, 6])
    )
    noise = rng.normal(scale=0.8, size=n)
    # choose the intercept so the realized bad fraction hits the target
    z = signal + noise
    cut = np.quantile(z, 1.0 - bad_rate)
    y = (z > cut).astype(int)
    names = [f"f{j:02d}" for j in range(p)]
    return X, y, names


def imbalanced_blobs(n_majority: int = 888, n_minority: int = 111, p: int = 6, seed: int = 0):
    """Two overlapping Gaussian blobs at a credit-like 88.9/11.1 class ratio."""
    rng = np.random.default_rng(seed)
    X0 = rng.normal(loc=0.0, size=(n_majority, p))
    X1 = rng.normal(loc=1.2, size=(n_minority, p))
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(n_majority, dtype=int), np.ones(n_minority, dtype=int)])
    perm = rng.permutation(len(y))
    return X[perm], y[perm]


def write_ledger_fixture(out_dir, n_accounts: int = 50, seed: int = 0, bad_rate: float = 0.2):
    """Write a small but fully-formed four-table CSV ledger.

    Accounts with busier recent windows and healthier balances lean good;
    sparse, sinking accounts lean bad, so models have signal to find.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    app_date = datetime.date(2024, 6, 1)
    snapshot = app_date + datetime.timedelta(days=14)
    clients, accounts, txns, loans = [], [], [], []
    txn_id = 0
    for i in range(n_accounts):
        acc = f"A{i:04d}"
        clients.append((f"C{i:04d}", acc))
        bad = rng.random() < bad_rate
        # bad accounts: fewer, smaller incomes; more and larger expenses
        n_txn = int(rng.integers(4, 12) if bad else rng.integers(10, 30))
        for _ in range(n_txn):
            day = app_date - datetime.timedelta(days=int(rng.integers(0, 120)))
            if rng.random() < (0.35 if bad else 0.6):
                amount = float(rng.uniform(5, 120 if bad else 360))
            else:
                amount = -float(rng.uniform(5, 300 if bad else 180))
            txns.append((f"T{txn_id:06d}", acc, day.isoformat(), f"{amount:.2f}"))
            txn_id += 1
        balance = float(rng.uniform(-250, 80) if bad else rng.uniform(0, 700))
        accounts.append((acc, f"{balance:.2f}", snapshot.isoformat()))
        loans.append((acc, app_date.isoformat(), int(bad)))

    def dump(name, header, rows):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    dump("clients.csv", ["client_id", "account_id"], clients)
    dump("accounts.csv", ["account_id", "balance", "balance_date"], accounts)
    dump("transactions.csv", ["transaction_id", "account_id", "date", "amount"], txns)
    dump("loans.csv", ["account_id", "application_date", "performance"], loans)
    return out
