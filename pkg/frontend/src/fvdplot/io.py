"""Readers for the simulator's CSV/JSON output schemas.

The plotter consumes files only; it never imports the simulator.  Missing
columns are reported by name so a schema mismatch is immediately obvious.
"""

import csv
import json
import os


class PlotInputError(ValueError):
    pass


def read_csv(path):
    """CSV -> dict of column name -> list of floats (strings passed through)."""
    if not os.path.exists(path):
        raise PlotInputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotInputError(f"{path}: empty file, nothing to plot")
        columns = {name: [] for name in header}
        n_rows = 0
        for row in reader:
            if not row:
                continue
            n_rows += 1
            for name, value in zip(header, row):
                try:
                    columns[name].append(float(value))
                except ValueError:
                    columns[name].append(value)
    if n_rows == 0:
        raise PlotInputError(f"{path}: no data rows, refusing to emit a blank figure")
    return columns


def require_columns(columns, names, path):
    missing = [n for n in names if n not in columns]
    if missing:
        raise PlotInputError(
            f"{path}: missing column(s) {', '.join(missing)}; "
            f"found {', '.join(columns)}")
    return [columns[n] for n in names]


def read_json(path, required=()):
    if not os.path.exists(path):
        raise PlotInputError(f"input file not found: {path}")
    with open(path) as fh:
        payload = json.load(fh)
    missing = [k for k in required if k not in payload]
    if missing:
        raise PlotInputError(f"{path}: missing key(s) {', '.join(missing)}")
    return payload


def read_matrix_csv(path):
    """Matrix grid.csv: first column rb_over_a, remaining columns alpha_*."""
    columns = read_csv(path)
    if "rb_over_a" not in columns:
        raise PlotInputError(f"{path}: missing column rb_over_a")
    alpha_cols = [c for c in columns if c.startswith("alpha_")]
    if not alpha_cols:
        raise PlotInputError(f"{path}: no alpha_* columns; found {', '.join(columns)}")
    alphas = [float(c.split("_", 1)[1]) for c in alpha_cols]
    order = sorted(range(len(alphas)), key=lambda i: alphas[i])
    alphas = [alphas[i] for i in order]
    rbas = columns["rb_over_a"]
    matrix = [[columns[alpha_cols[i]][r] for i in order] for r in range(len(rbas))]
    return alphas, rbas, matrix
