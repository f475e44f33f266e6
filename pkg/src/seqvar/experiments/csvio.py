"""CSV writers; floats are printed with 17 significant digits."""

from __future__ import annotations

import csv
import io
import sys

BENCH_HEADER = ["estimator", "n", "t", "reps", "mse", "se", "seed", "plug_mode"]


def fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def render(header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row[h]) for h in header])
    return buf.getvalue()


def write_rows(path, header, rows, comments=()):
    text = render(header, rows, comments)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_csv(results, path):
    """Bench results in the fixed ``estimator,n,t,reps,mse,se,seed,plug_mode`` schema."""
    return write_rows(path, BENCH_HEADER, [r.as_row() for r in results])


def read_csv(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
