"""CSV emission.  Values carry 12 significant digits so reruns are byte-identical."""
from __future__ import annotations

import csv
from pathlib import Path

HEADER = ("t", "regret_total", "regret_explore", "regret_exploit", "regret_comm", "epoch", "bound")


def fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".12g")


def emit_csv(records, path) -> Path:
    """Write trajectory records (dicts with the component columns) sorted by ``t``."""
    path = Path(path)
    rows = sorted(records, key=lambda r: r["t"])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            for r in rows:
                total = r["regret_explore"] + r["regret_exploit"] + r["regret_comm"]
                w.writerow([int(r["t"]), fmt(total), fmt(r["regret_explore"]), fmt(r["regret_exploit"]),
                            fmt(r["regret_comm"]), int(r.get("epoch", 0)), fmt(r.get("bound"))])
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def emit_bound_csv(ts, values, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t", "bound_value"))
            for t, v in zip(ts, values):
                w.writerow([int(t), fmt(v)])
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
