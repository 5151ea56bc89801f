"""CSV/JSON emission: comma-separated, header row, LF endings, 17 significant digits."""

import csv
import io
import json
import math

MEASUREMENT_COLUMNS = [
    "n", "t", "a", "b", "d", "seed", "estimator", "M",
    "estimate", "std_error", "ci_radius", "trials", "hits",
]
PREDICTION_COLUMNS = ["n", "t", "a", "b", "d", "seed", "estimator", "M", "predicted", "kind"]
ORACLE_COLUMNS = ["n", "d", "M", "noise", "seed", "decoder", "threshold", "p_total", "p_undetected"]


def fmt(value):
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def write_csv(fh, rows, columns):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])


def csv_text(rows, columns):
    buf = io.StringIO()
    write_csv(buf, rows, columns)
    return buf.getvalue()


def save_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        write_csv(fh, rows, columns)


def save_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
