"""Deterministic CSV/JSON output with atomic writes."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from numbers import Integral, Real

import numpy as np


def fmt(value) -> str:
    """Format one cell: 17 significant digits for floats, text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (Integral, np.integer)):
        return str(int(value))
    if isinstance(value, (complex, np.complexfloating)):
        return f"{fmt(value.real)}{'+' if value.imag >= 0 else '-'}{fmt(abs(value.imag))}j"
    if isinstance(value, (Real, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    if isinstance(value, tuple):
        return ":".join(fmt(v) for v in value)
    return str(value)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (Integral, np.integer)):
        return int(obj)
    if isinstance(obj, (Real, np.floating)):
        x = float(obj)
        # JSON has no nan/inf; keep them as strings
        return x if math.isfinite(x) else fmt(x)
    if isinstance(obj, complex):
        return [float(obj.real), float(obj.imag)]
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``.

    A symbolic link is followed and its target replaced; targets that exist
    but are not regular files (devices, pipes) are written to directly.
    """
    path = os.path.realpath(os.fspath(path))
    if os.path.exists(path) and not os.path.isfile(path):
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    write_atomic(path, csv_text(header, rows))


def write_json(path, obj) -> None:
    write_atomic(path, json_text(obj))
