"""On-disk artifact formats: deterministic CSV and JSON.

Function CSVs carry a header ``theta,<component names>``; coefficient CSVs
carry ``k`` followed by real/imaginary columns per component, with rows
ordered by ascending wavenumber.  All floats are written with 17 significant
digits ('%.17g', which round-trips doubles exactly), LF line endings, UTF-8,
'.' decimal separator, so identical runs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .series import FourierSeries

__all__ = [
    "format_float",
    "write_rows_csv",
    "write_function_csv",
    "write_series_csv",
    "read_series_csv",
    "write_json",
    "read_json",
    "sha256_file",
]


def format_float(x: float) -> str:
    return "%.17g" % float(x)


def write_rows_csv(path, header, rows) -> str:
    """Write rows of str/float cells; floats formatted deterministically."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(c if isinstance(c, str) else format_float(c) for c in row)
        )
    data = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def write_function_csv(path, theta, values, names) -> str:
    """Sampled curve: theta plus one column per component."""
    values = np.asarray(values)
    header = ["theta"] + list(names)
    rows = (
        [theta[i]] + [values[i, j] for j in range(values.shape[1])]
        for i in range(len(theta))
    )
    return write_rows_csv(path, header, rows)


def _component_labels(value_shape) -> list:
    if value_shape == ():
        return ["c"]
    if len(value_shape) == 1:
        return [f"c{i}" for i in range(value_shape[0])]
    return [
        f"c{i}_{j}" for i in range(value_shape[0]) for j in range(value_shape[1])
    ]


def write_series_csv(path, series: FourierSeries, meta: dict | None = None) -> str:
    """Coefficient table: k, then re/im per component, ascending k.

    A leading comment line records grid size and period so the series can be
    reconstructed exactly.
    """
    n = series.grid_size
    order = np.argsort(series.k, kind="stable")
    flat = series.coef.reshape(n, -1)
    labels = _component_labels(series.value_shape)
    header = ["k"] + [f"{p}_{c}" for c in labels for p in ("re", "im")]
    lines = [
        "# grid_size=%d period=%s value_shape=%s"
        % (n, format_float(series.period), "x".join(map(str, series.value_shape)))
    ]
    lines.append(",".join(header))
    for idx in order:
        cells = [str(int(series.k[idx]))]
        for c in range(flat.shape[1]):
            cells.append(format_float(flat[idx, c].real))
            cells.append(format_float(flat[idx, c].imag))
        lines.append(",".join(cells))
    data = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def read_series_csv(path) -> FourierSeries:
    with open(path, "r", encoding="utf-8") as fh:
        meta_line = fh.readline().strip()
        if not meta_line.startswith("#"):
            raise ValueError(f"{path}: missing series metadata line")
        meta = dict(part.split("=") for part in meta_line[1:].split())
        n = int(meta["grid_size"])
        period = float(meta["period"])
        shape_txt = meta["value_shape"]
        value_shape = (
            () if shape_txt == "" else tuple(int(s) for s in shape_txt.split("x"))
        )
        fh.readline()  # header
        raw = np.loadtxt(fh, delimiter=",", ndmin=2)
    k = raw[:, 0].astype(int)
    comps = (raw.shape[1] - 1) // 2
    coef_sorted = raw[:, 1::2] + 1j * raw[:, 2::2]
    coef = np.zeros((n, comps), dtype=complex)
    coef[k % n] = coef_sorted
    return FourierSeries(coef.reshape((n, *value_shape)), period)


class _Encoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
            return [obj.real, obj.imag]
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return super().default(obj)


def write_json(path, payload) -> str:
    data = json.dumps(payload, indent=1, sort_keys=True, cls=_Encoder)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data + "\n")
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
