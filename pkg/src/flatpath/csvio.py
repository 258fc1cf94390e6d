"""CSV emission and ingestion for empirical distributions.

Metadata travels in '#'-prefixed comment lines; floats are written with
repr so a parsed file reproduces the estimate exactly.
"""
from __future__ import annotations

import numpy as np

from .distributions import EmpiricalCCDF


def write_ccdf_csv(path, ccdf: EmpiricalCCDF) -> None:
    lines = []
    meta = dict(ccdf.meta)
    meta.setdefault("samples", str(ccdf.n_samples))
    meta.setdefault("censored", str(ccdf.n_censored))
    meta.setdefault("aborted", str(ccdf.n_aborted))
    for key in sorted(meta):
        lines.append(f"# {key}: {meta[key]}")
    lines.append("t,value,stderr")
    for t, v, s in zip(ccdf.grid, ccdf.values, ccdf.stderr):
        lines.append(f"{float(t)!r},{float(v)!r},{float(s)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_ccdf_csv(path) -> EmpiricalCCDF:
    meta: dict[str, str] = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            if line.startswith("t,"):
                if line != "t,value,stderr":
                    raise ValueError(f"{path}: unexpected header {line!r}")
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}: malformed row {line!r}")
            rows.append(tuple(float(x) for x in parts))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows)
    return EmpiricalCCDF(
        grid=data[:, 0], values=data[:, 1], stderr=data[:, 2],
        n_samples=int(meta.get("samples", "0")),
        n_censored=int(meta.get("censored", "0")),
        n_aborted=int(meta.get("aborted", "0")),
        meta=meta)
