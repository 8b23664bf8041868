"""CSV ingestion and emission for capture-recapture datasets.

Accepted input schemas, detected from the header:

* a ``d`` column holding the integer capture count in 1..K, or
* K binary occasion columns ``occ1``..``occK``, summed into the count.

Every other column is treated as a numeric covariate, in header order. An
empty cell, ``NA`` or ``.`` marks a missing value; a record is complete
only when all of its missingness-prone covariates are present (partially
observed covariate vectors are treated as missing entirely). The
missingness indicator is always derived, never read from a column. For the
extended layout the ``always_observed`` column must be complete and binary
and is placed right after the intercept.
"""

from __future__ import annotations

import csv
import re

import numpy as np

from .model import CaptureDataset, DataError

_MISSING_TOKENS = {"", "NA", "."}
_OCC_PATTERN = re.compile(r"^occ(\d+)$")


def _parse_value(token: str, column: str, line: int):
    token = token.strip() if token is not None else ""
    if token in _MISSING_TOKENS:
        return None
    try:
        return float(token)
    except ValueError:
        raise DataError(
            f"malformed numeric {token!r} in column {column!r} at line {line}"
        ) from None


def ingest_csv(path, family_name: str = "base", k: int | None = None,
               always_observed: str | None = None) -> CaptureDataset:
    """Read a dataset from CSV.

    ``k`` is required with the ``d`` schema and validated (or inferred)
    with the occasion-column schema. Under the base family an
    ``always_observed`` column, when named, is excluded from the covariate
    vector; under the extended family it is required.
    """
    if family_name not in ("base", "extended"):
        raise DataError(f"unknown model family {family_name!r}")
    if family_name == "extended" and not always_observed:
        raise DataError("extended family requires --always-observed column name")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = [row for row in reader if any(cell.strip() for cell in row)]

    occ_cols = sorted(
        (int(m.group(1)), name)
        for name, m in ((h, _OCC_PATTERN.match(h)) for h in header) if m
    )
    if "d" in header:
        d_col = header.index("d")
        occ_idx = None
        if k is None:
            raise DataError("the d-column schema requires the number of occasions")
    elif occ_cols:
        nums = [num for num, _ in occ_cols]
        k_seen = max(nums)
        if nums != list(range(1, k_seen + 1)):
            raise DataError(f"occasion columns must be occ1..occK, got {nums}")
        if k is None:
            k = k_seen
        elif k != k_seen:
            raise DataError(f"found {k_seen} occasion columns but k = {k}")
        d_col = None
        occ_idx = [header.index(name) for _, name in occ_cols]
    else:
        raise DataError("need a 'd' column or occ1..occK occasion columns")

    reserved = {"d"} | {name for _, name in occ_cols}
    covariate_cols = [h for h in header if h not in reserved]
    if always_observed is not None:
        if always_observed not in covariate_cols:
            raise DataError(f"always-observed column {always_observed!r} not in file")
        covariate_cols.remove(always_observed)
    if family_name == "base" and always_observed is not None:
        x_used = False
    else:
        x_used = family_name == "extended"

    d_list: list[int] = []
    x_list: list[int] = []
    z_rows: list[list[float]] = []
    r_list: list[bool] = []
    zero_rows: list[int] = []
    for i, row in enumerate(rows):
        line = i + 2
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        if d_col is not None:
            val = _parse_value(row[d_col], "d", line)
            if val is None or val != int(val):
                raise DataError(f"line {line}: capture count must be an integer")
            d_val = int(val)
        else:
            d_val = 0
            for j, idx in enumerate(occ_idx):
                val = _parse_value(row[idx], f"occ{j + 1}", line)
                if val not in (0.0, 1.0):
                    raise DataError(f"line {line}: occasion columns must be 0/1")
                d_val += int(val)
        if d_val == 0:
            zero_rows.append(line)
            continue
        if d_val < 0 or d_val > k:
            raise DataError(f"line {line}: capture count {d_val} outside 1..{k}")

        if x_used:
            xv = _parse_value(row[header.index(always_observed)], always_observed, line)
            if xv is None:
                raise DataError(f"line {line}: missing always-observed value")
            if xv not in (0.0, 1.0):
                raise DataError(f"line {line}: always-observed column must be 0/1")
            x_list.append(int(xv))

        values = [_parse_value(row[header.index(c)], c, line) for c in covariate_cols]
        complete = all(v is not None for v in values)
        d_list.append(d_val)
        r_list.append(complete)
        if complete:
            zrow = [1.0]
            if x_used:
                zrow.append(float(x_list[-1]))
            zrow.extend(values)
            z_rows.append(zrow)

    if zero_rows:
        raise DataError(
            f"rows with zero captures are not part of the model; lines {zero_rows}"
        )

    names = ((always_observed,) if x_used else ()) + tuple(covariate_cols)
    p = 1 + len(names)
    z = np.array(z_rows, dtype=float).reshape(len(z_rows), p)
    return CaptureDataset(
        k=int(k),
        d=np.array(d_list, dtype=int),
        r=np.array(r_list, dtype=bool),
        z=z,
        x=np.array(x_list, dtype=int) if x_used else None,
        covariate_names=names,
    )


def dataset_to_csv(dataset: CaptureDataset, path) -> None:
    """Write the canonical d-column schema; missing covariates become NA."""
    names = list(dataset.covariate_names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", *names])
        zi = 0
        has_x = dataset.x is not None
        for i in range(dataset.n):
            row: list = [int(dataset.d[i])]
            if dataset.r[i]:
                values = [repr(float(v)) for v in dataset.z[zi, 1:]]
                if has_x:
                    values[0] = str(int(dataset.x[i]))
                row.extend(values)
                zi += 1
            else:
                if has_x:
                    row.append(str(int(dataset.x[i])))
                    row.extend(["NA"] * (len(names) - 1))
                else:
                    row.extend(["NA"] * len(names))
            writer.writerow(row)
