"""CSV and manifest formats.

Parameter files are section-tagged, one logical row per line::

    weights,l1,...,lm
    mean,x1,...,xn          (m lines)
    stddev,s1,...,sn        (m lines, diagonal), or
    cov,j,r1,...,rn         (n lines per component, full)

Floats are written with 17 significant digits so a round trip is exact.
"""
from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import numpy as np

from .params import GmmParams
from .sampling import SampleMatrix

FLOAT_FMT = "%.17g"


def _fmt(values) -> list[str]:
    return [FLOAT_FMT % v for v in np.asarray(values, dtype=float).ravel()]


def _floats(cells, where: str) -> list[float]:
    try:
        return [float(c) for c in cells]
    except ValueError:
        raise ValueError(f"non-numeric value in {where}") from None


def write_params(path, params: GmmParams) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["weights", *_fmt(params.weights)])
        for j in range(params.m):
            w.writerow(["mean", *_fmt(params.means[:, j])])
        if params.diagonal:
            for j in range(params.m):
                w.writerow(["stddev", *_fmt(params.stddevs[:, j])])
        else:
            for j, cov in enumerate(params.covs):
                for row in cov:
                    w.writerow(["cov", str(j), *_fmt(row)])


def read_params(path) -> GmmParams:
    weights, means, stds = None, [], []
    covs: dict[int, list[list[float]]] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            tag, cells = row[0].strip(), row[1:]
            where = f"{path}:{lineno}"
            if tag == "weights":
                if weights is not None:
                    raise ValueError(f"duplicate weights line at {where}")
                weights = _floats(cells, where)
            elif tag == "mean":
                means.append(_floats(cells, where))
            elif tag == "stddev":
                stds.append(_floats(cells, where))
            elif tag == "cov":
                if not cells:
                    raise ValueError(f"cov line without component index at {where}")
                covs.setdefault(int(cells[0]), []).append(_floats(cells[1:], where))
            else:
                raise ValueError(f"unknown section tag {tag!r} at {where}")
    if weights is None or not means:
        raise ValueError(f"{path}: needs a weights line and at least one mean line")
    if len({len(r) for r in means}) != 1:
        raise ValueError(f"{path}: mean lines have differing lengths")
    m_arr = np.array(means, dtype=float).T
    if stds and covs:
        raise ValueError(f"{path}: both stddev and cov sections present")
    try:
        if stds:
            return GmmParams(np.array(weights), m_arr, stddevs=np.array(stds, dtype=float).T)
        if covs:
            if sorted(covs) != list(range(len(covs))):
                raise ValueError(f"{path}: cov component indices must be 0..m-1")
            return GmmParams(np.array(weights), m_arr, covs=np.array([covs[j] for j in range(len(covs))], dtype=float))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    raise ValueError(f"{path}: no covariance section")


def write_samples(path, samples: SampleMatrix) -> None:
    np.savetxt(path, samples.data.T, delimiter=",", fmt=FLOAT_FMT)


def read_samples(path) -> SampleMatrix:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.size == 0:
        raise ValueError(f"{path}: no samples")
    return SampleMatrix(np.ascontiguousarray(data.T))


def read_matrix(path) -> np.ndarray:
    """Square matrix file, one row per line."""
    mat = np.loadtxt(path, delimiter=",", ndmin=2)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{path}: expected a square matrix, got {mat.shape}")
    return mat


def write_table(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([FLOAT_FMT % v if isinstance(v, (float, np.floating)) else v for v in row])


def write_manifest(path, command: str, config: dict, seed, runtime: float, argv=None) -> None:
    from . import __version__

    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "runtime_seconds": runtime,
        "argv": list(sys.argv[1:] if argv is None else argv),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
