"""Flat-text serialization: field dumps, operator COO dumps, result tables."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fields import MatrixField, _build
from .lattice import Grid, make_grid
from .operators import DiscreteOperator
from .spectral import LiftingCurve, Spectrum


def save_field(field: MatrixField, path) -> None:
    """Text dump: header `d L n_per_side`, then one row per cell (row-major),
    matrix entries row-major within the row."""
    grid = field.grid
    flat = field.cells.reshape(-1, grid.d * grid.d)
    header = f"{grid.d} {grid.L} {grid.n_per_side}"
    np.savetxt(path, flat, header=header, comments="# ")


def load_field(path, bc: str = "dirichlet") -> MatrixField:
    with open(path) as fh:
        header = fh.readline().lstrip("# ").split()
    d, L, n = (int(x) for x in header[:3])
    grid = make_grid(d, L, n, bc)
    flat = np.loadtxt(path)
    flat = np.atleast_2d(flat)
    cells = flat.reshape(grid.cells_shape + (d, d))
    return _build(grid, cells, theta_lip=None, lip_provenance="none",
                  notes=(f"loaded from {Path(path).name}",))


def save_operator_coo(op: DiscreteOperator, path) -> None:
    coo = op.matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# {op.dim} {op.dim} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v)!r}\n")


def save_spectrum_table(spec: Spectrum, path) -> None:
    with open(path, "w") as fh:
        fh.write("index\teigenvalue\tresidual\n")
        for i in range(spec.k):
            fh.write(f"{i}\t{float(spec.energies[i])!r}\t{float(spec.residuals[i])!r}\n")


def save_curve_table(curve: LiftingCurve, path) -> None:
    """Columns: index, t, eigenvalue, hf_value, residual, degenerate flag."""
    with open(path, "w") as fh:
        fh.write("index\tt\teigenvalue\thf_value\tresidual\tdegenerate\n")
        for row, n in enumerate(curve.indices):
            for it, t in enumerate(curve.ts):
                fh.write(f"{n}\t{float(t)!r}\t{float(curve.energies[row, it])!r}\t"
                         f"{float(curve.hf_values[row, it])!r}\t"
                         f"{float(curve.residuals[row, it])!r}\t"
                         f"{int(curve.degenerate[row, it])}\n")


def save_report_json(report, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj)}")
