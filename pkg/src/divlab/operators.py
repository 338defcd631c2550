"""Assembly of the discrete divergence-form operator and the coordinate rescaling.

The quadratic form sum_faces h^d (grad u)^T A_face (grad u) is realized by an
exactly symmetric stencil: axis terms use forward differences weighted by the
arithmetic mean of the adjacent cell coefficients, mixed terms contract
plaquette-averaged forward differences against the cell's off-diagonal
entries.  The scheme is linear in the coefficient field and transfers the
cellwise ellipticity bounds to the discrete form without slack:

    theta_minus * |grad u|^2  <=  u^T K u  <=  theta_plus * |grad u|^2

with |grad u|^2 the uniform h^d-weighted squared face-gradient norm.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.sparse as sp

from .fields import EllipticityError, MatrixField
from .lattice import Grid, as_scalar_field, make_grid


def _pad_average(arr: np.ndarray, axis: int) -> np.ndarray:
    """Cell values -> transverse node positions by two-point means, replicated ends."""
    lead = np.moveaxis(arr, axis, 0)
    padded = np.concatenate([lead[:1], lead, lead[-1:]], axis=0)
    avg = 0.5 * (padded[:-1] + padded[1:])
    return np.moveaxis(avg, 0, axis)


def edge_coefficients(grid: Grid, cells_scalar: np.ndarray, axis: int) -> np.ndarray:
    """Arithmetic mean of a per-cell scalar over the cells adjacent to each axis-face."""
    abar = cells_scalar
    for t in range(grid.d):
        if t != axis:
            abar = _pad_average(abar, axis=t)
    return abar


def _stiffness(grid: Grid, cells: np.ndarray) -> sp.csr_matrix:
    d, h, n = grid.d, grid.h, grid.cells_per_side
    lin = np.arange((n + 1) ** d).reshape(grid.full_shape)
    hd = h**d
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(np.broadcast_to(r, v.shape).ravel())
        cols.append(np.broadcast_to(c, v.shape).ravel())
        vals.append(np.asarray(v, dtype=float).ravel())

    for k in range(d):
        w = hd * edge_coefficients(grid, cells[..., k, k], k) / (h * h)
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[k] = slice(0, n)
        hi[k] = slice(1, n + 1)
        a, b = lin[tuple(lo)], lin[tuple(hi)]
        add(a, a, w)
        add(b, b, w)
        add(a, b, -w)
        add(b, a, -w)

    def corner_block(bits):
        sl = tuple(slice(bits.get(t, 0), n + bits.get(t, 0)) for t in range(d))
        return lin[sl]

    for j in range(d):
        for k in range(j + 1, d):
            ajk = cells[..., j, k]
            if not np.any(ajk):
                continue
            rest = [t for t in range(d) if t not in (j, k)]
            for rest_bits in product((0, 1), repeat=len(rest)):
                bits0 = dict(zip(rest, rest_bits))
                nodes = {}
                for bj, bk in product((0, 1), repeat=2):
                    nodes[(bj, bk)] = corner_block({**bits0, j: bj, k: bk})
                cj = {(0, 0): -1.0, (0, 1): -1.0, (1, 0): 1.0, (1, 1): 1.0}
                ck = {(0, 0): -1.0, (0, 1): 1.0, (1, 0): -1.0, (1, 1): 1.0}
                wgt = 2.0 ** (3 - d) * hd * ajk / (4.0 * h * h)
                for p in nodes:
                    for q in nodes:
                        coef = 0.5 * (cj[p] * ck[q] + ck[p] * cj[q])
                        if coef:
                            add(nodes[p], nodes[q], wgt * coef)

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(lin.size, lin.size),
    ).tocsr()
    mat = 0.5 * (mat + mat.T)

    if grid.bc == "dirichlet":
        inner = tuple(slice(1, -1) for _ in range(d))
        keep = lin[inner].ravel()
        mat = mat[keep][:, keep]
    return mat.tocsr()


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Sparse symmetric realization H = K / h^d acting on unknown-node vectors."""

    grid: Grid
    field: MatrixField | None
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u

    def form(self, u, v=None) -> float:
        """Value of the quadratic/bilinear form with h^d mass weights."""
        u = np.asarray(u, dtype=float).ravel()
        v = u if v is None else np.asarray(v, dtype=float).ravel()
        return float(self.grid.h**self.grid.d * (u @ (self.matrix @ v)))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def shifted(self, other: sp.csr_matrix, t: float) -> "DiscreteOperator":
        return DiscreteOperator(grid=self.grid, field=None,
                                matrix=(self.matrix + t * other).tocsr())


def assemble(grid: Grid, field: MatrixField) -> DiscreteOperator:
    if field.grid != grid:
        raise ValueError("field was sampled on a different grid")
    if field.theta_minus <= 0:
        raise EllipticityError(f"field is not uniformly elliptic (theta_minus={field.theta_minus})")
    mat = _stiffness(grid, field.cells) / grid.h**grid.d
    return DiscreteOperator(grid=grid, field=field, matrix=mat.tocsr())


def perturbation_operator(grid: Grid, w) -> sp.csr_matrix:
    """Operator matrix of the field w * Id for a nonnegative scalar w.

    Not required to be elliptic; used as the derivative direction t |-> A + t w Id.
    """
    w = as_scalar_field(w)
    wc = w.on_cells(grid)
    if np.any(wc < -1e-12):
        raise ValueError("perturbation w must be nonnegative")
    cells = wc.reshape(grid.cells_shape)[..., None, None] * np.eye(grid.d)
    return (_stiffness(grid, cells) / grid.h**grid.d).tocsr()


def rescale(field: MatrixField, G: float, target_n_per_side: int,
            bc: str | None = None) -> tuple[MatrixField, float]:
    """Pull a field on the cube of side G*L back to the unit-scaled cube of side L.

    The map x -> G x must send target cell centers to source cell centers,
    which holds iff m = G * n_src / n_tgt is an odd integer (m = 1 relabels
    the same cells; odd m > 1 subsamples).  Eigenvalues of the rescaled
    operator are G^2 times those of the source; the returned factor is G^2.
    Ellipticity bounds carry over; a Lipschitz constant scales by G.
    """
    src = field.grid
    if G <= 0:
        raise ValueError("scale factor G must be positive")
    ratio = src.L / G
    L_tgt = int(round(ratio))
    if L_tgt < 1 or abs(ratio - L_tgt) > 1e-9:
        raise ValueError(f"G={G} must divide the source side length {src.L}")
    m_exact = G * src.n_per_side / target_n_per_side
    m = int(round(m_exact))
    if abs(m_exact - m) > 1e-9 or m < 1 or m % 2 == 0:
        raise ValueError(
            f"incompatible resolutions: G*n_src/n_tgt = {m_exact} must be an odd integer "
            "so cell centers map to cell centers")
    grid_t = make_grid(src.d, L_tgt, int(target_n_per_side), bc or src.bc)
    idx = (m - 1) // 2 + m * np.arange(grid_t.cells_per_side)
    take = np.ix_(*([idx] * src.d))
    cells = field.cells[take].copy()
    out = MatrixField(
        grid=grid_t, cells=cells,
        theta_minus=field.theta_minus, theta_plus=field.theta_plus,
        theta_lip=None if field.theta_lip is None else G * field.theta_lip,
        lip_provenance=field.lip_provenance,
        dir_ok=field.dir_ok,
        notes=field.notes + (f"rescaled by G={G} onto n={target_n_per_side}",),
    )
    return out, float(G) ** 2
