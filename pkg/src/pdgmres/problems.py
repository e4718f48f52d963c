"""Generated test systems.

Five-point finite-difference discretizations on the unit square with
homogeneous Dirichlet boundaries, plus random dense-ish systems for
property tests.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .matio import SparseMatrix, from_dense, from_scipy

__all__ = [
    "acceptance_suite",
    "convection_diffusion_2d",
    "laplacian_2d",
    "random_nonsingular",
]


def _five_point(k: int, east: float, west: float, north: float, south: float, centre: float):
    if k < 1:
        raise ValueError("grid size must be positive")
    one = np.ones(k)
    t_x = sp.diags([west * one[1:], east * one[1:]], [-1, 1])
    t_y = sp.diags([south * one[1:], north * one[1:]], [-1, 1])
    eye = sp.identity(k)
    a = sp.kron(eye, t_x) + sp.kron(t_y, eye) + centre * sp.identity(k * k)
    return from_scipy(a)


def laplacian_2d(k: int) -> SparseMatrix:
    """Negative Laplacian on a ``k x k`` interior grid, scaled by ``h**2``."""
    return _five_point(k, -1.0, -1.0, -1.0, -1.0, 4.0)


def convection_diffusion_2d(k: int, peclet_x: float = 0.5, peclet_y: float = 0.25) -> SparseMatrix:
    """``-lap(u) + b . grad(u)`` with central differences, scaled by ``h**2``.

    ``peclet_x`` and ``peclet_y`` are the cell Peclet numbers ``b_i h / 2``;
    values above one make the matrix lose diagonal dominance.
    """
    px, py = float(peclet_x), float(peclet_y)
    return _five_point(k, -1.0 + px, -1.0 - px, -1.0 + py, -1.0 - py, 4.0)


def random_nonsingular(n: int, rng: np.random.Generator, shift: float | None = None) -> SparseMatrix:
    """Random dense matrix made safely nonsingular by a diagonal shift.

    The default shift ``2 sqrt(n)`` exceeds the typical spectral radius of
    an ``n x n`` standard normal matrix, keeping the condition number modest.
    """
    a = rng.standard_normal((n, n))
    s = 2.0 * np.sqrt(n) if shift is None else shift
    a += s * np.eye(n)
    return from_dense(a)


def acceptance_suite() -> dict[str, SparseMatrix]:
    """Six systems with 400 to 961 unknowns used for end-to-end checks."""
    return {
        "lap20": laplacian_2d(20),
        "lap24": laplacian_2d(24),
        "lap31": laplacian_2d(31),
        "cd21": convection_diffusion_2d(21, 0.5, 0.25),
        "cd26": convection_diffusion_2d(26, 0.8, 0.4),
        "cd30": convection_diffusion_2d(30, 0.3, 0.6),
    }
