"""Adaptive-resolution minimization of a 2D objective over a rectangle.

The domain is covered by a ``2**d x 2**d`` grid of cells. Level 0 is a
single block evaluated at its lower-left corner. At level ``i`` the fraction
``s_i`` of the previous level's blocks with the smallest values is split into
four children, each evaluated at its own lower-left corner and painted onto
its cells of ``Q``. Regions that are never refined keep the value of their
coarse block, so ``Q`` is a piecewise constant picture of the objective at
varying resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .runtime_model import PENALTY

__all__ = [
    "Block",
    "ParamDomain",
    "QuadtreeResult",
    "RenderedQuadtree",
    "Sample",
    "build",
    "planned_evaluations",
    "render",
    "sample_point",
    "select_blocks",
]

#: Image colour of cells whose objective failed.
PENALTY_RGB = (0, 0, 0)
PENALTY_GRAY = 255


@dataclass(frozen=True)
class ParamDomain:
    """Rectangle ``[u_lo, u_hi] x [v_lo, v_hi]`` of parameter pairs."""

    u_lo: float
    u_hi: float
    v_lo: float
    v_hi: float
    integer_u: bool = False
    integer_v: bool = False

    def __post_init__(self):
        if not (self.u_lo < self.u_hi and self.v_lo < self.v_hi):
            raise ValueError(f"empty domain {self.bounds()}")

    def bounds(self):
        return (self.u_lo, self.u_hi, self.v_lo, self.v_hi)

    @property
    def width(self):
        return (self.u_hi - self.u_lo, self.v_hi - self.v_lo)

    def _snap(self, x, lo, hi):
        x = math.floor(x + 0.5)
        return float(min(max(x, max(1, math.ceil(lo))), math.floor(hi)))

    def point(self, iu: int, iv: int, depth: int) -> tuple[float, float]:
        """Lower-left corner of grid cell ``(iu, iv)`` at resolution ``2**depth``."""
        side = 1 << depth
        u = self.u_lo + iu * (self.u_hi - self.u_lo) / side
        v = self.v_lo + iv * (self.v_hi - self.v_lo) / side
        if self.integer_u:
            u = self._snap(u, self.u_lo, self.u_hi)
        if self.integer_v:
            v = self._snap(v, self.v_lo, self.v_hi)
        return u, v

    def contains(self, u: float, v: float) -> bool:
        return self.u_lo <= u <= self.u_hi and self.v_lo <= v <= self.v_hi

    def cell_of(self, u: float, v: float, depth: int) -> tuple[int, int]:
        """Finest-grid cell containing ``(u, v)``; the upper edges belong to the last cell."""
        side = 1 << depth

        def index(x, lo, hi):
            i = math.floor((x - lo) / (hi - lo) * side + 1e-9)
            return min(max(i, 0), side - 1)

        return index(u, self.u_lo, self.u_hi), index(v, self.v_lo, self.v_hi)

    def halved(self, center: tuple[float, float], within: ParamDomain | None = None) -> ParamDomain:
        """Domain of half the side lengths centred on ``center``.

        With ``within`` given, the result is shifted (not shrunk) so it stays
        inside those bounds.
        """
        def axis(c, lo, hi, blo, bhi):
            half = (hi - lo) / 4.0
            new_lo, new_hi = c - half, c + half
            if blo is not None:
                if new_lo < blo:
                    new_lo, new_hi = blo, blo + 2 * half
                elif new_hi > bhi:
                    new_lo, new_hi = bhi - 2 * half, bhi
            return new_lo, new_hi

        b = within.bounds() if within is not None else (None,) * 4
        u_lo, u_hi = axis(center[0], self.u_lo, self.u_hi, b[0], b[1])
        v_lo, v_hi = axis(center[1], self.v_lo, self.v_hi, b[2], b[3])
        return replace(self, u_lo=u_lo, u_hi=u_hi, v_lo=v_lo, v_hi=v_hi)

    def as_dict(self):
        return {
            "u_lo": self.u_lo,
            "u_hi": self.u_hi,
            "v_lo": self.v_lo,
            "v_hi": self.v_hi,
            "integer_u": self.integer_u,
            "integer_v": self.integer_v,
        }


@dataclass(frozen=True, order=True)
class Block:
    """Square block of ``Q``: origin cell ``(row, col)`` and side ``size`` in cells."""

    row: int
    col: int
    size: int

    def children(self):
        h = self.size // 2
        if h < 1:
            raise ValueError("a single cell cannot be split")
        return [
            Block(self.row, self.col, h),
            Block(self.row, self.col + h, h),
            Block(self.row + h, self.col, h),
            Block(self.row + h, self.col + h, h),
        ]

    def region(self):
        return (slice(self.row, self.row + self.size), slice(self.col, self.col + self.size))


@dataclass(frozen=True)
class Sample:
    u: float
    v: float
    value: float
    level: int  # -1 for extra points
    penalized: bool = False


@dataclass
class QuadtreeResult:
    """Outcome of one quadtree build, or of an aggregation of several.

    ``q[iu, iv]`` holds the value painted on cell ``(iu, iv)``, with ``u``
    along the rows. ``owner[iu, iv]`` indexes the sample that painted it.
    """

    depth: int
    domain: ParamDomain
    ratios: tuple[float, ...]
    q: np.ndarray
    penalized_mask: np.ndarray
    owner: np.ndarray
    samples: list[Sample]
    evaluations_per_level: list[int] = field(default_factory=list)
    selected: list[list[Block]] = field(default_factory=list)
    #: Set on aggregates only: per-cell count of matrices that failed there
    #: and the geometric mean over the others, used when every cell failed.
    penalty_count: np.ndarray | None = None
    fallback_values: np.ndarray | None = None

    @property
    def evaluations(self) -> int:
        return sum(self.evaluations_per_level)

    def argmin_cell(self) -> tuple[int, int]:
        """Cell of minimal value; row-major first on ties.

        When every cell is penalized, prefer cells that failed for the fewest
        matrices, then the smallest value among the rest.
        """
        ok = ~self.penalized_mask
        if ok.any():
            vals = np.where(ok, self.q, np.inf)
            flat = int(np.argmin(vals))
        else:
            counts = self.penalty_count if self.penalty_count is not None else np.ones_like(self.q)
            vals = self.fallback_values if self.fallback_values is not None else self.q
            order = np.lexsort((vals.ravel(), counts.ravel()))
            flat = int(order[0])
        side = self.q.shape[1]
        return flat // side, flat % side

    def best(self) -> Sample:
        """Sample owning the argmin cell."""
        iu, iv = self.argmin_cell()
        return self.samples[int(self.owner[iu, iv])]

    def min_value(self) -> float:
        ok = ~self.penalized_mask
        return float(self.q[ok].min()) if ok.any() else PENALTY


def planned_evaluations(depth: int, ratios: Sequence[float]) -> list[int]:
    """Objective evaluations per level that ``build`` will perform."""
    counts = [1]
    blocks = 1
    for s in ratios[:depth]:
        kept = _kept(s, blocks)
        blocks = 4 * kept
        counts.append(blocks)
    return counts


def _kept(ratio: float, count: int) -> int:
    # round first so ratios such as 0.1 * 40 do not become 4.000000000000001
    return min(count, math.ceil(round(ratio * count, 9)))


def select_blocks(blocks: Iterable[tuple[Block, float]], ratio: float) -> list[Block]:
    """The ``ceil(ratio * count)`` blocks with the smallest values.

    Ties are broken by block origin in row-major order.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    items = sorted(blocks, key=lambda bv: (bv[1], bv[0].row, bv[0].col))
    if not items:
        return []
    return [b for b, _ in items[: _kept(ratio, len(items))]]


def sample_point(block: Block, domain: ParamDomain, depth: int) -> tuple[float, float]:
    """Point where ``block`` is evaluated: its lower-left corner in the domain."""
    side = 1 << depth
    if not (0 <= block.row < side and 0 <= block.col < side and block.size >= 1):
        raise ValueError(f"{block} outside a {side}x{side} grid")
    return domain.point(block.row, block.col, depth)


def _evaluate(f, u, v) -> tuple[float, bool]:
    try:
        value = float(f(u, v))
    except Exception:  # any failure of the objective marks the cell, never aborts
        return PENALTY, True
    if not math.isfinite(value) or value >= PENALTY:
        return PENALTY, True
    return value, False


def build(
    f: Callable[[float, float], float],
    domain: ParamDomain,
    depth: int,
    ratios: Sequence[float],
    extra_points: Sequence[tuple[float, float]] = (),
) -> QuadtreeResult:
    """Evaluate ``f`` on an adaptively refined quadtree over ``domain``.

    Extra points are evaluated after the tree and painted onto the finest
    cell containing them. They never seed refinement. An extra point does
    not replace a finer-level sample evaluated in the same cell unless it is
    better.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    ratios = tuple(float(s) for s in ratios)
    if len(ratios) != depth:
        raise ValueError(f"need {depth} ratios, got {len(ratios)}")
    for s in ratios:
        if not 0 < s <= 1:
            raise ValueError(f"ratio must lie in (0, 1], got {s}")
    side = 1 << depth
    q = np.empty((side, side))
    pen = np.zeros((side, side), dtype=bool)
    owner = np.zeros((side, side), dtype=np.int64)
    samples: list[Sample] = []
    per_level: list[int] = []
    selected_per_level: list[list[Block]] = []

    def paint(block, level):
        u, v = sample_point(block, domain, depth)
        value, bad = _evaluate(f, u, v)
        samples.append(Sample(u, v, value, level, bad))
        region = block.region()
        q[region] = value
        pen[region] = bad
        owner[region] = len(samples) - 1
        return value

    root = Block(0, 0, side)
    level_blocks = [(root, paint(root, 0))]
    per_level.append(1)
    for level, s in enumerate(ratios, start=1):
        chosen = select_blocks(level_blocks, s)
        selected_per_level.append(chosen)
        level_blocks = []
        for block in chosen:
            for child in block.children():
                level_blocks.append((child, paint(child, level)))
        per_level.append(len(level_blocks))

    extras = 0
    for u, v in extra_points:
        u, v = float(u), float(v)
        if not domain.contains(u, v):
            raise ValueError(f"extra point ({u}, {v}) outside domain {domain.bounds()}")
        value, bad = _evaluate(f, u, v)
        samples.append(Sample(u, v, value, -1, bad))
        extras += 1
        iu, iv = domain.cell_of(u, v, depth)
        prev = samples[owner[iu, iv]]
        if domain.cell_of(prev.u, prev.v, depth) == (iu, iv) and prev.value <= value:
            continue  # an evaluated sample at this very cell is at least as good
        q[iu, iv] = value
        pen[iu, iv] = bad
        owner[iu, iv] = len(samples) - 1
    if extras:
        per_level.append(extras)

    return QuadtreeResult(
        depth=depth,
        domain=domain,
        ratios=ratios,
        q=q,
        penalized_mask=pen,
        owner=owner,
        samples=samples,
        evaluations_per_level=per_level,
        selected=selected_per_level,
    )


@dataclass(frozen=True)
class RenderedQuadtree:
    ppm: bytes
    pgm: bytes
    csv: str


def _levels(result: QuadtreeResult, factor: float) -> np.ndarray:
    """Map ``q`` to [0, 1] with clipping at ``factor * min``."""
    ok = ~result.penalized_mask
    if not ok.any():
        return np.zeros(result.q.shape)
    lo = float(result.q[ok].min())
    hi = factor * lo
    if not hi > lo:
        return np.zeros(result.q.shape)
    return np.clip((result.q - lo) / (hi - lo), 0.0, 1.0)


def render(result: QuadtreeResult, scale_max_factor: float = 1.5, cell_px: int = 1) -> RenderedQuadtree:
    """Heatmap images and sample table of a quadtree.

    The colour ramp runs from blue at the minimum to yellow at
    ``scale_max_factor`` times the minimum; larger values are clipped.
    Penalized cells are black in the PPM and white in the PGM, where the
    ramp stops one level short of white. ``u`` runs left to right and ``v``
    bottom to top.
    """
    if scale_max_factor <= 1:
        raise ValueError("scale_max_factor must exceed 1")
    t = _levels(result, scale_max_factor)
    pen = result.penalized_mask
    # image row 0 is the top, i.e. the largest v index
    t_img = np.repeat(np.repeat(t.T[::-1], cell_px, 0), cell_px, 1)
    pen_img = np.repeat(np.repeat(pen.T[::-1], cell_px, 0), cell_px, 1)
    h, w = t_img.shape

    rgb = np.empty((h, w, 3), dtype=np.uint8)
    ramp = np.rint(255 * t_img).astype(np.uint8)
    rgb[..., 0] = ramp
    rgb[..., 1] = ramp
    rgb[..., 2] = 255 - ramp
    rgb[pen_img] = PENALTY_RGB
    ppm = f"P6\n{w} {h}\n255\n".encode() + rgb.tobytes()

    gray = np.rint(254 * t_img).astype(np.uint8)
    gray[pen_img] = PENALTY_GRAY
    pgm = f"P5\n{w} {h}\n255\n".encode() + gray.tobytes()

    lines = ["u,v,value,level"]
    for s in result.samples:
        lines.append(f"{s.u!r},{s.v!r},{s.value!r},{s.level}")
    return RenderedQuadtree(ppm, pgm, "\n".join(lines) + "\n")
