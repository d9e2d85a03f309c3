"""Pure-Python kernels: the reference implementation of the hot inner loops.

The compiled twin in ``_core.pyx`` performs the same arithmetic in the same
order, so both backends produce identical IEEE-754 results. Keep the two in
lockstep when changing anything here.
"""

from __future__ import annotations

import math

BACKEND = "pure"


def multiplicative_update(probs: list[float], target: int, strength: float) -> list[float]:
    """Rescale one component by (1 + strength) and renormalize.

    ``strength`` must be > -1 so the target mass stays positive.
    """
    scaled = list(probs)
    scaled[target] = (1.0 + strength) * scaled[target]
    total = 0.0
    for p in scaled:
        total += p
    return [p / total for p in scaled]


def entropy_norm(probs: list[float]) -> float:
    """Shannon entropy in bits divided by log2(n); zero terms contribute 0."""
    n = len(probs)
    if n <= 1:
        return 0.0
    h = 0.0
    for p in probs:
        if p > 0.0:
            h -= p * math.log2(p)
    return h / math.log2(n)


def advance_along_path(
    x: float,
    y: float,
    leg: int,
    wx: list[float],
    wy: list[float],
    distance: float,
) -> tuple[float, float, int, bool]:
    """Move a point ``distance`` meters along a waypoint polyline.

    ``leg`` is the index of the waypoint currently being approached. Returns
    the new position, the new leg index, and whether the final waypoint was
    reached with distance to spare.
    """
    n = len(wx)
    while leg < n and distance > 0.0:
        dx = wx[leg] - x
        dy = wy[leg] - y
        seg = math.sqrt(dx * dx + dy * dy)
        if seg <= distance:
            x = wx[leg]
            y = wy[leg]
            distance -= seg
            leg += 1
        else:
            f = distance / seg
            x += dx * f
            y += dy * f
            distance = 0.0
    return x, y, leg, leg >= n


def mark_disk(
    covered: bytearray,
    width: int,
    height: int,
    cx: float,
    cy: float,
    radius: float,
    cell: float,
) -> list[int]:
    """Mark all cells whose center lies within ``radius`` meters of (cx, cy).

    ``covered`` is a row-major width*height bitmap. Returns the flat indices
    of cells newly marked by this call, in row-major order.
    """
    newly: list[int] = []
    r2 = radius * radius
    min_col = int((cx - radius) / cell)
    max_col = int((cx + radius) / cell)
    min_row = int((cy - radius) / cell)
    max_row = int((cy + radius) / cell)
    if min_col < 0:
        min_col = 0
    if min_row < 0:
        min_row = 0
    if max_col > width - 1:
        max_col = width - 1
    if max_row > height - 1:
        max_row = height - 1
    for row in range(min_row, max_row + 1):
        py = (row + 0.5) * cell - cy
        base = row * width
        for col in range(min_col, max_col + 1):
            px = (col + 0.5) * cell - cx
            if px * px + py * py <= r2:
                idx = base + col
                if not covered[idx]:
                    covered[idx] = 1
                    newly.append(idx)
    return newly


def path_length(wx: list[float], wy: list[float], x: float, y: float) -> float:
    """Total length of the polyline starting at (x, y) through all waypoints."""
    total = 0.0
    for i in range(len(wx)):
        dx = wx[i] - x
        dy = wy[i] - y
        total += math.sqrt(dx * dx + dy * dy)
        x = wx[i]
        y = wy[i]
    return total
