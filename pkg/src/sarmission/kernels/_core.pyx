# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: the hot inner loops of the tick loop and belief math.

Mirrors ``_pure.py`` operation-for-operation so both backends produce
identical IEEE-754 results. Keep the two in lockstep.
"""

from libc.math cimport sqrt, log2

BACKEND = "compiled"


def multiplicative_update(probs, int target, double strength):
    cdef list scaled = list(probs)
    scaled[target] = (1.0 + strength) * scaled[target]
    cdef double total = 0.0
    cdef double p
    for p in scaled:
        total += p
    return [p / total for p in scaled]


def entropy_norm(probs):
    cdef int n = len(probs)
    if n <= 1:
        return 0.0
    cdef double h = 0.0
    cdef double p
    for p in probs:
        if p > 0.0:
            h -= p * log2(p)
    return h / log2(<double> n)


def advance_along_path(double x, double y, int leg, wx, wy, double distance):
    cdef int n = len(wx)
    cdef double dx, dy, seg, f
    while leg < n and distance > 0.0:
        dx = <double> wx[leg] - x
        dy = <double> wy[leg] - y
        seg = sqrt(dx * dx + dy * dy)
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


def mark_disk(covered, int width, int height, double cx, double cy,
              double radius, double cell):
    cdef list newly = []
    cdef double r2 = radius * radius
    cdef int min_col = <int> ((cx - radius) / cell)
    cdef int max_col = <int> ((cx + radius) / cell)
    cdef int min_row = <int> ((cy - radius) / cell)
    cdef int max_row = <int> ((cy + radius) / cell)
    cdef int row, col, idx, base
    cdef double px, py
    cdef unsigned char[:] bitmap = covered
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
                if not bitmap[idx]:
                    bitmap[idx] = 1
                    newly.append(idx)
    return newly


def path_length(wx, wy, double x, double y):
    cdef double total = 0.0
    cdef double dx, dy
    cdef int i
    for i in range(len(wx)):
        dx = <double> wx[i] - x
        dy = <double> wy[i] - y
        total += sqrt(dx * dx + dy * dy)
        x = wx[i]
        y = wy[i]
    return total
