"""Independent reference implementations used to check the real code.

Everything here is deliberately written the dumb way (brute force scans,
full-matrix algebra, textbook Dijkstra) and shares no code with the
package under test.
"""

from __future__ import annotations

import math

import numpy as np

SQRT2 = math.sqrt(2.0)


# -- homogeneous 3x3 matrices for 2D rigid transforms


def mat_from_2d(theta: float, x: float, y: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, x], [s, c, y], [0.0, 0.0, 1.0]])


def mat_apply(m: np.ndarray, px: float, py: float) -> tuple[float, float]:
    v = m @ np.array([px, py, 1.0])
    return float(v[0]), float(v[1])


# -- homogeneous 4x4 matrices for 3D rigid transforms


def mat_from_quat(q, t) -> np.ndarray:
    w, x, y, z = q
    rot = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = t
    return m


# -- flood-fill segmentation (stack-based, 4-connectivity)


def flood_fill_labels(grid: np.ndarray) -> np.ndarray:
    ny, nx = grid.shape
    labels = np.full((ny, nx), -1, dtype=int)
    next_label = 0
    for start_y in range(ny):
        for start_x in range(nx):
            if labels[start_y, start_x] != -1:
                continue
            colour = grid[start_y, start_x]
            stack = [(start_x, start_y)]
            labels[start_y, start_x] = next_label
            while stack:
                cx, cy = stack.pop()
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    px, py = cx + dx, cy + dy
                    if 0 <= px < nx and 0 <= py < ny and labels[py, px] == -1 \
                            and grid[py, px] == colour:
                        labels[py, px] = next_label
                        stack.append((px, py))
            next_label += 1
    return labels


def same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """True when two labelings induce the same partition (up to relabeling)."""
    if a.shape != b.shape:
        return False
    fwd: dict = {}
    rev: dict = {}
    for la, lb in zip(a.ravel().tolist(), b.ravel().tolist()):
        if fwd.setdefault(la, lb) != lb:
            return False
        if rev.setdefault(lb, la) != la:
            return False
    return True


# -- thick line rasterization: full-grid per-cell distance scan


def raster_cells_bruteforce(points, width, nx, ny, cell):
    def seg_dist(px, py, x0, y0, x1, y1):
        dx, dy = x1 - x0, y1 - y0
        L2 = dx * dx + dy * dy
        if L2 == 0.0:
            return math.hypot(px - x0, py - y0)
        t = max(0.0, min(1.0, ((px - x0) * dx + (py - y0) * dy) / L2))
        return math.hypot(px - (x0 + t * dx), py - (y0 + t * dy))

    covered = set()
    segments = list(zip(points, points[1:])) or [(points[0], points[0])]
    for iy in range(ny):
        cy = (iy + 0.5) * cell
        for ix in range(nx):
            cx = (ix + 0.5) * cell
            for (x0, y0, *_), (x1, y1, *_) in segments:
                if seg_dist(cx, cy, x0, y0, x1, y1) <= width / 2.0:
                    covered.add((ix, iy))
                    break
    return covered


# -- occupancy from box intersections: full-grid scan


def occupancy_bruteforce(items, exclude, resolution, play_w=0.60, play_h=0.33):
    eps = 1e-9  # zero-area contact (up to float noise) does not occupy
    nx = math.ceil(play_w / resolution)
    ny = math.ceil(play_h / resolution)
    moved = next(i for i in items if i.id == exclude)
    occupied = np.zeros((ny, nx), dtype=bool)
    for item in items:
        if item.id == exclude:
            continue
        bx0 = item.pose.x - item.w / 2.0 - moved.w / 2.0
        bx1 = item.pose.x + item.w / 2.0 + moved.w / 2.0
        by0 = item.pose.y - item.h / 2.0 - moved.h / 2.0
        by1 = item.pose.y + item.h / 2.0 + moved.h / 2.0
        for iy in range(ny):
            for ix in range(nx):
                if ix * resolution < bx1 - eps and (ix + 1) * resolution > bx0 + eps \
                        and iy * resolution < by1 - eps and (iy + 1) * resolution > by0 + eps:
                    occupied[iy, ix] = True
    return occupied


# -- Dijkstra on the 8-connected grid, no corner cutting


def dijkstra_cost(occupied: np.ndarray, start, goal):
    """Optimal-path cost (exact, from step counts) or None when unreachable."""
    import heapq

    ny, nx = occupied.shape

    def free(c):
        x, y = c
        return 0 <= x < nx and 0 <= y < ny and not occupied[y, x]

    if not free(start) or not free(goal):
        return None
    dist = {start: (0.0, 0, 0)}  # g, n_orth, n_diag
    heap = [(0.0, start)]
    visited = set()
    while heap:
        g, cell = heapq.heappop(heap)
        if cell in visited:
            continue
        visited.add(cell)
        if cell == goal:
            _, n_orth, n_diag = dist[cell]
            return n_orth + n_diag * SQRT2
        cx, cy = cell
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nxt = (cx + dx, cy + dy)
                if not free(nxt):
                    continue
                diagonal = dx != 0 and dy != 0
                if diagonal and not (free((cx + dx, cy)) and free((cx, cy + dy))):
                    continue
                step = SQRT2 if diagonal else 1.0
                ng = g + step
                if nxt not in dist or ng < dist[nxt][0]:
                    _, n_orth, n_diag = dist[cell]
                    dist[nxt] = (
                        ng,
                        n_orth + (0 if diagonal else 1),
                        n_diag + (1 if diagonal else 0),
                    )
                    heapq.heappush(heap, (ng, nxt))
    return None


# -- two-pass statistics


def two_pass_mean_sd(values):
    n = len(values)
    if n == 0:
        return None, None
    mean = sum(values) / n
    if n < 2:
        return mean, None
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


# -- contingency-table kappa


def kappa_from_table(table: np.ndarray) -> float:
    """Cohen's kappa from a square label-by-label count table."""
    n = table.sum()
    p_o = np.trace(table) / n
    p_e = float(np.sum(table.sum(axis=0) * table.sum(axis=1))) / (n * n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))
