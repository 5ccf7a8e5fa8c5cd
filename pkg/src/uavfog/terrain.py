"""Random continuous terrain, waypoint grid, no-fly set, and safety values.

Space is discretized into cells whose centers serve as waypoints. Vertical
levels sit at z = iz * cell_z starting from the ground plane, so a zero
terrain surface claims exactly the ground layer for the no-fly set. A cell
belongs to the no-fly set O when its center is at or below the surface;
cells whose center exceeds the altitude ceiling are infeasible as well.

The safety value of a directed step mu -> nu is the fraction of feasible
waypoints among those scanned within range R_f inside the 90-degree cone
around the step direction: kappa = (N_f - N_infeasible) / N_f.
"""

from __future__ import annotations

import io
import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

# fixed direction order for the 26-connected neighborhood
OFFSETS = [off for off in itertools.product((-1, 0, 1), repeat=3)
           if off != (0, 0, 0)]
OPPOSITE = [OFFSETS.index((-dx, -dy, -dz)) for (dx, dy, dz) in OFFSETS]
N_DIRS = len(OFFSETS)


class DegenerateScanError(ValueError):
    """Scan range shorter than one cell pitch: no waypoints to count."""


class UnreachableTargetError(RuntimeError):
    """A planning target is disconnected from the start waypoint."""


def _value_noise(rng, shape, octaves: int, persistence: float) -> np.ndarray:
    """Smooth random field in [0, 1]: octaves of bilinear-upsampled noise."""
    nx, ny = shape
    total = np.zeros(shape)
    amplitude = 1.0
    norm = 0.0
    for octave in range(octaves):
        res = 2 ** (octave + 1) + 1
        coarse = rng.random((res, res))
        xi = np.linspace(0.0, res - 1.0, nx)
        yi = np.linspace(0.0, res - 1.0, ny)
        x0 = np.clip(xi.astype(int), 0, res - 2)
        y0 = np.clip(yi.astype(int), 0, res - 2)
        fx = (xi - x0)[:, None]
        fy = (yi - y0)[None, :]
        c00 = coarse[np.ix_(x0, y0)]
        c10 = coarse[np.ix_(x0 + 1, y0)]
        c01 = coarse[np.ix_(x0, y0 + 1)]
        c11 = coarse[np.ix_(x0 + 1, y0 + 1)]
        layer = (c00 * (1 - fx) * (1 - fy) + c10 * fx * (1 - fy)
                 + c01 * (1 - fx) * fy + c11 * fx * fy)
        total += amplitude * layer
        norm += amplitude
        amplitude *= persistence
    total /= norm
    lo, hi = total.min(), total.max()
    if hi - lo < 1e-12:
        return np.zeros(shape)
    return (total - lo) / (hi - lo)


@dataclass
class TerrainGrid:
    dims: tuple                 # (n_x, n_y, n_z)
    cell: tuple                 # (c_x, c_y, c_z), m
    heightmap: np.ndarray       # (n_x, n_y), m
    z_max: float
    no_fly: np.ndarray = field(init=False)     # flat bool, terrain cells
    feasible: np.ndarray = field(init=False)   # flat bool, flyable cells
    centers: np.ndarray = field(init=False)    # (n_cells, 3), m
    nbr_table: np.ndarray = field(init=False)  # (n_cells, 26) int32, -1 off-grid

    def __post_init__(self):
        nx, ny, nz = self.dims
        cx, cy, cz = self.cell
        zs = np.arange(nz) * cz
        below = zs[None, None, :] <= self.heightmap[:, :, None]
        self.no_fly = below.reshape(-1)
        above_ceiling = zs[None, None, :] > self.z_max
        self.feasible = (~below & ~above_ceiling).reshape(-1)
        ix, iy, iz = np.indices(self.dims)
        self.centers = np.column_stack([
            ((ix + 0.5) * cx).ravel(),
            ((iy + 0.5) * cy).ravel(),
            (iz * cz).astype(float).ravel(),
        ])
        self.nbr_table = _build_neighbor_table(self.dims)

    # --- indexing -----------------------------------------------------
    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def flat_index(self, cell) -> int:
        ix, iy, iz = cell
        nx, ny, nz = self.dims
        if not (0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz):
            raise IndexError(f"cell {cell} outside grid {self.dims}")
        return (ix * ny + iy) * nz + iz

    def unflatten(self, idx: int):
        nx, ny, nz = self.dims
        iz = idx % nz
        rest = idx // nz
        return (rest // ny, rest % ny, iz)

    def center(self, cell) -> np.ndarray:
        return self.centers[self.flat_index(cell)]

    def surface_height(self, x: float, y: float) -> float:
        """Terrain height of the column containing (x, y)."""
        nx, ny, _ = self.dims
        ix = min(max(int(x / self.cell[0]), 0), nx - 1)
        iy = min(max(int(y / self.cell[1]), 0), ny - 1)
        return float(self.heightmap[ix, iy])

    def cell_of_point(self, point):
        x, y, z = point
        nx, ny, nz = self.dims
        ix = min(max(int(x / self.cell[0]), 0), nx - 1)
        iy = min(max(int(y / self.cell[1]), 0), ny - 1)
        iz = min(max(int(round(z / self.cell[2])), 0), nz - 1)
        return (ix, iy, iz)

    # --- operations ----------------------------------------------------
    def neighbors(self, cell):
        """Feasible 26-connected neighbors (no-fly and above-ceiling excluded)."""
        idx = self.flat_index(cell)
        out = set()
        for nbr in self.nbr_table[idx]:
            if nbr >= 0 and self.feasible[nbr]:
                out.add(self.unflatten(int(nbr)))
        return out

    def nearest_feasible_cell(self, point) -> int:
        """Flat index of the feasible waypoint closest to a 3D point."""
        if not self.feasible.any():
            raise UnreachableTargetError("grid has no feasible cells")
        d2 = ((self.centers - np.asarray(point, dtype=float)) ** 2).sum(axis=1)
        d2[~self.feasible] = np.inf
        return int(np.argmin(d2))

    def reachable_from(self, start_idx: int) -> np.ndarray:
        """Flood fill over feasible cells; boolean mask per cell."""
        seen = np.zeros(self.n_cells, dtype=bool)
        if not self.feasible[start_idx]:
            return seen
        seen[start_idx] = True
        queue = deque([start_idx])
        while queue:
            cur = queue.popleft()
            for nbr in self.nbr_table[cur]:
                if nbr >= 0 and self.feasible[nbr] and not seen[nbr]:
                    seen[nbr] = True
                    queue.append(int(nbr))
        return seen


def _build_neighbor_table(dims) -> np.ndarray:
    nx, ny, nz = dims
    ix, iy, iz = np.indices(dims)
    table = np.full((nx * ny * nz, N_DIRS), -1, dtype=np.int32)
    for d, (dx, dy, dz) in enumerate(OFFSETS):
        jx, jy, jz = ix + dx, iy + dy, iz + dz
        valid = ((0 <= jx) & (jx < nx) & (0 <= jy) & (jy < ny)
                 & (0 <= jz) & (jz < nz))
        flat = (jx * ny + jy) * nz + jz
        table[:, d] = np.where(valid, flat, -1).ravel()
    return table


def generate_terrain(seed: int, dims, max_height: float, roughness: float,
                     octaves: int = 4, cell_size=100.0,
                     z_max: float = float("inf")) -> TerrainGrid:
    """Deterministic continuous surface plus derived no-fly set."""
    nx, ny, nz = dims
    if min(nx, ny, nz) <= 0:
        raise ValueError(f"grid dims must be positive, got {dims}")
    if max_height >= z_max:
        raise ValueError(f"max terrain height {max_height} must stay below "
                         f"z_max {z_max}")
    cell = ((cell_size,) * 3 if np.isscalar(cell_size) else tuple(cell_size))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x7E44]))
    if max_height <= 0:
        surface = np.zeros((nx, ny))
    else:
        surface = _value_noise(rng, (nx, ny), octaves, roughness) * max_height
    return TerrainGrid(dims=(nx, ny, nz), cell=cell, heightmap=surface,
                       z_max=z_max)


# ----------------------------------------------------------------------
# safety values

def scan_offsets(direction, cell, scan_range: float):
    """Integer offsets whose centers fall inside the scan cone.

    Cone: physical distance in (0, scan_range] and angle to the step
    direction at most 45 degrees.
    """
    cx, cy, cz = cell
    dvec = np.array([direction[0] * cx, direction[1] * cy, direction[2] * cz])
    dnorm = np.linalg.norm(dvec)
    reach = int(math.floor(scan_range / min(cx, cy, cz))) + 1
    out = []
    for off in itertools.product(range(-reach, reach + 1), repeat=3):
        if off == (0, 0, 0):
            continue
        vec = np.array([off[0] * cx, off[1] * cy, off[2] * cz])
        dist = np.linalg.norm(vec)
        if dist > scan_range + 1e-9:
            continue
        cosang = float(np.dot(vec, dvec) / (dist * dnorm))
        if cosang >= math.sqrt(2.0) / 2.0 - 1e-12:
            out.append(off)
    return out


def safety_value(grid: TerrainGrid, mu, nu, scan_range: float) -> float:
    """kappa for one step: feasible fraction of the scanned waypoints."""
    mu_idx = grid.flat_index(mu)
    delta = tuple(int(b - a) for a, b in zip(mu, nu))
    if delta not in OFFSETS:
        raise ValueError(f"{nu} is not a grid neighbor of {mu}")
    if scan_range <= 0:
        raise DegenerateScanError("scan range must be positive")
    offsets = scan_offsets(delta, grid.cell, scan_range)
    nx, ny, nz = grid.dims
    n_total = 0
    n_bad = 0
    for ox, oy, oz in offsets:
        jx, jy, jz = mu[0] + ox, mu[1] + oy, mu[2] + oz
        if not (0 <= jx < nx and 0 <= jy < ny and 0 <= jz < nz):
            continue
        n_total += 1
        if not grid.feasible[grid.flat_index((jx, jy, jz))]:
            n_bad += 1
    if n_total == 0:
        raise DegenerateScanError(
            f"scan range {scan_range} m covers no waypoints from {mu} "
            f"toward {nu}")
    return (n_total - n_bad) / n_total


def _shift_views(arr_dims, off):
    """Destination and source slice tuples for a lattice shift."""
    dst, src = [], []
    for size, o in zip(arr_dims, off):
        if o >= 0:
            dst.append(slice(0, size - o))
            src.append(slice(o, size))
        else:
            dst.append(slice(-o, size))
            src.append(slice(0, size + o))
    return tuple(dst), tuple(src)


def safety_field(grid: TerrainGrid, scan_range: float) -> np.ndarray:
    """kappa for every directed edge, shape (n_cells, 26).

    Directions whose scan cone covers no in-grid waypoint (possible only at
    extreme boundary geometry) fall back to kappa = 0.
    """
    if scan_range < min(grid.cell) - 1e-9:
        raise DegenerateScanError(
            f"scan range {scan_range} m is below one cell pitch "
            f"{min(grid.cell)} m")
    nx, ny, nz = grid.dims
    infeasible = (~grid.feasible).reshape(grid.dims).astype(np.float64)
    ones = np.ones(grid.dims)
    field_out = np.zeros((grid.n_cells, N_DIRS))
    for d, direction in enumerate(OFFSETS):
        n_tot = np.zeros(grid.dims)
        n_bad = np.zeros(grid.dims)
        for off in scan_offsets(direction, grid.cell, scan_range):
            dst, src = _shift_views(grid.dims, off)
            n_tot[dst] += ones[src]
            n_bad[dst] += infeasible[src]
        with np.errstate(invalid="ignore", divide="ignore"):
            kappa = np.where(n_tot > 0, (n_tot - n_bad) / np.maximum(n_tot, 1), 0.0)
        field_out[:, d] = kappa.reshape(-1)
    return field_out


# ----------------------------------------------------------------------
# heightmap fixture IO: plain text matrix, rows = y, columns = x, meters

def heightmap_to_text(grid: TerrainGrid) -> str:
    buf = io.StringIO()
    np.savetxt(buf, grid.heightmap.T, fmt="%.17g")
    return buf.getvalue()


def terrain_from_text(text: str, cell_size, n_levels: int,
                      z_max: float) -> TerrainGrid:
    rows = np.loadtxt(io.StringIO(text), ndmin=2)
    heightmap = rows.T
    cell = ((cell_size,) * 3 if np.isscalar(cell_size) else tuple(cell_size))
    return TerrainGrid(dims=(heightmap.shape[0], heightmap.shape[1], n_levels),
                       cell=cell, heightmap=heightmap, z_max=z_max)
