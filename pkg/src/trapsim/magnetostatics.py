"""Boundary-integral solver for the trap's induced magnetic field.

The superconductor occupies a semi-infinite block with a cylindrical well
of radius ``well_radius`` and depth ``well_depth`` sunk into its top
face.  Coordinates: the well floor is the plane z = 0 with the axis
through the origin, the block's top face is z = ``well_depth``, and the
vacuum region is the inside of the well plus the half space above the
block.  Flux exclusion (zero London depth) means the total field has no
normal component on the surface, so the induced field can be represented
by a single layer of scalar magnetic surface charge on the boundary:

    B_ind(r) = (1/4pi) sum_j q_j (r - y_j) / |r - y_j|^3,   q_j = sigma_j A_j

Collocating the no-flux condition n.(B_ind + B_f) = 0 at panel centroids
gives a dense linear system whose diagonal is the local jump term 1/2.
The system matrix depends only on the mesh, so it is LU-factored once
and reused for every dipole position and orientation.

The semi-infinite top face is truncated at an outer collar radius
(default four well radii); convergence with collar size and panel count
is exercised in the test suite against the analytic image-plane limit.
"""

from __future__ import annotations

import io
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple
from weakref import WeakKeyDictionary

import numpy as np
from scipy import linalg
from scipy.optimize import brentq

from .core import (
    CONSTANTS,
    Configuration,
    DataFormatError,
    DomainError,
    InvalidParameterError,
    PhysicalConstants,
    SolverFailureError,
    TrapSystem,
    atomic_write_text,
)

__all__ = [
    "SurfaceMesh",
    "PanelSolution",
    "PanelSolver",
    "MeshData",
    "REGION_NAMES",
    "build_trap_mesh",
    "dipole_field",
    "solve_induced_field",
    "induced_B_at",
    "full_potential",
    "magnetic_energy",
    "trap_solver",
    "export_mesh_csv",
    "load_mesh_csv",
]

MIN_PANELS = 200

REGION_FLOOR = 0
REGION_WALL = 1
REGION_COLLAR = 2
REGION_NAMES = ("floor", "wall", "collar")


# --------------------------------------------------------------------------
# mesh
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Panel discretization of the well floor, wall and outer collar.

    Normals point out of the superconductor into the vacuum: +z on the
    floor, radially inward on the wall, +z on the collar.  ``diameters``
    holds each panel's largest in-plane extent, used for the evaluation
    standoff rule.  Areas are the exact annular-sector/cylindrical-strip
    areas, so region areas sum exactly to their analytic values.
    """

    centroids: np.ndarray       # (n, 3) [m]
    normals: np.ndarray         # (n, 3) unit vectors
    areas: np.ndarray           # (n,) [m^2]
    diameters: np.ndarray       # (n,) [m]
    region: np.ndarray          # (n,) codes into REGION_NAMES
    well_radius: float
    well_depth: float
    collar_radius: float
    target_panels: int

    def __post_init__(self) -> None:
        for name in ("centroids", "normals", "areas", "diameters", "region"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_panels(self) -> int:
        return self.areas.size

    def region_count(self, name: str) -> int:
        return int(np.count_nonzero(self.region == REGION_NAMES.index(name)))

    def region_area(self, name: str) -> float:
        return float(self.areas[self.region == REGION_NAMES.index(name)].sum())


def _even(n: int) -> int:
    """Round up to an even integer (mirror symmetry of the mesh)."""
    n = max(int(n), 2)
    return n if n % 2 == 0 else n + 1


def _ring_boundaries(r_in: float, r_out: float, first_width: float,
                     n_rings: int) -> np.ndarray:
    """Radial breakpoints of ``n_rings`` annuli whose widths grow
    geometrically from ``first_width`` to fill [r_in, r_out]."""
    span = r_out - r_in
    if n_rings == 1:
        return np.array([r_in, r_out])
    if n_rings * first_width >= span:
        widths = np.full(n_rings, span / n_rings)
    else:
        def total(g):
            return first_width * (g ** n_rings - 1.0) / (g - 1.0) - span
        lo, hi = 1.0 + 1e-9, 2.0
        while total(hi) < 0.0:
            hi *= 2.0
        g = brentq(total, lo, hi, xtol=1e-14)
        widths = first_width * g ** np.arange(n_rings)
        widths *= span / widths.sum()
    return r_in + np.concatenate([[0.0], np.cumsum(widths)])


def _annulus_panel_count(bounds: np.ndarray) -> int:
    count = 0
    for r1, r2 in zip(bounds[:-1], bounds[1:]):
        count += _even(2.0 * math.pi * 0.5 * (r1 + r2) / (r2 - r1))
    return count


def _graded_annulus_rings(r_in: float, r_out: float, first_width: float,
                          budget: int) -> np.ndarray:
    """Ring boundaries whose total panel count best matches ``budget``."""
    best_bounds, best_err = None, None
    lo, hi = 1, 512
    # panel count grows monotonically with ring count; bisect on it
    while lo < hi:
        mid = (lo + hi) // 2
        bounds = _ring_boundaries(r_in, r_out, first_width, mid)
        if _annulus_panel_count(bounds) < budget:
            lo = mid + 1
        else:
            hi = mid
    for n in (max(lo - 1, 1), lo):
        bounds = _ring_boundaries(r_in, r_out, first_width, n)
        err = abs(_annulus_panel_count(bounds) - budget)
        if best_err is None or err < best_err:
            best_bounds, best_err = bounds, err
    return best_bounds


_FLOOR_SPLIT = 0.3          # inner/outer floor zone boundary, in well radii
_FLOOR_INNER_SHARE = 0.5    # share of the floor budget spent on the inner zone


def _floor_rings(r_in: float, r_out: float, first_width: float,
                 budget: int) -> np.ndarray:
    """Floor ring boundaries: a graded inner zone whose rings grow
    geometrically from ``first_width``, then uniform rings to the wall.

    Both zones refine as the budget grows.  The uniform outer zone bounds
    the panel size everywhere a levitating dipole can sit, since the
    equilibrium migrates toward the wall once the trap is tilted.
    """
    r_mid = _FLOOR_SPLIT * (r_out - r_in) + r_in
    inner = _graded_annulus_rings(r_in, r_mid, first_width,
                                  max(int(round(_FLOOR_INNER_SHARE * budget)),
                                      16))
    # a first width spanning the zone makes every candidate ring count
    # uniform, so this search reduces to picking the uniform width
    outer = _graded_annulus_rings(
        r_mid, r_out, r_out - r_mid,
        max(budget - _annulus_panel_count(inner), 16))
    return np.concatenate([inner, outer[1:]])


def _annulus_panels(bounds: np.ndarray, z: float, region: int):
    """Annular-sector panels between consecutive ring boundaries."""
    cents, areas, diams, regs = [], [], [], []
    for r1, r2 in zip(bounds[:-1], bounds[1:]):
        m = _even(2.0 * math.pi * 0.5 * (r1 + r2) / (r2 - r1))
        dtheta = 2.0 * math.pi / m
        theta = (np.arange(m) + 0.5) * dtheta
        # exact centroid radius of an annular sector
        r_bar = (2.0 / 3.0) * (r2 ** 3 - r1 ** 3) / (r2 ** 2 - r1 ** 2) \
            * math.sin(dtheta / 2.0) / (dtheta / 2.0)
        area = 0.5 * (r2 ** 2 - r1 ** 2) * dtheta
        cents.append(np.column_stack([r_bar * np.cos(theta),
                                      r_bar * np.sin(theta),
                                      np.full(m, z)]))
        areas.append(np.full(m, area))
        diams.append(np.full(m, max(r2 - r1, 0.5 * (r1 + r2) * dtheta)))
        regs.append(np.full(m, region, dtype=np.int8))
    return (np.concatenate(cents), np.concatenate(areas),
            np.concatenate(diams), np.concatenate(regs))


def build_trap_mesh(trap: TrapSystem, resolution: int = 2000,
                    collar_factor: float = 4.0,
                    fine_scale: float | None = None) -> SurfaceMesh:
    """Panel mesh of the well surface with a graded floor.

    The floor is a small central disc plus geometrically widening rings,
    concentrating panels where the dipole field is strongest; the wall is
    meshed in geometrically growing height rows; the collar (the block's
    top face) extends to ``collar_factor`` well radii.  Panel counts per
    region are chosen so the total lands within a few percent of
    ``resolution``.  Azimuthal counts are kept even, which makes the mesh
    exactly mirror-symmetric under x -> -x and y -> -y.
    """
    if resolution < MIN_PANELS:
        raise InvalidParameterError(
            f"resolution {resolution} below minimum {MIN_PANELS}")
    if collar_factor <= 1.0:
        raise InvalidParameterError("collar_factor must exceed 1")
    rw, depth = trap.well_radius, trap.well_depth
    if fine_scale is None:
        fine_scale = rw / 80.0
    if not 0.0 < fine_scale < rw / 4.0:
        raise InvalidParameterError(
            "fine_scale must lie in (0, well_radius/4)")
    collar_radius = collar_factor * rw

    wall_budget = max(int(round(0.25 * resolution)), 48)
    collar_budget = max(int(round(0.15 * resolution)), 24)

    # wall: azimuthal count scales with sqrt(resolution); geometric rows,
    # finest at the floor where the dipole field is largest
    m_wall = _even(48.0 * math.sqrt(resolution / 2000.0))
    n_rows = max(int(round(wall_budget / m_wall)), 4)
    z_bounds = _ring_boundaries(0.0, depth, 4.0 * fine_scale, n_rows)
    dtheta = 2.0 * math.pi / m_wall
    theta = (np.arange(m_wall) + 0.5) * dtheta
    r_mid = rw * math.sin(dtheta / 2.0) / (dtheta / 2.0)  # chord centroid radius
    wall_cents, wall_areas, wall_diams = [], [], []
    for z1, z2 in zip(z_bounds[:-1], z_bounds[1:]):
        wall_cents.append(np.column_stack([
            r_mid * np.cos(theta), r_mid * np.sin(theta),
            np.full(m_wall, 0.5 * (z1 + z2))]))
        wall_areas.append(np.full(m_wall, rw * dtheta * (z2 - z1)))
        wall_diams.append(np.full(m_wall, max(z2 - z1, rw * dtheta)))
    wall_centroids = np.concatenate(wall_cents)
    wall_normals = np.zeros_like(wall_centroids)
    wall_normals[:, 0] = -np.cos(np.tile(theta, n_rows))
    wall_normals[:, 1] = -np.sin(np.tile(theta, n_rows))
    n_wall = wall_centroids.shape[0]

    # collar: graded annulus on the top face, widening outward
    first_collar = (rw - fine_scale) / 10.0
    collar_bounds = _graded_annulus_rings(rw, collar_radius, first_collar,
                                          collar_budget)
    collar_c, collar_a, collar_d, collar_r = _annulus_panels(
        collar_bounds, depth, REGION_COLLAR)

    # floor: central disc, fine fixed-growth rings, then uniform rings at a
    # budget-dependent cap width, so panels stay usably fine under a dipole
    # parked off-centre (the equilibrium migrates toward the wall once the
    # trap is tilted)
    floor_budget = resolution - n_wall - collar_a.size - 1
    if floor_budget < 32:
        raise InvalidParameterError(
            "resolution too small for the requested geometry")
    floor_bounds = _floor_rings(fine_scale, rw, fine_scale, floor_budget)
    floor_c, floor_a, floor_d, floor_r = _annulus_panels(
        floor_bounds, 0.0, REGION_FLOOR)

    centroids = np.vstack([
        np.array([[0.0, 0.0, 0.0]]), floor_c, wall_centroids, collar_c])
    normals = np.vstack([
        np.array([[0.0, 0.0, 1.0]]),
        np.tile([0.0, 0.0, 1.0], (floor_c.shape[0], 1)),
        wall_normals,
        np.tile([0.0, 0.0, 1.0], (collar_c.shape[0], 1))])
    areas = np.concatenate([
        [math.pi * fine_scale ** 2], floor_a,
        np.concatenate(wall_areas), collar_a])
    diameters = np.concatenate([
        [2.0 * fine_scale], floor_d, np.concatenate(wall_diams), collar_d])
    region = np.concatenate([
        np.array([REGION_FLOOR], dtype=np.int8), floor_r,
        np.full(n_wall, REGION_WALL, dtype=np.int8), collar_r])

    return SurfaceMesh(centroids=centroids, normals=normals, areas=areas,
                       diameters=diameters, region=region,
                       well_radius=rw, well_depth=depth,
                       collar_radius=collar_radius,
                       target_panels=int(resolution))


# --------------------------------------------------------------------------
# dipole source field
# --------------------------------------------------------------------------

def dipole_field(mu_vec, r_src, r_eval, mu0: float = CONSTANTS.mu0):
    """Point-dipole field B = (mu0/4pi)[3(mu.rhat)rhat - mu]/|r|^3.

    ``r_eval`` may be a single point (3,) or an array of points (m, 3).
    """
    mu_vec = np.asarray(mu_vec, dtype=float)
    r_src = np.asarray(r_src, dtype=float)
    pts = np.atleast_2d(np.asarray(r_eval, dtype=float))
    d = pts - r_src
    r2 = np.einsum("ij,ij->i", d, d)
    if np.any(r2 == 0.0):
        raise DomainError("field evaluation at the dipole position")
    r = np.sqrt(r2)
    rhat = d / r[:, None]
    mdotr = rhat @ mu_vec
    field = (mu0 / (4.0 * math.pi)) * (
        3.0 * mdotr[:, None] * rhat - mu_vec) / (r2 * r)[:, None]
    return field[0] if np.ndim(r_eval) == 1 else field


# --------------------------------------------------------------------------
# panel solver
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PanelSolution:
    """Surface-charge densities solving the no-flux condition for one
    dipole state, together with the state itself."""

    mesh: SurfaceMesh
    strengths: np.ndarray       # sigma per panel [T]
    mu_vec: np.ndarray          # [A m^2]
    position: np.ndarray        # [m]
    residual_norm: float        # |A sigma - b| / |b|


def _assembly_chunk(n: int) -> int:
    return max(16, min(n, int(6.4e7 / (24 * n))))


class PanelSolver:
    """Dense collocation solve of the single-layer no-flux system.

    The influence matrix depends only on the mesh, so construction does
    the expensive work (assembly, LU factorization, condition estimate)
    once; :meth:`solve` then costs one right-hand side evaluation and a
    triangular solve per dipole state.
    """

    def __init__(self, mesh: SurfaceMesh, condition_limit: float = 1e12,
                 mu0: float = CONSTANTS.mu0) -> None:
        self.mesh = mesh
        self.mu0 = mu0
        n = mesh.n_panels
        cents, norms, areas = mesh.centroids, mesh.normals, mesh.areas
        matrix = np.empty((n, n))
        chunk = _assembly_chunk(n)
        for start in range(0, n, chunk):
            stop = min(start + chunk, n)
            d = cents[start:stop, None, :] - cents[None, :, :]
            r2 = np.einsum("ijk,ijk->ij", d, d)
            nd = np.einsum("ik,ijk->ij", norms[start:stop], d)
            np.fill_diagonal(r2[:, start:stop], 1.0)  # avoid 0/0 on the diagonal
            block = areas[None, :] * nd / (4.0 * math.pi * r2 ** 1.5)
            np.fill_diagonal(block[:, start:stop], 0.5)
            matrix[start:stop] = block
        anorm = float(np.abs(matrix).sum(axis=0).max())
        self._matrix = matrix
        self._lu = linalg.lu_factor(matrix)
        gecon, = linalg.get_lapack_funcs(("gecon",), (matrix,))
        rcond, info = gecon(self._lu[0], anorm)
        if info != 0 or not rcond > 0.0 or 1.0 / rcond > condition_limit:
            cond = math.inf if not rcond > 0.0 else 1.0 / rcond
            raise SolverFailureError(
                f"influence matrix ill-conditioned: estimate {cond:.3g} "
                f"exceeds limit {condition_limit:.3g} "
                f"({n} panels, target {mesh.target_panels})")
        self.condition_estimate = 1.0 / rcond

    def _require_inside_well(self, position: np.ndarray) -> None:
        x, y, z = position
        rho = math.hypot(x, y)
        mesh = self.mesh
        if not (0.0 < z < mesh.well_depth and rho < mesh.well_radius):
            raise DomainError(
                f"dipole at ({x:.4g}, {y:.4g}, {z:.4g}) m is outside the "
                f"well interior (radius {mesh.well_radius:.4g} m, depth "
                f"{mesh.well_depth:.4g} m)")

    def solve(self, mu_vec, position) -> PanelSolution:
        """Source strengths enforcing n.(B_ind + B_f) = 0 at centroids."""
        mu_vec = np.asarray(mu_vec, dtype=float)
        position = np.asarray(position, dtype=float)
        self._require_inside_well(position)
        b_f = dipole_field(mu_vec, position, self.mesh.centroids, self.mu0)
        rhs = -np.einsum("ij,ij->i", self.mesh.normals, b_f)
        strengths = linalg.lu_solve(self._lu, rhs)
        rhs_norm = float(np.linalg.norm(rhs))
        resid = float(np.linalg.norm(self._matrix @ strengths - rhs))
        residual_norm = resid / rhs_norm if rhs_norm > 0.0 else resid
        return PanelSolution(mesh=self.mesh, strengths=strengths,
                             mu_vec=mu_vec, position=position,
                             residual_norm=residual_norm)

    def boundary_normal_total(self, solution: PanelSolution) -> np.ndarray:
        """n.(B_ind + B_f) at every collocation point [T]."""
        b_f = dipole_field(solution.mu_vec, solution.position,
                           self.mesh.centroids, self.mu0)
        rhs = -np.einsum("ij,ij->i", self.mesh.normals, b_f)
        return self._matrix @ solution.strengths - rhs


def solve_induced_field(mesh: SurfaceMesh, mu_vec, position) -> PanelSolution:
    """Convenience wrapper caching one :class:`PanelSolver` per mesh."""
    solver = _mesh_solvers.get(mesh)
    if solver is None:
        solver = PanelSolver(mesh)
        _mesh_solvers[mesh] = solver
    return solver.solve(mu_vec, position)


_mesh_solvers: WeakKeyDictionary = WeakKeyDictionary()


def induced_B_at(solution: PanelSolution, r_eval):
    """Induced field at one or more points from the panel charges.

    Points closer to any panel centroid than 0.1 of that panel's extent
    are rejected -- the point-charge representation is meaningless there.
    """
    mesh = solution.mesh
    pts = np.atleast_2d(np.asarray(r_eval, dtype=float))
    q = solution.strengths * mesh.areas
    out = np.empty_like(pts)
    chunk = _assembly_chunk(mesh.n_panels)
    for start in range(0, pts.shape[0], chunk):
        stop = min(start + chunk, pts.shape[0])
        d = pts[start:stop, None, :] - mesh.centroids[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", d, d)
        near = r2 < (0.1 * mesh.diameters[None, :]) ** 2
        if np.any(near):
            i, j = np.argwhere(near)[0]
            raise DomainError(
                f"evaluation point {pts[start + i]} is within 0.1 panel "
                f"extents of panel {j} ({REGION_NAMES[mesh.region[j]]})")
        out[start:stop] = np.einsum(
            "ij,ijk->ik", q / (4.0 * math.pi * r2 ** 1.5), d)
    return out[0] if np.ndim(r_eval) == 1 else out


# --------------------------------------------------------------------------
# potential energy
# --------------------------------------------------------------------------

_MAX_CACHED_SOLVERS = 4
_solver_cache: OrderedDict = OrderedDict()


def trap_solver(trap: TrapSystem, resolution: int = 2000,
                collar_factor: float = 4.0,
                fine_scale: float | None = None) -> PanelSolver:
    """Cached solver for a trap geometry.

    The mesh (and hence the factored system) depends only on the well
    geometry and meshing knobs -- not on the particle, tilt, or dipole
    state -- so repeated calls with the same geometry reuse one solver.
    """
    key = (round(trap.well_radius, 15), round(trap.well_depth, 15),
           int(resolution), round(collar_factor, 12),
           None if fine_scale is None else round(fine_scale, 15))
    solver = _solver_cache.get(key)
    if solver is None:
        mesh = build_trap_mesh(trap, resolution, collar_factor, fine_scale)
        solver = PanelSolver(mesh)
        _solver_cache[key] = solver
        while len(_solver_cache) > _MAX_CACHED_SOLVERS:
            _solver_cache.popitem(last=False)
    else:
        _solver_cache.move_to_end(key)
    return solver


def magnetic_energy(solution: PanelSolution) -> float:
    """Interaction energy -(1/2) mu . B_ind at the dipole [J].

    The factor 1/2 is the self-consistent induced-source energy: the
    surface currents are themselves proportional to mu.
    """
    b_ind = induced_B_at(solution, solution.position)
    return -0.5 * float(solution.mu_vec @ b_ind)


def full_potential(trap: TrapSystem, config: Configuration,
                   constants: PhysicalConstants = CONSTANTS,
                   solver: PanelSolver | None = None,
                   resolution: int = 2000) -> float:
    """Total potential energy of the particle in a given configuration [J].

    Magnetic part -(1/2) mu.B_ind from the panel solve plus gravity along
    the true gravity direction (the trap's tilt enters here; the mesh and
    solver are tilt independent).
    """
    if solver is None:
        solver = trap_solver(trap, resolution)
    particle = trap.particle
    mu_vec = particle.dipole_moment * np.asarray(config.moment_direction())
    solution = solver.solve(mu_vec, config.position)
    u_mag = magnetic_energy(solution)
    g_dir = np.asarray(trap.gravity_direction())
    u_grav = -particle.mass * constants.g * float(g_dir @ config.position)
    return u_mag + u_grav


# --------------------------------------------------------------------------
# CSV interface
# --------------------------------------------------------------------------

class MeshData(NamedTuple):
    """Panel arrays as read back from a mesh CSV (debug/plotting aid)."""

    centroids: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    strengths: np.ndarray


_MESH_HEADER = "cx,cy,cz,nx,ny,nz,area,strength"


def export_mesh_csv(path: str, mesh: SurfaceMesh,
                    strengths: np.ndarray | None = None) -> None:
    """Write panels as CSV (centroid, normal, area, strength), atomically."""
    if strengths is None:
        strengths = np.zeros(mesh.n_panels)
    elif len(strengths) != mesh.n_panels:
        raise InvalidParameterError("strengths length does not match mesh")
    buf = io.StringIO()
    buf.write(_MESH_HEADER + "\n")
    for c, n, a, s in zip(mesh.centroids, mesh.normals, mesh.areas, strengths):
        buf.write(f"{float(c[0])!r},{float(c[1])!r},{float(c[2])!r},"
                  f"{float(n[0])!r},{float(n[1])!r},{float(n[2])!r},"
                  f"{float(a)!r},{float(s)!r}\n")
    atomic_write_text(path, buf.getvalue())


def load_mesh_csv(path: str) -> MeshData:
    """Read a mesh CSV written by :func:`export_mesh_csv`."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != _MESH_HEADER:
            raise DataFormatError(
                f"{path}: expected header {_MESH_HEADER!r}, got {header!r}")
        try:
            data = np.loadtxt(handle, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from exc
    if data.shape[1] != 8:
        raise DataFormatError(f"{path}: expected 8 columns, got {data.shape[1]}")
    if np.any(data[:, 6] <= 0.0):
        raise DataFormatError(f"{path}: panel areas must be positive")
    return MeshData(centroids=data[:, 0:3], normals=data[:, 3:6],
                    areas=data[:, 6], strengths=data[:, 7])
