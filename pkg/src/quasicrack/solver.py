"""P1 finite elements for the mixed Laplace problem on a cracked mesh.

The discrete displacement minimizes the Dirichlet energy over nodal
fields matching the boundary datum on constrained Dirichlet nodes;
crack faces carry natural (do-nothing) conditions through the node
duplication done by the mesher. Floating components (no constrained
node) are pinned at their lowest node index.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, cg

from .mesh import CrackMesh, TriangleLocator

CG_RTOL = 1e-10
CG_MAXITER_FACTOR = 20


class SolveFailure(Exception):
    """Linear solve did not converge or the system is singular."""


class MeshMismatch(Exception):
    """Operands live on different meshes."""


class RegionNotSimplyConnected(Exception):
    """Conjugate recovery requested on a non-disk region."""


@dataclass(frozen=True)
class BoundaryDatum:
    """Trace of an admissible displacement, evaluable on the closed domain.

    `tag` identifies the datum for memoization; leave empty to opt out.
    `mesh_sampler`, when given, overrides nodal sampling (needed for data
    that jump across the crack, where plus/minus copies take different
    values).
    """

    evaluator: Callable[[float, float], float]
    tag: str = ""
    mesh_sampler: Callable[[CrackMesh], np.ndarray] | None = None

    def sample(self, mesh: CrackMesh) -> np.ndarray:
        if self.mesh_sampler is not None:
            return np.asarray(self.mesh_sampler(mesh), dtype=float)
        ev = self.evaluator
        return np.array([ev(x, y) for x, y in mesh.nodes], dtype=float)


def scale_datum(g: BoundaryDatum, c: float) -> BoundaryDatum:
    ev = g.evaluator
    sampler = None
    if g.mesh_sampler is not None:
        base = g.mesh_sampler
        sampler = lambda mesh: c * np.asarray(base(mesh), dtype=float)
    return BoundaryDatum(
        evaluator=lambda x, y: c * ev(x, y),
        tag=f"{g.tag}*{c!r}" if g.tag else "",
        mesh_sampler=sampler,
    )


def combine_datums(
    ga: BoundaryDatum, gb: BoundaryDatum, a: float, b: float, tag: str = ""
) -> BoundaryDatum:
    eva, evb = ga.evaluator, gb.evaluator
    sampler = None
    if ga.mesh_sampler is not None or gb.mesh_sampler is not None:
        def sampler(mesh, _ga=ga, _gb=gb, _a=a, _b=b):
            return _a * _ga.sample(mesh) + _b * _gb.sample(mesh)
    return BoundaryDatum(
        evaluator=lambda x, y: a * eva(x, y) + b * evb(x, y),
        tag=tag,
        mesh_sampler=sampler,
    )


@dataclass(frozen=True)
class ScalarField:
    """Nodal P1 field; crack-face duplicates may carry distinct values."""

    mesh: CrackMesh
    nodal_values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.nodal_values, dtype=np.float64)
        if len(v) != self.mesh.n_nodes:
            raise MeshMismatch("one value per node required")
        v.setflags(write=False)
        object.__setattr__(self, "nodal_values", v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("node_id,x,y,value\n")
        for i, ((x, y), v) in enumerate(zip(self.mesh.nodes, self.nodal_values)):
            buf.write(f"{i},{x!r},{y!r},{v!r}\n")
        return buf.getvalue()

    def to_vtk(self, name: str = "u") -> str:
        out = self.mesh.to_vtk()
        lines = [out.rstrip("\n")]
        lines.append(f"POINT_DATA {self.mesh.n_nodes}")
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{v!r}" for v in self.nodal_values)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GradientField:
    """Per-triangle constant gradient (extended by zero on the crack)."""

    mesh: CrackMesh
    values: np.ndarray  # (T, 2)


def gradient(u: ScalarField) -> GradientField:
    mesh = u.mesh
    uv = u.nodal_values[mesh.triangles]
    gx = np.einsum("ti,ti->t", mesh.grad_x, uv)
    gy = np.einsum("ti,ti->t", mesh.grad_y, uv)
    return GradientField(mesh, np.stack([gx, gy], axis=1))


def _same_mesh(a: CrackMesh, b: CrackMesh) -> bool:
    return a is b or (
        a.nodes.shape == b.nodes.shape
        and np.array_equal(a.nodes, b.nodes)
        and np.array_equal(a.triangles, b.triangles)
    )


def inner_product(gu: GradientField, gw: GradientField) -> float:
    """Integral of grad u . grad w over the mesh."""
    if not _same_mesh(gu.mesh, gw.mesh):
        raise MeshMismatch("gradient fields live on different meshes")
    return float(np.sum(gu.mesh.areas * (gu.values * gw.values).sum(axis=1)))


def bulk_energy(u: ScalarField) -> float:
    """Integral of |grad u|^2 over the mesh (shear modulus scaled to mu = 2)."""
    g = gradient(u)
    return float(np.sum(u.mesh.areas * (g.values**2).sum(axis=1)))


# ---------------------------------------------------------------------------
# assembly and solve
# ---------------------------------------------------------------------------


def stiffness_matrix(mesh: CrackMesh) -> csr_matrix:
    """Assemble the P1 stiffness matrix sum_T area * grad phi_i . grad phi_j."""
    t = mesh.triangles
    n = mesh.n_nodes
    a = mesh.areas
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(t[:, i])
            cols.append(t[:, j])
            vals.append(
                a * (mesh.grad_x[:, i] * mesh.grad_x[:, j]
                     + mesh.grad_y[:, i] * mesh.grad_y[:, j])
            )
    K = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return K.tocsr()


def _node_components(mesh: CrackMesh) -> np.ndarray:
    t = mesh.triangles
    n = mesh.n_nodes
    rows = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
    cols = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return labels


def solve(mesh: CrackMesh, g: BoundaryDatum) -> ScalarField:
    """Discrete minimizer of the Dirichlet energy with u = g on constrained nodes.

    Constrained nodes are the Dirichlet-tagged ones minus those released
    where the crack meets the Dirichlet boundary. Components whose
    boundary misses the constrained set get one node pinned to zero (the
    continuum solution there is an arbitrary constant).
    """
    n = mesh.n_nodes
    gvals = g.sample(mesh)
    constrained = np.zeros(n, dtype=bool)
    idx = np.fromiter(mesh.dirichlet_nodes, dtype=np.int64, count=len(mesh.dirichlet_nodes))
    if len(idx):
        constrained[idx] = True

    labels = _node_components(mesh)
    values = np.zeros(n)
    values[constrained] = gvals[constrained]
    for comp in np.unique(labels):
        members = labels == comp
        if not np.any(constrained & members):
            pin = int(np.flatnonzero(members).min())
            constrained[pin] = True
            values[pin] = 0.0

    K = stiffness_matrix(mesh)
    free = ~constrained
    nf = int(free.sum())
    if nf == 0:
        return ScalarField(mesh, values)
    Kff = K[free][:, free]
    rhs = -K[free][:, constrained] @ values[constrained]
    x0 = gvals[free]
    diag = np.asarray(Kff.diagonal())
    if np.any(diag <= 0):
        raise SolveFailure("singular stiffness diagonal (beyond pinning rule)")
    M = LinearOperator((nf, nf), matvec=lambda v: v / diag)
    x, info = cg(
        Kff, rhs, x0=x0, rtol=CG_RTOL, atol=0.0, maxiter=CG_MAXITER_FACTOR * nf, M=M
    )
    if info != 0:
        raise SolveFailure(f"conjugate gradient did not converge (info={info})")
    values[free] = x
    return ScalarField(mesh, values)


def residual_norm(u: ScalarField, g: BoundaryDatum) -> float:
    """Max |assembled residual| over free nodes (Galerkin orthogonality)."""
    mesh = u.mesh
    K = stiffness_matrix(mesh)
    r = K @ u.nodal_values
    constrained = np.zeros(mesh.n_nodes, dtype=bool)
    idx = np.fromiter(mesh.dirichlet_nodes, dtype=np.int64, count=len(mesh.dirichlet_nodes))
    if len(idx):
        constrained[idx] = True
    return float(np.max(np.abs(r[~constrained]))) if np.any(~constrained) else 0.0


# ---------------------------------------------------------------------------
# harmonic conjugate (verification operation)
# ---------------------------------------------------------------------------


def harmonic_conjugate(
    u: ScalarField, region: tuple[float, float, float, float]
) -> ScalarField:
    """Least-squares potential v with grad v ~ R grad u on a sub-rectangle.

    R is the 90-degree rotation (x, y) -> (-y, x). The conjugate is
    single-valued across the crack, so face duplicates are merged before
    the recovery; the result is zero-mean on the region and NaN outside.
    """
    mesh = u.mesh
    xmin, xmax, ymin, ymax = region
    cent = mesh.nodes[mesh.triangles].mean(axis=1)
    sel = (
        (cent[:, 0] >= xmin)
        & (cent[:, 0] <= xmax)
        & (cent[:, 1] >= ymin)
        & (cent[:, 1] <= ymax)
    )
    tri_idx = np.flatnonzero(sel)
    if len(tri_idx) == 0:
        raise RegionNotSimplyConnected("region contains no triangles")
    tris = mesh.triangles[tri_idx]

    # merge crack-face duplicates: v is continuous across traction-free cracks
    canon = np.arange(mesh.n_nodes)
    for fp in mesh.crack_face_pairs:
        canon[fp.minus_node] = fp.plus_node
    merged = canon[tris]
    used = np.unique(merged)
    local = -np.ones(mesh.n_nodes, dtype=np.int64)
    local[used] = np.arange(len(used))
    ltris = local[merged]

    # Euler check certifies the merged region is a disk
    edges = set()
    for a, b in ((0, 1), (1, 2), (2, 0)):
        for e in zip(ltris[:, a], ltris[:, b]):
            edges.add((min(e), max(e)))
    euler = len(used) - len(edges) + len(ltris)
    if euler != 1:
        raise RegionNotSimplyConnected(
            f"region Euler characteristic {euler} != 1 after face merge"
        )

    gu = gradient(u)
    rot = np.stack(
        [-gu.values[tri_idx, 1], gu.values[tri_idx, 0]], axis=1
    )  # R grad u
    areas = mesh.areas[tri_idx]
    gx = mesh.grad_x[tri_idx]
    gy = mesh.grad_y[tri_idx]

    nloc = len(used)
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(ltris[:, i])
            cols.append(ltris[:, j])
            vals.append(areas * (gx[:, i] * gx[:, j] + gy[:, i] * gy[:, j]))
    K = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nloc, nloc),
    ).tocsr()
    b = np.zeros(nloc)
    for i in range(3):
        np.add.at(
            b, ltris[:, i], areas * (gx[:, i] * rot[:, 0] + gy[:, i] * rot[:, 1])
        )

    # pin one node against the constant null space, then re-center
    fixed = 0
    free = np.ones(nloc, dtype=bool)
    free[fixed] = False
    Kff = K[free][:, free]
    rhs = b[free]
    diag = np.asarray(Kff.diagonal())
    M = LinearOperator((int(free.sum()),) * 2, matvec=lambda v: v / diag)
    x, info = cg(Kff, rhs, rtol=CG_RTOL, atol=0.0, maxiter=20 * nloc, M=M)
    if info != 0:
        raise SolveFailure("conjugate recovery CG did not converge")
    vloc = np.zeros(nloc)
    vloc[free] = x

    # area-weighted zero mean
    lumped = np.zeros(nloc)
    for i in range(3):
        np.add.at(lumped, ltris[:, i], areas / 3.0)
    vloc -= np.sum(lumped * vloc) / np.sum(lumped)

    vals_full = np.full(mesh.n_nodes, np.nan)
    has = local[canon] >= 0
    vals_full[has] = vloc[local[canon[has]]]
    return ScalarField(mesh, vals_full)


def tangential_jump_max(
    u: ScalarField, *, away_from=None, clearance: float = 0.0
) -> float:
    """Max jump of the tangential component of R grad u across interior edges.

    Crack-face and boundary edges are excluded. With `away_from` (a crack
    set) and `clearance`, edges whose midpoint lies within `clearance` of
    the crack are skipped too: near the tip singularity the per-edge jump
    grows under refinement even though the smooth-region jumps shrink.
    """
    mesh = u.mesh
    g = gradient(u)
    tgt = None
    if away_from is not None and clearance > 0.0:
        from .geometry import _TargetSet

        tgt = _TargetSet(away_from)
    edge_owner: dict[tuple[int, int], list[int]] = {}
    for ti, tri in enumerate(mesh.triangles):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            e = (min(tri[a], tri[b]), max(tri[a], tri[b]))
            edge_owner.setdefault(e, []).append(ti)
    worst = 0.0
    for (i, j), owners in edge_owner.items():
        if len(owners) != 2:
            continue
        if tgt is not None:
            mid = 0.5 * (mesh.nodes[i] + mesh.nodes[j])
            if tgt.dist(float(mid[0]), float(mid[1])) < clearance:
                continue
        t = mesh.nodes[j] - mesh.nodes[i]
        t = t / np.linalg.norm(t)
        rot = [np.array([-g.values[o, 1], g.values[o, 0]]) for o in owners]
        worst = max(worst, abs(float((rot[0] - rot[1]) @ t)))
    return worst


def interpolate_at(u: ScalarField, pts, locator: TriangleLocator | None = None):
    """P1 interpolation of u at arbitrary points inside the domain."""
    loc = locator or TriangleLocator(u.mesh)
    out = np.empty(len(pts))
    for k, p in enumerate(pts):
        ti, bary = loc.locate(p)
        out[k] = float(bary @ u.nodal_values[u.mesh.triangles[ti]])
    return out


def gradient_at(u: ScalarField, pts, locator: TriangleLocator | None = None):
    """Per-point gradient of u (constant on each containing triangle)."""
    g = gradient(u)
    loc = locator or TriangleLocator(u.mesh)
    out = np.empty((len(pts), 2))
    for k, p in enumerate(pts):
        ti, _ = loc.locate(p)
        out[k] = g.values[ti]
    return out
