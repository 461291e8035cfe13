"""Stress intensity factors at crack tips and the Griffith-criterion audit.

Two independent estimators: an annulus least-squares fit of the nodal
field against the singular shape sqrt(2 rho / pi) sin(theta / 2), and a
finite difference of the total energy under a straight tip extension.
The release rate of the singular field is 1 - kappa^2 per unit length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import DomainSpec
from .geometry import CrackSet, Tip, extend_tip
from .solver import BoundaryDatum, ScalarField

#: tip neighborhood must be straight within this angle for the fit window
KINK_TOLERANCE_RAD = math.radians(10.0)
#: minimum number of annulus nodes for a trustworthy fit
MIN_FIT_NODES = 8


class AnnulusUnresolved(Exception):
    """Fit annulus is not resolved by the mesh."""


class TipGeometryInvalid(Exception):
    """Tip neighborhood violates the straightness/clearance assumptions."""


@dataclass(frozen=True)
class SifEstimate:
    """Least-squares mode-III stress intensity factor at one tip."""

    tip: Tip
    kappa: float
    fit_window: tuple[float, float]
    fit_residual: float

    def __post_init__(self):
        object.__setattr__(self, "release_rate", 1.0 - self.kappa**2)

    release_rate: float = 0.0


def _chain_for_tip(mesh, tip: Tip):
    for ch in mesh.crack_chains:
        if ch.component_id == tip.component_id:
            return ch
    raise TipGeometryInvalid("tip component has no mesh chain")


def _straight_run_length(mesh, tip: Tip) -> float:
    """Arclength from the tip along the crack while direction stays straight."""
    ch = _chain_for_tip(mesh, tip)
    ids = list(ch.node_ids)
    order = ids if tip.end == "start" else ids[::-1]
    pts = [mesh.nodes[i] for i in order]
    tx, ty = tip.tangent
    run = 0.0
    for a, b in zip(pts, pts[1:]):
        dx, dy = a[0] - b[0], a[1] - b[1]  # direction pointing toward the tip
        seg = math.hypot(dx, dy)
        if seg == 0.0:
            continue
        cosang = (dx * tx + dy * ty) / seg
        if cosang < math.cos(KINK_TOLERANCE_RAD):
            break
        run += seg
    return run


def fit_sif(u: ScalarField, tip: Tip, r1: float, r2: float) -> SifEstimate:
    """Annulus least-squares fit of u against the singular tip field.

    The angle theta is measured from the outward tip tangent and the
    crack-face duplicates are assigned theta = +-pi by their side. The
    even-in-theta remainder is absorbed by fitting an intercept along
    with kappa.
    """
    mesh = u.mesh
    if r1 >= r2:
        raise AnnulusUnresolved("need r1 < r2")
    if r1 < 2.0 * mesh.h_tip * (1.0 - 1e-9):
        raise AnnulusUnresolved(f"r1={r1} under-resolved (h_tip={mesh.h_tip})")

    run = _straight_run_length(mesh, tip)
    r2_eff = min(r2, run)
    if r2_eff <= r1 * (1.0 + 1e-9):
        raise TipGeometryInvalid(
            f"straight tip run {run:.4g} too short for window ({r1:.4g}, {r2:.4g})"
        )

    px, py = tip.position
    tx, ty = tip.tangent
    w = u.mesh.nodes - np.array([px, py])
    rho = np.hypot(w[:, 0], w[:, 1])
    in_ann = (rho >= r1) & (rho <= r2_eff)

    # face copies on this component override the atan2 branch
    ch = _chain_for_tip(mesh, tip)
    side_sign = 1.0 if tip.end == "finish" else -1.0
    theta = np.arctan2(
        tx * w[:, 1] - ty * w[:, 0],  # cross(t, w)
        tx * w[:, 0] + ty * w[:, 1],  # dot(t, w)
    )
    for plus, minus in zip(ch.node_ids, ch.minus_ids):
        if plus != minus:
            theta[plus] = side_sign * math.pi
            theta[minus] = -side_sign * math.pi

    # exclude nodes of other crack components (their theta is meaningless)
    other = set()
    for c in mesh.crack_chains:
        if c.component_id != tip.component_id:
            other.update(c.node_ids)
            other.update(c.minus_ids)
    if other:
        mask = np.ones(mesh.n_nodes, dtype=bool)
        mask[list(other)] = False
        in_ann &= mask

    idx = np.flatnonzero(in_ann)
    if len(idx) < MIN_FIT_NODES:
        raise AnnulusUnresolved(f"only {len(idx)} nodes in the fit annulus")

    phi = np.sqrt(2.0 * rho[idx] / math.pi) * np.sin(theta[idx] / 2.0)
    uu = u.nodal_values[idx]
    n = float(len(idx))
    sp, spp = float(phi.sum()), float((phi * phi).sum())
    su, spu = float(uu.sum()), float((phi * uu).sum())
    det = spp * n - sp * sp
    if abs(det) < 1e-300:
        raise AnnulusUnresolved("degenerate fit system")
    kappa = (spu * n - sp * su) / det
    const = (spp * su - sp * spu) / det
    resid = uu - kappa * phi - const
    denom = float(np.linalg.norm(uu - uu.mean()))
    rel = float(np.linalg.norm(resid)) / max(denom, 1e-300)
    return SifEstimate(
        tip=tip, kappa=float(kappa), fit_window=(r1, r2_eff), fit_residual=rel
    )


def default_fit_window(mesh_h_tip: float) -> tuple[float, float]:
    return (4.0 * mesh_h_tip, 16.0 * mesh_h_tip)


def safe_fit_window(
    domain: DomainSpec, crack: CrackSet, tip: Tip, h_tip: float
) -> tuple[float, float]:
    """Default window shrunk clear of the boundary and other crack parts."""
    r1, r2 = default_fit_window(h_tip)
    clearance = domain.signed_distance_to_boundary(tip.position)
    for ci, comp in enumerate(crack.components):
        if ci == tip.component_id:
            continue
        for a, b in comp.segments():
            dx, dy = b[0] - a[0], b[1] - a[1]
            dd = dx * dx + dy * dy
            t = max(
                0.0,
                min(
                    1.0,
                    ((tip.position[0] - a[0]) * dx + (tip.position[1] - a[1]) * dy)
                    / max(dd, 1e-300),
                ),
            )
            clearance = min(
                clearance,
                math.hypot(a[0] + t * dx - tip.position[0], a[1] + t * dy - tip.position[1]),
            )
        if comp.is_point:
            clearance = min(
                clearance,
                math.hypot(
                    comp.vertices[0][0] - tip.position[0],
                    comp.vertices[0][1] - tip.position[1],
                ),
            )
    return r1, min(r2, 0.95 * clearance)


# ---------------------------------------------------------------------------
# energy-release finite difference
# ---------------------------------------------------------------------------


def release_rate_fd(
    domain: DomainSpec,
    crack: CrackSet,
    g: BoundaryDatum,
    tip: Tip,
    dsigma: float,
    h_max: float,
    h_tip: float,
) -> float:
    """[E(K extended straight by dsigma) - E(K)] / dsigma.

    Surface contributes +1 per unit length exactly; the bulk term tends
    to -kappa^2 as dsigma -> 0.
    """
    from .energy import energy_value

    extended = extend_tip(crack, tip, 0.0, dsigma, domain=domain)
    e0 = energy_value(domain, crack, g, h_max, h_tip)
    e1 = energy_value(domain, extended, g, h_max, h_tip)
    return (e1.total - e0.total) / dsigma


def release_rate_richardson(
    domain: DomainSpec,
    crack: CrackSet,
    g: BoundaryDatum,
    tip: Tip,
    h_max: float,
    h_tip: float,
    factors: tuple[float, float] = (4.0, 8.0),
) -> float:
    """Richardson extrapolation of the forward difference over two steps."""
    d1 = release_rate_fd(domain, crack, g, tip, factors[0] * h_tip, h_max, h_tip)
    d2 = release_rate_fd(domain, crack, g, tip, factors[1] * h_tip, h_max, h_tip)
    w = factors[1] / factors[0]
    return (w * d1 - d2) / (w - 1.0)


# ---------------------------------------------------------------------------
# Griffith audit over an evolution
# ---------------------------------------------------------------------------


def griffith_audit(
    state,
    *,
    tol_kappa: float = 0.1,
    tol_growth: float = 0.15,
) -> dict:
    """Per-step, per-tip complementarity report for a completed evolution.

    Checks: cumulative sigma is nondecreasing (exact); kappa^2 <= 1 +
    tol_kappa on no-growth steps; |1 - kappa^2| <= tol_growth on growth
    steps. Steps where the winning candidate kinked are reported
    separately, not counted as violations.
    """
    rows = []
    violations = []
    kink_steps = sorted(state.kink_steps)
    for i, t in enumerate(state.grid.times()):
        for key, sigma in state.sigma_history[i].items():
            kappa = state.sif_history[i].get(key)
            dsig = sigma - (state.sigma_history[i - 1][key] if i > 0 else state.sigma0[key])
            grew = dsig > 0.0
            row = {
                "step": i,
                "t": t,
                "tip": f"{key[0]}:{key[1]}",
                "sigma": sigma,
                "dsigma": dsig,
                "kappa": kappa,
                "grew": grew,
            }
            if dsig < 0.0:
                violations.append({**row, "kind": "sigma_decreasing"})
            if kappa is not None:
                k2 = kappa * kappa
                if i in kink_steps:
                    row["near_kink"] = True
                elif grew and abs(1.0 - k2) > tol_growth:
                    violations.append({**row, "kind": "growth_off_critical"})
                elif not grew and k2 > 1.0 + tol_kappa:
                    violations.append({**row, "kind": "rest_above_critical"})
            rows.append(row)
    return {
        "rows": rows,
        "violations": violations,
        "kink_steps": kink_steps,
        "tol_kappa": tol_kappa,
        "tol_growth": tol_growth,
        "pass": not violations,
    }


def sif_history_csv(state) -> str:
    """CSV export: step, t, tip_id, sigma, kappa, release_rate, fit_residual."""
    lines = ["step,t,tip_id,sigma,kappa,release_rate,fit_residual"]
    for i, t in enumerate(state.grid.times()):
        for key, sigma in state.sigma_history[i].items():
            kappa = state.sif_history[i].get(key)
            resid = state.sif_residuals[i].get(key)
            if kappa is None:
                lines.append(f"{i},{t!r},{key[0]}:{key[1]},{sigma!r},,,")
            else:
                lines.append(
                    f"{i},{t!r},{key[0]}:{key[1]},{sigma!r},{kappa!r},{1.0 - kappa * kappa!r},{resid!r}"
                )
    return "\n".join(lines) + "\n"
