"""Independent brute-force oracles used by the tests.

These deliberately avoid the code paths they check: Hausdorff distances
come from dense point sampling with a KD-tree, not from the
branch-and-bound implementation.
"""

import math

import numpy as np
from scipy.spatial import cKDTree


def sample_crack_points(crack, resolution: float) -> np.ndarray:
    pts = [np.array(p, float) for p in crack.isolated_points()]
    for a, b in crack.segments():
        a = np.array(a, float)
        b = np.array(b, float)
        n = max(1, int(math.ceil(np.linalg.norm(b - a) / resolution)))
        ts = np.linspace(0.0, 1.0, n + 1)
        pts.extend(a + t * (b - a) for t in ts)
    return np.array(pts)


def hausdorff_bruteforce(k1, k2, resolution: float = 1e-4) -> float:
    p1 = sample_crack_points(k1, resolution)
    p2 = sample_crack_points(k2, resolution)
    d12 = cKDTree(p2).query(p1)[0].max()
    d21 = cKDTree(p1).query(p2)[0].max()
    return float(max(d12, d21))


def random_crackset(rng, *, max_components: int = 3, max_vertices: int = 5):
    """Random disjoint-ish polyline union inside [0, 2]^2."""
    from quasicrack.geometry import CrackSet, Polyline

    for _ in range(200):
        n_comp = int(rng.integers(1, max_components + 1))
        comps = []
        try:
            for _ in range(n_comp):
                n_v = int(rng.integers(1, max_vertices + 1))
                if n_v == 1:
                    comps.append(
                        Polyline(((float(rng.uniform(0, 2)), float(rng.uniform(0, 2))),))
                    )
                    continue
                # random walk with bounded turn keeps the arc simple
                x, y = rng.uniform(0.2, 1.8, size=2)
                ang = rng.uniform(0, 2 * math.pi)
                verts = [(float(x), float(y))]
                for _ in range(n_v - 1):
                    ang += rng.uniform(-0.8, 0.8)
                    step = rng.uniform(0.05, 0.4)
                    x += step * math.cos(ang)
                    y += step * math.sin(ang)
                    verts.append((float(x), float(y)))
                comps.append(Polyline(tuple(verts)))
            return CrackSet(tuple(comps), m=n_comp)
        except Exception:
            continue
    raise RuntimeError("could not generate a random crack set")
