"""Quality metrics for agglomerated meshes and the runtime benchmark.

Metrics: circle ratio (inscribed / enclosing sphere radius), uniformity
factor (element diameter over the largest element diameter), volume
difference against the equal-share target, heterogeneous-element
percentage, and the element-count reduction factor.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agglomerate import region_diameter
from .errors import ContractViolationError
from .mesh import tet_volumes

__all__ = [
    "min_enclosing_ball",
    "circle_ratio",
    "uniformity_factor",
    "volume_difference",
    "heterogeneous_elements",
    "reduction_xi",
    "QualityReport",
    "quality_report",
    "write_report_csv",
    "write_summary_json",
    "bench_runtime",
    "write_bench_csv",
]


# -- minimum enclosing ball --------------------------------------------------


def _ball_2(a, b):
    center = (a + b) / 2.0
    return center, float(np.linalg.norm(a - center))


def _ball_3(a, b, c):
    """Smallest ball with a, b, c on its boundary (circumcircle in 3D)."""
    ab, ac = b - a, c - a
    n = np.cross(ab, ac)
    denom = 2.0 * float(n @ n)
    if denom < 1e-30:
        return None
    center = a + ((ab @ ab) * np.cross(ac, n) + (ac @ ac) * np.cross(n, ab)) / denom
    return center, float(np.linalg.norm(a - center))


def _ball_4(a, b, c, d):
    """Circumsphere of four points; None when (nearly) coplanar."""
    m = np.vstack([b - a, c - a, d - a])
    rhs = 0.5 * np.array([m[0] @ m[0], m[1] @ m[1], m[2] @ m[2]])
    det = np.linalg.det(m)
    if abs(det) < 1e-14:
        return None
    center = a + np.linalg.solve(m, rhs)
    return center, float(np.linalg.norm(a - center))


def _contains(ball, p, slack=1e-10):
    center, radius = ball
    return float(np.linalg.norm(p - center)) <= radius * (1 + slack) + slack


def min_enclosing_ball(points, seed=0):
    """Exact minimum enclosing ball via seeded incremental Welzl moves."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    points = np.unique(points, axis=0)
    if len(points) == 0:
        raise ContractViolationError("minimum enclosing ball of no points")
    if len(points) == 1:
        return points[0].copy(), 0.0
    shuffled = points[np.random.default_rng(seed).permutation(len(points))]
    ball = _ball_2(shuffled[0], shuffled[1])
    for i in range(2, len(shuffled)):
        if not _contains(ball, shuffled[i]):
            ball = _ball_with_1(shuffled[:i], shuffled[i])
    return ball


def _ball_with_1(points, q):
    ball = _ball_2(points[0], q)
    for j in range(1, len(points)):
        if not _contains(ball, points[j]):
            ball = _ball_with_2(points[:j], q, points[j])
    return ball


def _ball_with_2(points, q, r):
    ball = _ball_2(q, r)
    for k in range(len(points)):
        if not _contains(ball, points[k]):
            ball = _ball_with_3(points[:k], q, r, points[k])
    return ball


def _ball_with_3(points, q, r, s):
    ball = _ball_3(q, r, s)
    if ball is None:  # collinear boundary triple: widest pair wins
        ball = max(
            (_ball_2(q, r), _ball_2(q, s), _ball_2(r, s)), key=lambda b: b[1]
        )
    for l in range(len(points)):
        if not _contains(ball, points[l]):
            candidate = _ball_4(q, r, s, points[l])
            if candidate is not None:
                ball = candidate
    return ball


# -- inscribed-sphere approximation ------------------------------------------


def _boundary_faces(mesh, tet_indices):
    """Faces belonging to exactly one tet of the element."""
    count = {}
    for t in tet_indices:
        a, b, c, d = sorted(int(v) for v in mesh.tets[t])
        for face in ((a, b, c), (a, b, d), (a, c, d), (b, c, d)):
            count[face] = count.get(face, 0) + 1
    return [face for face, k in count.items() if k == 1]


def _point_triangle_distance(p, a, b, c):
    """Euclidean distance from point p to triangle abc."""
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return float(np.linalg.norm(ap))
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return float(np.linalg.norm(bp))
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        v = d1 / (d1 - d3)
        return float(np.linalg.norm(ap - v * ab))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return float(np.linalg.norm(cp))
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        w = d2 / (d2 - d6)
        return float(np.linalg.norm(ap - w * ac))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(p - (b + w * (c - b))))
    denom = va + vb + vc
    v = vb / denom
    w = vc / denom
    return float(np.linalg.norm(p - (a + v * ab + w * ac)))


def _tet_incenter(points):
    """Incenter of a tet: face-area-weighted vertex average."""
    a, b, c, d = points
    areas = np.array(
        [
            np.linalg.norm(np.cross(c - b, d - b)) / 2,  # opposite a
            np.linalg.norm(np.cross(c - a, d - a)) / 2,  # opposite b
            np.linalg.norm(np.cross(b - a, d - a)) / 2,  # opposite c
            np.linalg.norm(np.cross(b - a, c - a)) / 2,  # opposite d
        ]
    )
    total = areas.sum()
    return (points * (areas / total)[:, None]).sum(axis=0)


def _point_in_tet(p, points, tol=1e-12):
    a = points[0]
    m = (points[1:] - a).T
    try:
        bary = np.linalg.solve(m, p - a)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(bary >= -tol) and bary.sum() <= 1 + tol)


def circle_ratio(tet_indices, mesh, seed=0):
    """Ratio of the (approximate) inscribed to the enclosing sphere radius.

    The inscribed radius is the best distance-to-boundary among candidate
    centers (tet incenters, tet centroids, element vertex average) lying
    inside the element; it is a lower bound on the true inscribed radius.
    Returns (cr, degenerate_flag).
    """
    tet_indices = np.asarray(tet_indices)
    vertex_ids = np.unique(mesh.tets[tet_indices])
    vertices = mesh.vertices[vertex_ids]
    _, radius_out = min_enclosing_ball(vertices, seed=seed)
    if radius_out <= 0:
        return 0.0, True
    faces = _boundary_faces(mesh, tet_indices)
    triangles = [
        (mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]) for f in faces
    ]
    tet_points = [mesh.vertices[mesh.tets[t]] for t in tet_indices]
    candidates = [_tet_incenter(pts) for pts in tet_points]
    candidates += [pts.mean(axis=0) for pts in tet_points]
    candidates.append(vertices.mean(axis=0))
    radius_in = 0.0
    for candidate in candidates:
        if not any(_point_in_tet(candidate, pts) for pts in tet_points):
            continue
        dist = min(_point_triangle_distance(candidate, *tri) for tri in triangles)
        radius_in = max(radius_in, dist)
    if radius_in == 0.0:
        return 0.0, True
    return min(radius_in / radius_out, 1.0), False


# -- scalar metrics ----------------------------------------------------------


def uniformity_factor(diameters):
    """Per-element diameter over the largest element diameter."""
    diameters = np.asarray(diameters, dtype=np.float64)
    h = diameters.max()
    if h <= 0:
        raise ContractViolationError("mesh-level diameter must be positive")
    return diameters / h


def volume_difference(volumes):
    """Per-element |V - V_target| / V_target with V_target the equal share."""
    volumes = np.asarray(volumes, dtype=np.float64)
    target = volumes.sum() / len(volumes)
    return np.abs(volumes - target) / target


def heterogeneous_elements(agg):
    """Percentage of elements whose tets span >= 2 distinct rho values."""
    rho = agg.source.rho_of_tet()
    mixed = sum(1 for tets in agg.elements if len(np.unique(rho[tets])) >= 2)
    return 100.0 * mixed / agg.n_elements


def reduction_xi(n_tets, n_agg):
    """Percentage reduction of the element count."""
    if n_agg > n_tets or n_agg < 1:
        raise ContractViolationError("need 1 <= n_agg <= n_tets")
    return 100.0 * (n_tets - n_agg) / n_tets


# -- per-mesh report ---------------------------------------------------------


@dataclass
class QualityReport:
    n_tets: int
    n_elements: int
    element_tet_counts: np.ndarray
    volumes: np.ndarray
    diameters: np.ndarray
    cr: np.ndarray
    cr_degenerate: np.ndarray
    uf: np.ndarray
    vd: np.ndarray
    mixed: np.ndarray
    he_percent: float | None
    xi_percent: float


def quality_report(agg, seed=0, with_vd=True):
    """Compute all per-element metrics plus HE and the reduction factor.

    HE is reported only when the mesh carries explicit physical
    parameters; VD can be suppressed for non-uniform target meshes.
    """
    mesh = agg.source
    volumes_tet = tet_volumes(mesh)
    volumes = np.array([volumes_tet[tets].sum() for tets in agg.elements])
    diameters = np.array(
        [
            region_diameter(mesh.vertices[np.unique(mesh.tets[tets])])
            for tets in agg.elements
        ]
    )
    cr_pairs = [circle_ratio(tets, mesh, seed=seed) for tets in agg.elements]
    cr = np.array([p[0] for p in cr_pairs])
    degenerate = np.array([p[1] for p in cr_pairs])
    rho = mesh.rho_of_tet()
    mixed = np.array(
        [len(np.unique(rho[tets])) >= 2 for tets in agg.elements], dtype=bool
    )
    he = heterogeneous_elements(agg) if mesh.params_explicit else None
    return QualityReport(
        n_tets=mesh.n_tets,
        n_elements=agg.n_elements,
        element_tet_counts=np.array([len(t) for t in agg.elements]),
        volumes=volumes,
        diameters=diameters,
        cr=cr,
        cr_degenerate=degenerate,
        uf=uniformity_factor(diameters),
        vd=volume_difference(volumes) if with_vd else np.full(agg.n_elements, np.nan),
        mixed=mixed,
        he_percent=he,
        xi_percent=reduction_xi(mesh.n_tets, agg.n_elements),
    )


def write_report_csv(report, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["element_id", "n_tets", "volume", "diameter", "CR", "UF", "VD", "mixed_flag"]
        )
        for e in range(report.n_elements):
            writer.writerow(
                [
                    e,
                    report.element_tet_counts[e],
                    f"{report.volumes[e]:.17g}",
                    f"{report.diameters[e]:.17g}",
                    f"{report.cr[e]:.17g}",
                    f"{report.uf[e]:.17g}",
                    f"{report.vd[e]:.17g}",
                    int(report.mixed[e]),
                ]
            )


_QUANTILES = (5, 25, 50, 75, 95)


def _stats(values):
    values = np.asarray(values, dtype=np.float64)
    if np.isnan(values).all():
        return None
    return {
        "mean": float(np.nanmean(values)),
        "quantiles": {
            str(q): float(np.nanpercentile(values, q)) for q in _QUANTILES
        },
    }


def write_summary_json(report, path):
    payload = {
        "n_tets": report.n_tets,
        "n_agg": report.n_elements,
        "xi_percent": report.xi_percent,
        "he_percent": report.he_percent,
        "cr": _stats(report.cr),
        "uf": _stats(report.uf),
        "vd": _stats(report.vd),
    }
    Path(path).write_text(json.dumps(payload, indent=2))


# -- runtime benchmark -------------------------------------------------------


def bench_runtime(models, instances, repetitions=3):
    """Time one bisection call per (model, instance), median of repetitions.

    `models` maps name -> BisectionModel; `instances` is a list of
    (name, graph, features) with graph and features already built so only
    the bisection itself is timed. Failures become rows with an error note.
    """
    rows = []
    for model_name, model in models.items():
        for instance_name, graph, features in instances:
            times = []
            error = ""
            for rep in range(repetitions):
                try:
                    start = time.perf_counter()
                    model.bisect(graph, features, seed=rep)
                    times.append(time.perf_counter() - start)
                except Exception as exc:  # keep the run going
                    error = f"{type(exc).__name__}: {exc}"
                    break
            rows.append(
                {
                    "model": model_name,
                    "instance": instance_name,
                    "n_nodes": graph.n,
                    "median_seconds": float(np.median(times)) if times else float("nan"),
                    "error": error,
                }
            )
    return rows


def write_bench_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["model", "instance", "n_nodes", "median_seconds", "error"]
        )
        writer.writeheader()
        writer.writerows(rows)
