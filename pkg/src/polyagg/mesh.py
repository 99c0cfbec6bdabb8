"""Tetrahedral mesh loading, validation, geometry and output formats.

Supported input is GMSH MSH 2.2 ASCII with an optional sidecar
``<stem>.params.json`` mapping region labels to the physical parameter rho.
Output formats are MSH 2.2 and VTK legacy ASCII unstructured grids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    ContractViolationError,
    MeshFormatError,
    UnsupportedFormatError,
    ValidationError,
)

__all__ = [
    "TetMesh",
    "Agglomeration",
    "read_msh",
    "write_msh",
    "write_vtk",
    "tet_geometry",
    "tet_volumes",
    "tet_centroids",
    "submesh",
    "SubmeshMaps",
]

# Relative volume below which a tet counts as degenerate.
_ZERO_VOLUME_REL = 1e-14


def _signed_volumes(vertices, tets):
    a = vertices[tets[:, 0]]
    edges = vertices[tets[:, 1:]] - a[:, None, :]
    return np.linalg.det(edges) / 6.0


@dataclass(frozen=True)
class TetMesh:
    """Immutable tetrahedral mesh with per-tet region labels.

    Tets are reoriented to positive signed volume at construction; a tet
    whose volume is below 1e-14 of the bounding-box volume is rejected.
    """

    vertices: np.ndarray          # (nv, 3) float64
    tets: np.ndarray              # (nt, 4) int64
    region_of_tet: np.ndarray     # (nt,) int64
    param_of_region: dict = field(default_factory=dict)
    params_explicit: bool = False

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        tets = np.ascontiguousarray(self.tets, dtype=np.int64)
        regions = np.ascontiguousarray(self.region_of_tet, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ValidationError("vertices must be an (n, 3) array")
        if tets.ndim != 2 or tets.shape[1] != 4:
            raise ValidationError("tets must be an (n, 4) array")
        if len(regions) != len(tets):
            raise ValidationError("region_of_tet length must match tets")
        if len(tets) and (tets.min() < 0 or tets.max() >= len(vertices)):
            raise ValidationError("tet references a missing vertex")
        if len(tets):
            sorted_tets = np.sort(tets, axis=1)
            if np.any(sorted_tets[:, :-1] == sorted_tets[:, 1:]):
                raise ValidationError("tet has repeated vertex indices")
            vols = _signed_volumes(vertices, tets)
            flip = vols < 0
            if flip.any():
                tets = tets.copy()
                tets[flip, 2], tets[flip, 3] = tets[flip, 3], tets[flip, 2].copy()
                vols = np.abs(vols)
            bbox = vertices.max(axis=0) - vertices.min(axis=0)
            bbox_volume = float(np.prod(bbox))
            if bbox_volume <= 0.0 or np.any(vols < _ZERO_VOLUME_REL * bbox_volume):
                raise ValidationError("mesh contains a (near) zero-volume tet")
        param = dict(self.param_of_region)
        for label in np.unique(regions):
            param.setdefault(int(label), 0.0)
        for label, rho in param.items():
            if rho < 0:
                raise ValidationError(f"rho for region {label} must be >= 0")
        for name, value in (
            ("vertices", vertices),
            ("tets", tets),
            ("region_of_tet", regions),
            ("param_of_region", param),
        ):
            object.__setattr__(self, name, value)
        vertices.setflags(write=False)
        tets.setflags(write=False)
        regions.setflags(write=False)

    @property
    def n_tets(self):
        return len(self.tets)

    @property
    def n_vertices(self):
        return len(self.vertices)

    def rho_of_tet(self):
        """Physical parameter of each tet, via its region label."""
        return np.array(
            [self.param_of_region[int(r)] for r in self.region_of_tet], dtype=np.float64
        )


@dataclass(frozen=True)
class Agglomeration:
    """Partition of a mesh's tets into coarse polyhedral elements."""

    assignment: np.ndarray        # (n_tets,) element id per tet
    elements: list                # element id -> array of tet indices
    source: TetMesh

    @classmethod
    def from_assignment(cls, mesh, assignment):
        """Build from a raw tet -> element map, compacting element ids."""
        assignment = np.asarray(assignment, dtype=np.int64)
        if len(assignment) != mesh.n_tets:
            raise ValidationError("assignment must cover every tet")
        if assignment.min() < 0:
            raise ValidationError("assignment contains unassigned tets")
        ids, compact = np.unique(assignment, return_inverse=True)
        elements = [np.flatnonzero(compact == e) for e in range(len(ids))]
        compact = compact.astype(np.int64)
        compact.setflags(write=False)
        return cls(assignment=compact, elements=elements, source=mesh)

    @property
    def n_elements(self):
        return len(self.elements)

    def to_json(self, path, mesh_name=""):
        payload = {
            "mesh": mesh_name,
            "n_elements": self.n_elements,
            "assignment": self.assignment.tolist(),
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def from_json(cls, path, mesh):
        payload = json.loads(Path(path).read_text())
        return cls.from_assignment(mesh, np.asarray(payload["assignment"]))


# -- geometry ---------------------------------------------------------------


def tet_volumes(mesh):
    """Volume of every tet (positive by mesh invariant)."""
    return np.abs(_signed_volumes(mesh.vertices, mesh.tets))


def tet_centroids(mesh):
    """Vertex-average centroid of every tet."""
    return mesh.vertices[mesh.tets].mean(axis=1)


def tet_geometry(mesh, tet_index):
    """Return (volume, centroid) of one tet."""
    tet = mesh.tets[tet_index]
    points = mesh.vertices[tet]
    volume = abs(np.linalg.det(points[1:] - points[0]) / 6.0)
    return float(volume), points.mean(axis=0)


@dataclass(frozen=True)
class SubmeshMaps:
    tet_to_parent: np.ndarray     # sub tet index -> parent tet index
    vertex_to_parent: np.ndarray  # sub vertex index -> parent vertex index


def submesh(mesh, tet_indices):
    """Extract the mesh induced by a tet index set, dropping unused vertices."""
    tet_indices = np.asarray(sorted(set(int(i) for i in np.asarray(tet_indices).ravel())))
    if len(tet_indices) == 0:
        raise ContractViolationError("submesh requires a non-empty tet subset")
    if tet_indices.min() < 0 or tet_indices.max() >= mesh.n_tets:
        raise ContractViolationError("tet index out of range")
    tets = mesh.tets[tet_indices]
    used = np.unique(tets)
    remap = np.full(mesh.n_vertices, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    sub = TetMesh(
        vertices=mesh.vertices[used],
        tets=remap[tets],
        region_of_tet=mesh.region_of_tet[tet_indices],
        param_of_region=dict(mesh.param_of_region),
        params_explicit=mesh.params_explicit,
    )
    return sub, SubmeshMaps(tet_to_parent=tet_indices, vertex_to_parent=used)


# -- GMSH MSH 2.2 -----------------------------------------------------------


def _sidecar_path(path):
    return Path(path).with_suffix(".params.json")


def read_msh(path):
    """Parse a GMSH MSH 2.2 ASCII file into a TetMesh.

    Only elements of type 4 (linear tets) are kept; the element's physical
    tag becomes its region label. A sidecar ``<stem>.params.json`` supplies
    rho per region; without it every region gets rho = 0.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise MeshFormatError(f"cannot read {path}: {exc}")
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise MeshFormatError("unexpected end of file", line=len(lines))
        pos += 1
        return lines[pos - 1].strip(), pos

    header, lineno = next_line()
    if header != "$MeshFormat":
        raise MeshFormatError("expected $MeshFormat", line=lineno)
    version_line, lineno = next_line()
    version = version_line.split()[0]
    if not version.startswith("2.2"):
        raise UnsupportedFormatError(
            f"unsupported MSH version {version!r}: only 2.2 ASCII is readable"
        )
    end, lineno = next_line()
    if end != "$EndMeshFormat":
        raise MeshFormatError("expected $EndMeshFormat", line=lineno)

    vertices = None
    node_ids = None
    tets = []
    regions = []
    while pos < len(lines):
        stripped = lines[pos].strip()
        pos += 1
        if not stripped:
            continue
        if stripped == "$Nodes":
            count_line, lineno = next_line()
            try:
                count = int(count_line)
            except ValueError:
                raise MeshFormatError("malformed node count", line=lineno) from None
            vertices = np.empty((count, 3))
            node_ids = {}
            for k in range(count):
                row, lineno = next_line()
                parts = row.split()
                if parts[0] == "$EndNodes" or len(parts) != 4:
                    raise MeshFormatError(
                        "node count disagrees with listed rows", line=lineno
                    )
                node_ids[int(parts[0])] = k
                vertices[k] = [float(v) for v in parts[1:]]
            end, lineno = next_line()
            if end != "$EndNodes":
                raise MeshFormatError("expected $EndNodes", line=lineno)
        elif stripped == "$Elements":
            if node_ids is None:
                raise MeshFormatError("$Elements before $Nodes", line=pos)
            count_line, lineno = next_line()
            try:
                count = int(count_line)
            except ValueError:
                raise MeshFormatError("malformed element count", line=lineno) from None
            for _ in range(count):
                row, lineno = next_line()
                parts = row.split()
                if parts[0].startswith("$") or len(parts) < 3:
                    raise MeshFormatError(
                        "element count disagrees with listed rows", line=lineno
                    )
                etype = int(parts[1])
                n_tags = int(parts[2])
                tags = parts[3 : 3 + n_tags]
                nodes = parts[3 + n_tags :]
                if etype != 4:
                    continue
                if len(nodes) != 4:
                    raise MeshFormatError("tet element needs 4 nodes", line=lineno)
                try:
                    tets.append([node_ids[int(n)] for n in nodes])
                except KeyError:
                    raise ValidationError(
                        f"line {lineno}: tet references a missing node"
                    ) from None
                regions.append(int(tags[0]) if tags else 0)
            end, lineno = next_line()
            if end != "$EndElements":
                raise MeshFormatError("expected $EndElements", line=lineno)
        # other sections ($PhysicalNames etc.) are skipped silently

    if vertices is None:
        raise MeshFormatError("file has no $Nodes section")

    params = {}
    explicit = False
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        explicit = True
        payload = json.loads(sidecar.read_text())
        params = {int(k): float(v) for k, v in payload.get("regions", {}).items()}
        for label in set(regions):
            if label not in params:
                raise ConfigurationError(f"region {label} has no rho entry in {sidecar}")
    return TetMesh(
        vertices=vertices,
        tets=np.asarray(tets, dtype=np.int64).reshape(-1, 4),
        region_of_tet=np.asarray(regions, dtype=np.int64),
        param_of_region=params,
        params_explicit=explicit,
    )


def write_msh(mesh, path):
    """Write MSH 2.2 ASCII (coordinates at 17 significant digits)."""
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(mesh.n_vertices)]
    for i, (x, y, z) in enumerate(mesh.vertices, start=1):
        out.append(f"{i} {x:.17g} {y:.17g} {z:.17g}")
    out += ["$EndNodes", "$Elements", str(mesh.n_tets)]
    for i, (tet, region) in enumerate(zip(mesh.tets, mesh.region_of_tet), start=1):
        nodes = " ".join(str(v + 1) for v in tet)
        out.append(f"{i} 4 2 {region} {region} {nodes}")
    out.append("$EndElements")
    Path(path).write_text("\n".join(out) + "\n")


def write_params_sidecar(mesh, path):
    """Write the rho sidecar next to a mesh file path."""
    payload = {"regions": {str(k): v for k, v in sorted(mesh.param_of_region.items())}}
    _sidecar_path(path).write_text(json.dumps(payload))


# -- VTK legacy output ------------------------------------------------------


def write_vtk(mesh, agg, path):
    """Write a VTK legacy ASCII unstructured grid with per-tet cell data."""
    if agg is not None and agg.source is not mesh:
        raise ContractViolationError("agglomeration does not belong to this mesh")
    rho = mesh.rho_of_tet()
    out = [
        "# vtk DataFile Version 3.0",
        "polyagg agglomeration",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    for x, y, z in mesh.vertices:
        out.append(f"{x:.17g} {y:.17g} {z:.17g}")
    out.append(f"CELLS {mesh.n_tets} {mesh.n_tets * 5}")
    for tet in mesh.tets:
        out.append("4 " + " ".join(str(v) for v in tet))
    out.append(f"CELL_TYPES {mesh.n_tets}")
    out.extend(["10"] * mesh.n_tets)
    out.append(f"CELL_DATA {mesh.n_tets}")
    if agg is not None:
        out.append("SCALARS element_id int 1")
        out.append("LOOKUP_TABLE default")
        out.extend(str(int(e)) for e in agg.assignment)
    out.append("SCALARS rho double 1")
    out.append("LOOKUP_TABLE default")
    out.extend(f"{v:.17g}" for v in rho)
    Path(path).write_text("\n".join(out) + "\n")
