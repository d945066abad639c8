"""
Shape - Formas rígidas (policubos y mallas triangulares)
Construcción de la superficie, facetas planas agrupadas y propiedades de masa.
"""

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np
import trimesh
from scipy import ndimage
from shapely.geometry import MultiPolygon, Polygon
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

from errors import Disconnected, EmptyShape, InvalidMesh
from geometry.convex import ConvexPiece, box_piece, hull_piece, polytope_piece

Cell = Tuple[int, int, int]

# Redondeo usado para agrupar triángulos coplanares
NORMAL_DECIMALS = 6
OFFSET_DECIMALS = 7


# ========== Facetas ==========


@dataclass(frozen=True, eq=False)
class Facet:
    """
    Región plana maximal de la superficie.

    El polígono vive en coordenadas (u, v) del plano: un punto 2-D (x, y)
    corresponde a origin + x·axes[0] + y·axes[1].
    """

    normal: np.ndarray
    offset: float
    origin: np.ndarray
    axes: np.ndarray
    polygon: Polygon

    @property
    def area(self) -> float:
        return self.polygon.area

    def to_world(self, uv) -> np.ndarray:
        uv = np.asarray(uv, dtype=float).reshape(-1, 2)
        return self.origin + uv @ self.axes

    def to_plane(self, xyz) -> np.ndarray:
        xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
        return (xyz - self.origin) @ self.axes.T

    def transformed(self, pose) -> "Facet":
        normal = pose.apply_vector(self.normal)
        origin = pose.apply(self.origin)
        return Facet(
            normal=normal,
            offset=float(normal @ origin),
            origin=origin,
            axes=pose.apply_vector(self.axes),
            polygon=self.polygon,
        )


def plane_axes(normal) -> np.ndarray:
    """Base tangente determinista (2, 3) con u × v = normal."""
    normal = np.asarray(normal, dtype=float)
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(normal)))] = 1.0
    u = seed - (seed @ normal) * normal
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return np.vstack([u, v])


def polygon_parts(geometry) -> list:
    """Polígonos contenidos en una geometría de shapely (descarta líneas y puntos)."""
    if geometry.is_empty:
        return []
    if isinstance(geometry, Polygon):
        return [geometry]
    parts = []
    for part in getattr(geometry, "geoms", []):
        parts.extend(polygon_parts(part))
    return parts


def clean_polygon(polygon: Polygon) -> Polygon:
    """Orientar en sentido antihorario y quitar vértices colineales."""
    exterior = _clean_ring(polygon.exterior.coords)
    interiors = [ring for ring in (_clean_ring(r.coords) for r in polygon.interiors) if len(ring) >= 3]
    return orient(Polygon(exterior, interiors), sign=1.0)


def _clean_ring(coords) -> list:
    points = np.asarray(coords, dtype=float)[:-1]
    count = len(points)
    kept = []
    for i in range(count):
        incoming = points[i] - points[i - 1]
        outgoing = points[(i + 1) % count] - points[i]
        scale = np.linalg.norm(incoming) * np.linalg.norm(outgoing)
        cross = incoming[0] * outgoing[1] - incoming[1] * outgoing[0]
        if abs(cross) > 1e-9 * scale:
            kept.append(tuple(points[i]))
    return kept


def compute_facets(vertices: np.ndarray, triangles: np.ndarray) -> Tuple[Facet, ...]:
    """
    Agrupar triángulos coplanares y fusionarlos en polígonos 2-D.

    Args:
        vertices: (V, 3) vértices en el marco local
        triangles: (T, 3) índices con orientación hacia fuera

    Returns:
        Tupla de facetas (una por componente conexa de cada plano)
    """
    tri = vertices[triangles]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    lengths = np.linalg.norm(normals, axis=1)
    valid = lengths > 1e-18
    normals[valid] /= lengths[valid, None]

    groups = {}
    for index in np.flatnonzero(valid):
        offset = float(normals[index] @ tri[index, 0])
        key = (
            tuple(np.round(normals[index], NORMAL_DECIMALS) + 0.0),
            round(offset, OFFSET_DECIMALS) + 0.0,
        )
        groups.setdefault(key, []).append(index)

    facets = []
    for members in groups.values():
        normal = normals[members].sum(axis=0)
        normal /= np.linalg.norm(normal)
        offset = float(np.mean(np.einsum("ij,j->i", tri[members, 0], normal)))
        origin = normal * offset
        axes = plane_axes(normal)

        flat = [Polygon((tri[i] - origin) @ axes.T) for i in members]
        merged = unary_union(flat)
        for part in sorted(polygon_parts(merged), key=lambda p: p.representative_point().coords[0]):
            facets.append(
                Facet(normal=normal, offset=offset, origin=origin, axes=axes, polygon=clean_polygon(part))
            )
    return tuple(facets)


# ========== Formas ==========


@dataclass(frozen=True, eq=False)
class Shape:
    """
    Forma rígida en su marco local: policubo (vóxeles) o malla triangular cerrada.
    Las propiedades derivadas se calculan una vez y se cachean.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    voxels: Optional[FrozenSet[Cell]] = None
    voxel_size: Optional[float] = None
    convex: bool = False

    @property
    def is_polycube(self) -> bool:
        return self.voxels is not None

    @cached_property
    def facets(self) -> Tuple[Facet, ...]:
        return compute_facets(self.vertices, self.triangles)

    @cached_property
    def convex_pieces(self) -> Tuple[ConvexPiece, ...]:
        if self.is_polycube:
            half = np.full(3, self.voxel_size / 2.0)
            return tuple(
                box_piece((np.array(cell) + 0.5) * self.voxel_size, half) for cell in sorted(self.voxels)
            )
        if self.convex:
            return (polytope_piece(self.vertices, self.triangles),)
        return (hull_piece(self.vertices),)

    @cached_property
    def _mesh(self) -> trimesh.Trimesh:
        return trimesh.Trimesh(vertices=self.vertices, faces=self.triangles, process=False)

    @cached_property
    def volume(self) -> float:
        if self.is_polycube:
            return len(self.voxels) * self.voxel_size**3
        return float(self._mesh.volume)

    @cached_property
    def center_of_mass(self) -> np.ndarray:
        if self.is_polycube:
            cells = np.array(sorted(self.voxels), dtype=float)
            return (cells.mean(axis=0) + 0.5) * self.voxel_size
        return np.asarray(self._mesh.center_mass, dtype=float)

    @cached_property
    def surface_area(self) -> float:
        tri = self.vertices[self.triangles]
        return float(0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1).sum())


def build_shape(voxels: Iterable, voxel_size: float) -> Shape:
    """
    Construir la superficie exterior de un policubo.

    Las caras compartidas entre celdas vecinas se eliminan; los vértices se
    comparten a través de la retícula entera.

    Args:
        voxels: Celdas enteras (i, j, k)
        voxel_size: Arista del vóxel en metros

    Returns:
        Shape con malla cerrada orientada hacia fuera

    Raises:
        EmptyShape: Si no hay celdas
        Disconnected: Si las celdas no son 6-conexas
    """
    cells = frozenset(tuple(int(c) for c in cell) for cell in voxels)
    if not cells:
        raise EmptyShape("El conjunto de vóxeles está vacío")
    if voxel_size <= 0:
        raise ValueError(f"voxel_size debe ser positivo: {voxel_size}")
    _check_connected(cells)

    vertex_ids = {}
    triangles = []
    for cell in sorted(cells):
        for axis in range(3):
            for sign in (1, -1):
                neighbor = list(cell)
                neighbor[axis] += sign
                if tuple(neighbor) in cells:
                    continue
                ids = [vertex_ids.setdefault(corner, len(vertex_ids)) for corner in _face_corners(cell, axis, sign)]
                triangles.append((ids[0], ids[1], ids[2]))
                triangles.append((ids[0], ids[2], ids[3]))

    vertices = np.array(list(vertex_ids), dtype=float) * voxel_size
    return Shape(
        vertices=vertices,
        triangles=np.array(triangles, dtype=int),
        voxels=cells,
        voxel_size=float(voxel_size),
    )


def _face_corners(cell: Cell, axis: int, sign: int) -> list:
    u_axis, v_axis = (axis + 1) % 3, (axis + 2) % 3
    base = list(cell)
    if sign > 0:
        base[axis] += 1

    corners = []
    for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
        corner = list(base)
        corner[u_axis] += du
        corner[v_axis] += dv
        corners.append(tuple(corner))
    # u × v apunta a +axis; para la cara negativa se invierte el recorrido
    return corners if sign > 0 else corners[::-1]


def _check_connected(cells: FrozenSet[Cell]):
    points = np.array(sorted(cells))
    points -= points.min(axis=0)
    grid = np.zeros(points.max(axis=0) + 1, dtype=bool)
    grid[tuple(points.T)] = True
    _, components = ndimage.label(grid)
    if components > 1:
        raise Disconnected(f"Los vóxeles forman {components} componentes separadas")


def shape_from_mesh(vertices, triangles, convex: bool = False) -> Shape:
    """
    Validar y envolver una malla triangular.

    Raises:
        InvalidMesh: Si no es cerrada, no es orientable o apunta hacia dentro
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=int)
    if vertices.ndim != 2 or vertices.shape[1] != 3 or triangles.ndim != 2 or triangles.shape[1] != 3:
        raise InvalidMesh("Se esperaban vértices (V, 3) y triángulos (T, 3)")
    if len(triangles) == 0 or triangles.min() < 0 or triangles.max() >= len(vertices):
        raise InvalidMesh("Índices de triángulo fuera de rango")

    mesh = trimesh.Trimesh(vertices=vertices, faces=triangles, process=False)
    if not mesh.is_watertight:
        raise InvalidMesh("La malla no es cerrada")
    if not mesh.is_winding_consistent:
        raise InvalidMesh("La malla no es orientable de forma consistente")
    if mesh.volume <= 0:
        raise InvalidMesh("La malla está orientada hacia dentro (volumen con signo ≤ 0)")

    return Shape(vertices=vertices, triangles=triangles, convex=convex)


def load_mesh_shape(path: Path) -> Shape:
    """Cargar una malla OBJ/STL con trimesh."""
    mesh = trimesh.load(str(path), force="mesh", process=True)
    return shape_from_mesh(mesh.vertices, mesh.faces)


def box_shape(half_extents, center=(0.0, 0.0, 0.0)) -> Shape:
    """Caja alineada con los ejes locales, usada para los dedos y la palma."""
    half = np.asarray(half_extents, dtype=float)
    center = np.asarray(center, dtype=float)
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
    vertices = center + signs * half
    # índices: 4·ix + 2·iy + iz
    triangles = np.array(
        [
            [0, 1, 3], [0, 3, 2],  # -x
            [4, 6, 7], [4, 7, 5],  # +x
            [0, 4, 5], [0, 5, 1],  # -y
            [2, 3, 7], [2, 7, 6],  # +y
            [0, 2, 6], [0, 6, 4],  # -z
            [1, 5, 7], [1, 7, 3],  # +z
        ],
        dtype=int,
    )
    return Shape(vertices=vertices, triangles=triangles, convex=True)


# ========== Semiespacio (mesa) ==========


@dataclass(frozen=True)
class HalfSpace:
    """Semiespacio z ≤ height; modela la mesa de trabajo."""

    height: float = 0.0
