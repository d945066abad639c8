"""
Contactos - Detección de parches de contacto cara a cara
Sólo se detectan contactos planos entre caras antiparalelas; los contactos
de arista o vértice se ignoran.
"""

from dataclasses import dataclass
from typing import List, Union

import numpy as np
import shapely

from errors import Interpenetration
from geometry.collision import half_space_depth, overlap_depth, world_pieces
from geometry.pose import Pose
from geometry.shape import Facet, HalfSpace, Shape, clean_polygon, polygon_parts
from geometry.tolerances import Tolerances

TABLE_ID = "table"

# Normales antiparalelas dentro de 1e-6 rad
ANTIPARALLEL_COS = float(np.cos(1e-6))

UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class ContactPatch:
    """
    Región de contacto coplanar entre dos cuerpos.

    La normal apunta del cuerpo A hacia el cuerpo B. Los puntos de contacto
    son los vértices del polígono, situados en el plano medio entre caras.
    """

    body_a: str
    body_b: str
    normal: np.ndarray
    polygon: np.ndarray
    area: float

    @property
    def contact_points(self) -> np.ndarray:
        return self.polygon

    def flipped(self) -> "ContactPatch":
        return ContactPatch(
            body_a=self.body_b,
            body_b=self.body_a,
            normal=-self.normal + 0.0,
            polygon=self.polygon[::-1].copy(),
            area=self.area,
        )


def detect_contacts(
    shape_a: Union[Shape, HalfSpace],
    pose_a: Pose,
    shape_b: Union[Shape, HalfSpace],
    pose_b: Pose,
    tol: Tolerances,
    body_a: str = "a",
    body_b: str = "b",
) -> List[ContactPatch]:
    """
    Encontrar los parches de contacto entre dos cuerpos en sus poses.

    Args:
        shape_a: Forma (o la mesa como semiespacio) del cuerpo A
        pose_a: Pose de A (ignorada para el semiespacio)
        shape_b: Forma del cuerpo B
        pose_b: Pose de B
        tol: Tolerancias de contacto
        body_a: Id del cuerpo A en los parches
        body_b: Id del cuerpo B en los parches

    Returns:
        Un parche por región coplanar de área ≥ min_patch_area

    Raises:
        Interpenetration: Si los cuerpos se solapan más de contact_gap
    """
    if isinstance(shape_b, HalfSpace):
        flipped = detect_contacts(shape_b, pose_b, shape_a, pose_a, tol, body_b, body_a)
        return [patch.flipped() for patch in flipped]
    if isinstance(shape_a, HalfSpace):
        return _table_contacts(shape_a, shape_b, pose_b, tol, body_a, body_b)

    depth = overlap_depth(shape_a, pose_a, shape_b, pose_b)
    if depth > tol.contact_gap:
        raise Interpenetration(f"{body_a} y {body_b} se interpenetran {depth:.3g} m")
    if depth < -tol.contact_gap:
        return []

    facets_a = [facet.transformed(pose_a) for facet in shape_a.facets]
    facets_b = [facet.transformed(pose_b) for facet in shape_b.facets]

    patches = []
    for facet_a in facets_a:
        for facet_b in facets_b:
            if facet_a.normal @ facet_b.normal > -ANTIPARALLEL_COS:
                continue
            # plano de B expresado sobre la normal de A
            gap = -facet_b.offset - facet_a.offset
            if abs(gap) > tol.contact_gap:
                continue
            patches.extend(_clip(facet_a, facet_b, gap, tol, body_a, body_b))
    return patches


def _clip(facet_a: Facet, facet_b: Facet, gap: float, tol: Tolerances, body_a: str, body_b: str) -> List[ContactPatch]:
    reframed = shapely.transform(facet_b.polygon, lambda uv: facet_a.to_plane(facet_b.to_world(uv)))
    overlap = facet_a.polygon.intersection(reframed)

    patches = []
    for part in polygon_parts(overlap):
        if part.area < tol.min_patch_area:
            continue
        part = clean_polygon(part)
        ring = np.asarray(part.exterior.coords)[:-1]
        points = facet_a.to_world(ring) + facet_a.normal * (gap / 2.0)
        patches.append(
            ContactPatch(body_a=body_a, body_b=body_b, normal=facet_a.normal.copy(), polygon=points, area=part.area)
        )
    return patches


def _table_contacts(table: HalfSpace, shape: Shape, pose: Pose, tol: Tolerances, body_a: str, body_b: str) -> List[ContactPatch]:
    depth = half_space_depth(table, world_pieces(shape, pose))
    if depth > tol.contact_gap:
        raise Interpenetration(f"{body_b} atraviesa la mesa {depth:.3g} m")

    patches = []
    for facet in shape.facets:
        facet = facet.transformed(pose)
        if facet.normal @ UP > -ANTIPARALLEL_COS:
            continue
        gap = -facet.offset - table.height
        if abs(gap) > tol.contact_gap or facet.area < tol.min_patch_area:
            continue
        ring = np.asarray(facet.polygon.exterior.coords)[:-1]
        points = facet.to_world(ring) - UP * (gap / 2.0)
        patches.append(ContactPatch(body_a=body_a, body_b=body_b, normal=UP.copy(), polygon=points, area=facet.area))
    return patches
