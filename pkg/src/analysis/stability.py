"""
Estabilidad - Margen del espacio de llaves (wrenches) resistibles
Conos de fricción linealizados en pirámides, llaves normalizadas por m·|g|
y ρ, y margen de −w₀ dentro de la envolvente convexa.
"""

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, FrozenSet, Literal, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from errors import DegenerateHull, NoContacts
from geometry.contacts import ContactPatch
from geometry.hull import convex_hull_margin

if TYPE_CHECKING:
    from planner.scene import Scene

# Calidad de estabilidad: 0, positiva finita o +INF (sólo tras la asistencia)
StabilityQuality = float
INF = math.inf

DEFAULT_GRAVITY = (0.0, 0.0, -9.81)


class StabilityParams(BaseModel):
    """Parámetros del análisis de estabilidad."""

    model_config = ConfigDict(frozen=True)

    force_cap: Optional[float] = Field(
        None, gt=0, description="Presupuesto total de fuerza normal (N); None = 10 × peso de la pieza más pesada"
    )
    rho_mode: Literal["max-contact-distance", "fixed"] = "max-contact-distance"
    rho: float = Field(0.05, gt=0, description="Longitud característica (m) en modo fixed")
    min_margin: float = Field(1e-6, ge=0, description="Margen por debajo del cual s = 0")
    hull_exact_limit: int = Field(200, ge=1, description="Puntos máximos para la envolvente exacta")


@dataclass(frozen=True)
class FrictionModel:
    """Fricción estática por par de cuerpos, con un valor por defecto."""

    mu: float = 0.5
    cone_sides: int = 6
    pair_mu: Dict[FrozenSet[str], float] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.mu < 0 or any(value < 0 for value in self.pair_mu.values()):
            raise ValueError("El coeficiente de fricción no puede ser negativo")
        if self.cone_sides < 3:
            raise ValueError("La pirámide de fricción necesita al menos 3 lados")

    def mu_for(self, body_a: str, body_b: str) -> float:
        return self.pair_mu.get(frozenset((body_a, body_b)), self.mu)

    def with_mu(self, mu: float) -> "FrictionModel":
        """Mismo modelo con un único coeficiente para todos los pares."""
        return FrictionModel(mu=mu, cone_sides=self.cone_sides)


@dataclass(frozen=True, eq=False)
class WrenchSet:
    """Generadores (K, 6) ya escalados por el presupuesto normal y la llave de gravedad."""

    generators: np.ndarray
    gravity_wrench: np.ndarray
    rho: float
    normal_budget: float


# ========== Construcción ==========


def _tangent_seed(normal: np.ndarray, frame: Optional[np.ndarray]) -> np.ndarray:
    if frame is None:
        seed = np.cross([0.0, 0.0, 1.0], normal)
        return seed if np.linalg.norm(seed) >= 1e-9 else np.array([1.0, 0.0, 0.0])
    # primer eje del marco lejos de la normal; Σ|proyección|² = 2, así que siempre hay uno
    for axis in np.asarray(frame, dtype=float).T:
        if np.linalg.norm(axis - (axis @ normal) * normal) > 0.5:
            return axis
    raise ValueError("El marco de referencia no es una rotación")


def friction_pyramid(normal, mu: float, sides: int = 6, frame=None) -> np.ndarray:
    """
    Aristas de la pirámide inscrita en el cono de fricción.

    Args:
        normal: Normal unitaria del contacto
        mu: Coeficiente de fricción estática
        sides: Número de aristas
        frame: Rotación 3×3 del cuerpo analizado; orienta la primera arista
            para que la pirámide gire con la escena. None usa ejes del mundo

    Returns:
        (sides, 3) fuerzas con componente normal 1 y tangencial exactamente mu
    """
    normal = np.asarray(normal, dtype=float)
    seed = _tangent_seed(normal, frame)
    u = seed - (seed @ normal) * normal
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)

    angles = 2.0 * np.pi * np.arange(sides) / sides
    tangents = np.cos(angles)[:, None] * u + np.sin(angles)[:, None] * v
    return normal + mu * tangents


def build_wrench_set(
    patches: Sequence[ContactPatch],
    com,
    mass: float,
    friction: FrictionModel,
    params: StabilityParams,
    gravity=DEFAULT_GRAVITY,
    force_cap: Optional[float] = None,
    frame=None,
) -> WrenchSet:
    """
    Llaves generadoras de todos los contactos sobre una pieza.

    Cada vértice de cada parche aporta una llave por arista de su pirámide:
    (f, (p − com) × f / ρ), escalada por force_cap / (m·|g|). Con `frame`
    (rotación de la pieza) las pirámides se orientan en el marco del cuerpo
    y el margen no cambia al girar la escena.

    Raises:
        NoContacts: Si no hay parches
    """
    if not patches:
        raise NoContacts("La pieza no tiene contactos")
    if mass <= 0:
        raise ValueError(f"La masa debe ser positiva: {mass}")

    com = np.asarray(com, dtype=float)
    gravity = np.asarray(gravity, dtype=float)
    weight = mass * np.linalg.norm(gravity)
    cap = force_cap or params.force_cap or 10.0 * weight
    budget = cap / weight

    points = np.vstack([patch.contact_points for patch in patches])
    if params.rho_mode == "fixed":
        rho = params.rho
    else:
        rho = float(np.linalg.norm(points - com, axis=1).max())
        if rho < 1e-12:
            rho = 1.0

    blocks = []
    for patch in patches:
        edges = friction_pyramid(
            patch.normal, friction.mu_for(patch.body_a, patch.body_b), friction.cone_sides, frame=frame
        )
        for point in patch.contact_points:
            torques = np.cross(point - com, edges) / rho
            blocks.append(np.hstack([edges, torques]))

    gravity_wrench = np.concatenate([gravity / np.linalg.norm(gravity), np.zeros(3)])
    return WrenchSet(
        generators=np.vstack(blocks) * budget,
        gravity_wrench=gravity_wrench,
        rho=rho,
        normal_budget=budget,
    )


def wrench_margin(wrenches: WrenchSet, params: StabilityParams) -> StabilityQuality:
    """
    Margen de −w₀ dentro de conv({0} ∪ generadores), recortado a 0.

    Una envolvente degenerada cuenta como "fuera del interior".
    """
    points = np.vstack([np.zeros((1, 6)), wrenches.generators])
    try:
        margin = convex_hull_margin(points, -wrenches.gravity_wrench, params.hull_exact_limit)
    except DegenerateHull as exc:
        logger.debug(f"Envolvente degenerada, s = 0: {exc}")
        return 0.0
    return margin if margin >= params.min_margin else 0.0


# ========== Consultas sobre la escena ==========


def resolve_force_cap(params: StabilityParams, scene: "Scene") -> float:
    return params.force_cap or 10.0 * scene.heaviest_weight


def stability_quality(
    workpiece: str,
    fixed_bodies: Sequence[str],
    scene: "Scene",
    params: StabilityParams,
) -> StabilityQuality:
    """
    Calidad de estabilidad de una pieza apoyada en la mesa y en `fixed_bodies`.

    Args:
        workpiece: Id de la pieza analizada (en su pose final)
        fixed_bodies: Ids de los cuerpos inmóviles (la mesa se incluye siempre)
        scene: Escena
        params: Parámetros de estabilidad

    Returns:
        s ≥ 0; 0 sin contactos, con envolvente degenerada o margen < min_margin

    Raises:
        UnknownBody: Si algún id no existe
    """
    piece = scene.workpiece(workpiece)
    patches = scene.support_patches(workpiece, fixed_bodies)
    if not patches:
        return 0.0

    wrenches = build_wrench_set(
        patches,
        piece.center_of_mass,
        piece.mass,
        scene.friction,
        params,
        gravity=scene.gravity,
        force_cap=resolve_force_cap(params, scene),
        frame=piece.pose.rotation,
    )
    quality = wrench_margin(wrenches, params)
    logger.debug(f"s({workpiece} | {sorted(fixed_bodies)}) = {quality:.6g}")
    return quality


def stability_row(order: Sequence[str], scene: "Scene", params: StabilityParams) -> list:
    """Entrada j: estabilidad de la j-ésima pieza sobre la mesa y las j−1 anteriores."""
    return [stability_quality(piece, order[:j], scene, params) for j, piece in enumerate(order)]
