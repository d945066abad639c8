"""
Exportación - Instantáneas OBJ por paso del plan
Cada archivo step_k.obj contiene el prefijo montado, la pieza entrante
retirada a lo largo de su dirección, su pinza y las manos que sujetan
el prefijo durante la inserción, como grupos con nombre.
"""

from pathlib import Path
from typing import List

import numpy as np
from loguru import logger

from errors import PlanIOError
from geometry.pose import Pose
from planner.scene import Scene
from storage.plan_file import GraspRecord, PlanFile

VERTEX_FORMAT = "%.12g"


class ObjWriter:
    """Acumula grupos de triángulos con índices de vértice globales (base 1)."""

    def __init__(self, name: str):
        self.lines = [f"# asmplan {name}", f"o {name}"]
        self._count = 0

    def add_group(self, name: str, vertices: np.ndarray, triangles: np.ndarray):
        self.lines.append(f"g {name}")
        for vertex in np.asarray(vertices, dtype=float):
            self.lines.append("v " + " ".join(VERTEX_FORMAT % c for c in vertex))
        for a, b, c in np.asarray(triangles, dtype=int) + self._count + 1:
            self.lines.append(f"f {a} {b} {c}")
        self._count += len(vertices)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _grasp_pose(record: GraspRecord, offset: np.ndarray) -> Pose:
    return Pose.from_quaternion(record.quaternion, np.asarray(record.translation) + offset)


def _add_gripper(writer: ObjWriter, group: str, scene: Scene, record: GraspRecord, offset: np.ndarray):
    pose = _grasp_pose(record, offset)
    shapes = scene.gripper.collision_shapes(record.opening)
    vertices = [pose.apply(shape.vertices) for _, shape in shapes]
    triangles, base = [], 0
    for (_, shape), block in zip(shapes, vertices):
        triangles.append(shape.triangles + base)
        base += len(block)
    writer.add_group(group, np.vstack(vertices), np.vstack(triangles))


def export_steps(plan_file: PlanFile, scene: Scene, out_dir, retract_distance: float = 0.15) -> List[Path]:
    """
    Escribir un OBJ por paso del plan.

    Args:
        plan_file: Plan (normalmente leído con load_plan)
        scene: Escena con la que se planificó
        out_dir: Directorio de salida (se crea si falta)
        retract_distance: Separación de la pieza entrante (m)

    Returns:
        Rutas escritas, en orden de paso

    Raises:
        PlanIOError: Si no se puede escribir
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PlanIOError(f"No se puede crear {out_dir}: {exc}") from exc

    written = []
    for k, step in enumerate(plan_file.steps, start=1):
        writer = ObjWriter(f"step_{k}")
        for placed in plan_file.order[: k - 1]:
            piece = scene.workpiece(placed)
            writer.add_group(f"prefix_{placed}", piece.world_vertices, piece.shape.triangles)

        incoming = scene.workpiece(step.workpiece)
        offset = -retract_distance * np.asarray(step.direction, dtype=float)
        writer.add_group(f"incoming_{incoming.id}", incoming.world_vertices + offset, incoming.shape.triangles)

        if step.grasps:
            _add_gripper(writer, "gripper", scene, step.grasps[0], offset)
        # la sujeción del paso anterior sigue activa mientras entra esta pieza
        if k >= 2:
            holding = plan_file.steps[k - 2]
            for held, record in zip(holding.held_pieces, holding.assisting_grasps):
                _add_gripper(writer, f"assist_gripper_{held}", scene, record, np.zeros(3))

        path = out_dir / f"step_{k}.obj"
        try:
            path.write_text(writer.text(), encoding="utf-8")
        except OSError as exc:
            raise PlanIOError(f"No se puede escribir {path}: {exc}") from exc
        written.append(path)

    logger.success(f"🧊 {len(written)} instantáneas OBJ en {out_dir}")
    return written
