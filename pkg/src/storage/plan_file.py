"""
Archivo de plan - Serialización del resultado y lectura validada con JSON Schema
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from jsonschema import Draft202012Validator
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from analysis.grasping import Grasp
from errors import ParseError, PlanIOError
from planner.search import PlanResult
from settings import VERSION, PlannerConfig, config_hash
from storage.canonical import canonical_dumps

SCHEMA_PATH = Path(__file__).parent / "schemas" / "plan.schema.json"


# ========== Modelos ==========


class GraspRecord(BaseModel):
    """Agarre serializado: pose de la pinza, apertura y contactos."""

    model_config = ConfigDict(extra="forbid")

    quaternion: List[float]
    translation: List[float]
    opening: float
    contact_pair: List[List[float]]

    @classmethod
    def from_grasp(cls, grasp: Grasp) -> "GraspRecord":
        return cls(
            quaternion=grasp.pose.to_quaternion().tolist(),
            translation=grasp.pose.translation.tolist(),
            opening=grasp.opening,
            contact_pair=grasp.contact_pair.tolist(),
        )


class PlanStep(BaseModel):
    model_config = ConfigDict(extra="forbid")

    workpiece: str
    stability: float
    raw_stability: float
    graspability: int
    assemblability: float
    direction: List[float]
    margin: float
    grasps: List[GraspRecord]
    assisting_grasp: Optional[GraspRecord] = None
    assisting_grasps: List[GraspRecord] = Field(default_factory=list)
    held: Optional[str] = None
    held_pieces: List[str] = Field(default_factory=list)


class PlanMetadata(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    config_hash: str
    tool_version: str
    surrogate_quality: bool = True
    order_count: int
    optimal_index: int
    used_assist: bool
    assist_feasible: bool


class PlanFile(BaseModel):
    """Contenido de un archivo de plan."""

    model_config = ConfigDict(extra="forbid")

    order: List[str]
    steps: List[PlanStep]
    score: float
    matrices: Optional[Dict[str, Any]] = None
    metadata: PlanMetadata


# ========== Conversión ==========


def plan_to_file(result: PlanResult, config: PlannerConfig) -> PlanFile:
    """Convertir un PlanResult en su forma serializable."""
    optimal = result.optimal
    assist = optimal.assist

    steps = []
    for j, piece in enumerate(optimal.order):
        held = assist.held[j] if assist else ()
        assisting = assist.assist_grasps[j] if assist else ()
        steps.append(
            PlanStep(
                workpiece=piece,
                stability=optimal.s_row[j],
                raw_stability=optimal.raw_s_row[j],
                graspability=optimal.g_row[j],
                assemblability=optimal.a_row[j],
                direction=optimal.directions[j].direction.tolist(),
                margin=optimal.directions[j].margin,
                grasps=[GraspRecord.from_grasp(grasp) for grasp in optimal.grasps[j]],
                assisting_grasp=GraspRecord.from_grasp(assisting[0]) if assisting else None,
                assisting_grasps=[GraspRecord.from_grasp(grasp) for grasp in assisting],
                held=held[0] if held else None,
                held_pieces=list(held),
            )
        )

    return PlanFile(
        order=list(optimal.order),
        steps=steps,
        score=optimal.score,
        matrices=result.matrices if config.full_matrices else None,
        metadata=PlanMetadata(
            seed=result.seed,
            config_hash=config_hash(config),
            tool_version=VERSION,
            order_count=result.order_count,
            optimal_index=result.optimal_index,
            used_assist=result.used_assist,
            assist_feasible=optimal.assist_feasible,
        ),
    )


def dumps_plan(plan_file: PlanFile) -> str:
    data = plan_file.model_dump(mode="python")
    if data["matrices"] is None:
        del data["matrices"]
    return canonical_dumps(data)


# ========== E/S ==========


def save_plan(plan, path, config: Optional[PlannerConfig] = None):
    """
    Escribir un plan en JSON canónico.

    Args:
        plan: PlanResult (necesita config) o PlanFile
        path: Destino
        config: Configuración usada para planificar

    Raises:
        PlanIOError: Si no se puede escribir
    """
    if isinstance(plan, PlanResult):
        plan = plan_to_file(plan, config or PlannerConfig())
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_plan(plan), encoding="utf-8")
    except OSError as exc:
        raise PlanIOError(f"No se puede escribir {path}: {exc}") from exc
    logger.info(f"💾 Plan guardado en {path}")


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))


def schema_errors(data) -> List[str]:
    """Errores de validación contra el esquema publicado, ordenados por ruta."""
    validator = Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.path])
    return [f"{'.'.join(str(p) for p in error.path) or '<raíz>'}: {error.message}" for error in errors]


def load_plan(path) -> PlanFile:
    """
    Leer un plan guardado y validarlo contra el esquema.

    Raises:
        PlanIOError: Si no se puede leer
        ParseError: JSON mal formado o no conforme al esquema
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PlanIOError(f"No se puede leer {path}: {exc}") from exc

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    problems = schema_errors(data)
    if problems:
        raise ParseError(f"{path}: " + "; ".join(problems[:20]))
    try:
        return PlanFile.model_validate(data)
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc}") from exc
