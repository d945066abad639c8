"""
AsmPlan - Planificador de secuencias de ensamblaje para robot de dos brazos
Punto de entrada de la línea de comandos
"""

import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv
from loguru import logger
from pydantic import ValidationError

from errors import NoFeasibleOrder, PlanIOError
from planner.evaluator import OrderEvaluation, evaluate_order
from planner.search import PlanResult, plan
from settings import VERSION, PlannerConfig, configure_logging, load_config
from storage.export import export_steps
from storage.plan_file import load_plan, save_plan
from storage.scene_file import load_scene, scene_from_file

# Cargar variables de entorno
load_dotenv()

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_FEASIBLE = 3
EXIT_IO = 4


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "si", "sí", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"booleano no válido: {text}")


def _format_quality(value: float) -> str:
    return "+INF" if value == float("inf") else f"{value:.4g}"


def print_summary(evaluation: OrderEvaluation):
    """Tabla por paso del orden elegido (stdout)."""
    held = evaluation.assist.held if evaluation.assist else [()] * len(evaluation.order)
    print(f"Orden: {' → '.join(evaluation.order)}   puntuación: {evaluation.score:.6g}")
    print(f"{'paso':>4}  {'pieza':<12} {'s':>10} {'g':>5} {'a':>7}  {'dirección':<26} sujeta")
    for j, piece in enumerate(evaluation.order):
        direction = ", ".join(f"{c:+.3f}" for c in evaluation.directions[j].direction)
        print(
            f"{j + 1:>4}  {piece:<12} {_format_quality(evaluation.s_row[j]):>10} {evaluation.g_row[j]:>5} "
            f"{evaluation.a_row[j]:>7.4f}  ({direction})  {', '.join(held[j]) or '-'}"
        )


# ========== COMANDOS ==========


def _config_from_args(args: argparse.Namespace) -> PlannerConfig:
    return load_config(
        seed=getattr(args, "seed", None),
        mu_override=getattr(args, "mu", None),
        extra_hands=getattr(args, "extra_hands", None),
        full_matrices=True if getattr(args, "full", False) else None,
        prefer_no_assist=getattr(args, "prefer_no_assist", None),
        threads=getattr(args, "threads", None),
        log_level=getattr(args, "log_level", None),
    )


def cmd_plan(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    configure_logging(config.log_level)
    logger.info(f"🚀 AsmPlan {VERSION}: planificando {args.scene}")

    scene = scene_from_file(load_scene(args.scene), config.tolerances)
    result = plan(scene, config)
    save_plan(result, args.out, config)
    print_summary(result.optimal)
    return EXIT_OK


def cmd_eval_order(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    configure_logging(config.log_level)

    scene = scene_from_file(load_scene(args.scene), config.tolerances)
    if config.mu_override is not None:
        scene = scene.with_friction(config.mu_override)
    order = [piece.strip() for piece in args.order.split(",") if piece.strip()]
    evaluation = evaluate_order(order, scene, config)

    result = PlanResult(optimal=evaluation, optimal_index=0, order_count=1, seed=config.seed)
    save_plan(result, args.out, config)
    print_summary(evaluation)
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    configure_logging(config.log_level)

    plan_file = load_plan(args.plan)
    scene = scene_from_file(load_scene(args.scene), config.tolerances)
    export_steps(plan_file, scene, args.dir, config.retract_distance)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    configure_logging(config.log_level)

    scene_file = load_scene(args.scene)
    print(f"VÁLIDA: {len(scene_file.workpieces)} piezas")
    return EXIT_OK


# ========== ARGUMENTOS ==========


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asmplan",
        description="Planificador de secuencias de ensamblaje con agarres de asistencia",
    )
    parser.add_argument("--version", action="version", version=f"asmplan {VERSION}")
    parser.add_argument("--log-level", default=None, help="Nivel de log (por defecto INFO o ASMPLAN_LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    plan_cmd = commands.add_parser("plan", help="Evaluar los n! órdenes y guardar el óptimo")
    plan_cmd.add_argument("scene", help="Archivo de escena JSON")
    plan_cmd.add_argument("--out", required=True, help="Archivo de plan de salida")
    plan_cmd.add_argument("--seed", type=int, default=None, help="Semilla del desempate (por defecto 0)")
    plan_cmd.add_argument("--mu", type=float, default=None, help="Fricción única para todos los pares")
    plan_cmd.add_argument("--extra-hands", type=int, default=None, help="Brazos de asistencia (por defecto 1)")
    plan_cmd.add_argument("--full", action="store_true", help="Incluir las matrices S/G/A completas")
    plan_cmd.add_argument(
        "--prefer-no-assist", type=_parse_bool, default=None, help="Desempatar a favor de órdenes sin asistencia (por defecto true)"
    )
    plan_cmd.add_argument("--threads", type=int, default=None, help="Hilos de evaluación (ASMPLAN_THREADS manda)")
    plan_cmd.set_defaults(handler=cmd_plan)

    eval_cmd = commands.add_parser("eval-order", help="Evaluar un único orden")
    eval_cmd.add_argument("scene", help="Archivo de escena JSON")
    eval_cmd.add_argument("--order", required=True, help="Ids separados por comas")
    eval_cmd.add_argument("--out", required=True, help="Archivo de evaluación de salida")
    eval_cmd.add_argument("--mu", type=float, default=None, help="Fricción única para todos los pares")
    eval_cmd.add_argument("--extra-hands", type=int, default=None, help="Brazos de asistencia (por defecto 1)")
    eval_cmd.set_defaults(handler=cmd_eval_order)

    export_cmd = commands.add_parser("export", help="Exportar instantáneas OBJ por paso")
    export_cmd.add_argument("plan", help="Archivo de plan JSON")
    export_cmd.add_argument("scene", help="Archivo de escena JSON")
    export_cmd.add_argument("--dir", required=True, help="Directorio de salida")
    export_cmd.set_defaults(handler=cmd_export)

    validate_cmd = commands.add_parser("validate", help="Validar un archivo de escena")
    validate_cmd.add_argument("scene", help="Archivo de escena JSON")
    validate_cmd.set_defaults(handler=cmd_validate)

    return parser


def exit_code_for(exc: BaseException) -> int:
    """Contrato estable de códigos de salida."""
    if isinstance(exc, NoFeasibleOrder):
        return EXIT_NO_FEASIBLE
    if isinstance(exc, (PlanIOError, OSError)):
        return EXIT_IO
    if isinstance(exc, (ValidationError, ValueError, KeyError)):
        return EXIT_INVALID
    return 1


# ========== EJECUTAR ==========


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:
        code = exit_code_for(exc)
        if code == 1:
            raise
        logger.error(f"❌ {exc}")
        return code


if __name__ == "__main__":
    sys.exit(main())
