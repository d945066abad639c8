"""
Tests de estabilidad - Pirámides de fricción, margen de llaves y oráculos LP / polígono de apoyo
"""

from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import linprog
from shapely.geometry import MultiPoint, Point

from analysis.stability import (
    INF,
    StabilityParams,
    build_wrench_set,
    friction_pyramid,
    resolve_force_cap,
    stability_quality,
    stability_row,
)
from errors import NoContacts, UnknownBody
from geometry.hull import support_directions
from geometry.pose import Pose

from conftest import CUBE, L_TRICUBE, SOMA3, make_scene, random_polycube

PARAMS = StabilityParams()


def _wrenches(scene, piece_id, fixed=(), params=PARAMS):
    piece = scene.workpiece(piece_id)
    return build_wrench_set(
        scene.support_patches(piece_id, fixed),
        piece.center_of_mass,
        piece.mass,
        scene.friction,
        params,
        gravity=scene.gravity,
        force_cap=resolve_force_cap(params, scene),
        frame=piece.pose.rotation,
    )


def _lp_contains(generators, point) -> bool:
    """∃ λ ≥ 0, Σλ ≤ 1 con Σ λ·g = point (punto de conv({0} ∪ generadores))."""
    result = linprog(
        c=np.zeros(len(generators)),
        A_ub=np.ones((1, len(generators))),
        b_ub=[1.0],
        A_eq=generators.T,
        b_eq=point,
        bounds=(0, None),
        method="highs",
    )
    return result.status == 0


def _lp_feasible(wrenches) -> bool:
    return _lp_contains(wrenches.generators, -wrenches.gravity_wrench)


def _facet_gap(generators, query, starts: int = 5, rounds: int = 6) -> float:
    """
    Cota superior del margen: min sobre direcciones unitarias d de
    max_p (p − q)·d, refinada con LPs sobre el plano tangente d₀·d = 1.
    """
    offsets = np.vstack([np.zeros((1, generators.shape[1])), generators]) - query

    def gap(direction):
        return float(np.max(offsets @ direction))

    seeds = sorted(support_directions(generators.shape[1]), key=gap)[:starts]
    best = min(gap(seed) for seed in seeds)
    for direction in seeds:
        for _ in range(rounds):
            # variables (d, t): min t con (p − q)·d ≤ t y d₀·d = 1
            result = linprog(
                c=np.append(np.zeros(len(direction)), 1.0),
                A_ub=np.hstack([offsets, -np.ones((len(offsets), 1))]),
                b_ub=np.zeros(len(offsets)),
                A_eq=np.append(direction, 0.0)[None, :],
                b_eq=[1.0],
                bounds=(None, None),
                method="highs",
            )
            if result.status != 0:
                break
            direction = result.x[:-1] / np.linalg.norm(result.x[:-1])
            best = min(best, gap(direction))
    return best


# ========== Pirámide ==========


def test_pyramid_edges_lie_on_the_cone():
    normal = np.array([0.0, 0.0, 1.0])
    edges = friction_pyramid(normal, 0.5, sides=6)

    assert edges.shape == (6, 3)
    np.testing.assert_allclose(edges @ normal, 1.0)
    np.testing.assert_allclose(np.linalg.norm(edges - normal, axis=1), 0.5)


def test_frictionless_pyramid_is_the_normal():
    normal = np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(friction_pyramid(normal, 0.0, sides=4), np.tile(normal, (4, 1)))


def test_random_pyramids_are_tight():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        normal = rng.normal(size=3)
        normal /= np.linalg.norm(normal)
        mu = rng.uniform(0.0, 1.0)

        edges = friction_pyramid(normal, mu)
        along = edges @ normal
        tangential = np.linalg.norm(edges - np.outer(along, normal), axis=1)

        np.testing.assert_allclose(tangential, mu * along, atol=1e-9)


def test_pyramid_is_deterministic_for_tilted_normals():
    normal = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
    np.testing.assert_array_equal(friction_pyramid(normal, 0.3), friction_pyramid(normal, 0.3))


def test_pyramid_turns_with_the_body_frame():
    rotation = Pose.from_axis_angle((1.0, 2.0, 0.5), 0.9).rotation
    normal = np.array([0.0, 0.6, 0.8])

    fixed = friction_pyramid(normal, 0.4, frame=np.eye(3))
    turned = friction_pyramid(rotation @ normal, 0.4, frame=rotation)

    np.testing.assert_allclose(turned, fixed @ rotation.T, atol=1e-12)


# ========== Calidad ==========


def test_cube_on_table_is_stable():
    scene = make_scene({"cube": CUBE})
    quality = stability_quality("cube", [], scene, PARAMS)
    assert 0 < quality < INF


def test_frictionless_support_is_degenerate():
    scene = make_scene({"cube": CUBE}, mu=0.0)
    assert stability_quality("cube", [], scene, PARAMS) == 0.0


def test_quality_grows_with_friction():
    qualities = [
        stability_quality("cube", [], make_scene({"cube": CUBE}, mu=mu), PARAMS) for mu in (0.2, 0.5, 1.0)
    ]
    assert qualities[0] > 0
    assert qualities == sorted(qualities)


def test_piece_in_the_air_has_zero_quality(stacked_scene):
    assert stability_quality("top", [], stacked_scene, PARAMS) == 0.0
    assert stability_quality("top", ["bottom"], stacked_scene, PARAMS) > 0.0


def test_larger_force_budget_never_shrinks_the_margin():
    scene = make_scene({"cube": CUBE})
    weight = scene.weight("cube")

    default = stability_quality("cube", [], scene, PARAMS)
    explicit = stability_quality("cube", [], scene, StabilityParams(force_cap=10 * weight))
    doubled = stability_quality("cube", [], scene, StabilityParams(force_cap=20 * weight))

    assert explicit == pytest.approx(default)
    # con la mesa sola el margen lo fija la fricción, no el presupuesto
    assert doubled >= default - 1e-12


def test_tight_force_budget_binds_the_margin():
    scene = make_scene({"cube": CUBE})
    weight = scene.weight("cube")

    tight = stability_quality("cube", [], scene, StabilityParams(force_cap=1.2 * weight))
    loose = stability_quality("cube", [], scene, StabilityParams(force_cap=2.4 * weight))

    # generadores en el plano fz = 1.2: la cara superior queda a 0.2 de −w₀
    assert tight == pytest.approx(0.2, rel=1e-6)
    assert loose > tight


def test_wrench_set_needs_contacts():
    with pytest.raises(NoContacts):
        build_wrench_set([], np.zeros(3), 1.0, make_scene({"cube": CUBE}).friction, PARAMS)


def test_unknown_body(stacked_scene):
    with pytest.raises(UnknownBody):
        stability_quality("ghost", [], stacked_scene, PARAMS)


def test_raw_rows_never_reach_infinity(soma3_scene):
    row = stability_row(["big_l", "zeta", "uve"], soma3_scene, PARAMS)
    assert len(row) == 3
    assert all(0 <= value < INF for value in row)


YAWS = (0.0, 0.3, np.pi / 6, 0.7, 2.0)


@pytest.mark.parametrize(
    "pieces, piece_id, fixed",
    [
        ({"piece": CUBE}, "piece", []),
        ({"piece": L_TRICUBE}, "piece", []),
        ({"bottom": [(0, 0, 0)], "top": [(0, 0, 1)]}, "top", ["bottom"]),
    ],
)
def test_quality_does_not_depend_on_yaw(pieces, piece_id, fixed):
    base = make_scene(pieces, mu=0.3)
    qualities = [
        stability_quality(
            piece_id, fixed, base.transformed(Pose.from_axis_angle((0, 0, 1), yaw, (0.1, -0.05, 0.0))), PARAMS
        )
        for yaw in YAWS
    ]

    assert qualities[0] > 0
    assert max(qualities) - min(qualities) <= 1e-6


# ========== Oráculos ==========


@pytest.mark.parametrize("piece_id", ["big_l", "zeta"])
def test_every_soma3_piece_tips_over_alone(piece_id):
    scene = make_scene({piece_id: SOMA3[piece_id]})
    assert stability_quality(piece_id, [], scene, PARAMS) == 0.0


@pytest.mark.parametrize(
    "cells",
    [
        CUBE,
        [(0, 0, 0), (1, 0, 0), (0, 1, 0)],
        [(0, 0, 0), (1, 0, 0), (2, 0, 0), (1, 0, 1)],
        SOMA3["big_l"],
        [(0, 0, 0), (0, 0, 1), (1, 0, 1)],
    ],
)
def test_single_support_agrees_with_support_polygon(cells):
    scene = make_scene({"piece": cells})
    piece = scene.workpiece("piece")
    support = np.vstack([patch.contact_points for patch in scene.support_patches("piece", [])])

    inside = MultiPoint([tuple(p[:2]) for p in support]).convex_hull.contains(Point(piece.center_of_mass[:2]))
    quality = stability_quality("piece", [], scene, PARAMS)

    assert (quality > 0) == inside


@pytest.mark.parametrize(
    "piece_id, fixed",
    [
        ("big_l", []),
        ("big_l", ["zeta"]),
        ("zeta", ["big_l"]),
        ("uve", ["big_l"]),
        ("uve", ["big_l", "zeta"]),
    ],
)
def test_hull_margin_agrees_with_lp_feasibility(soma3_scene, piece_id, fixed):
    wrenches = _wrenches(soma3_scene, piece_id, fixed)
    quality = stability_quality(piece_id, fixed, soma3_scene, PARAMS)

    if quality > 0:
        assert _lp_feasible(wrenches)
    if not _lp_feasible(wrenches):
        assert quality == 0.0


def test_random_single_supports_agree_with_support_polygon():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(100):
        scene = make_scene({"piece": random_polycube(rng, int(rng.integers(2, 7)))})
        support = np.vstack([patch.contact_points for patch in scene.support_patches("piece", [])])
        polygon = MultiPoint([tuple(p[:2]) for p in support]).convex_hull
        com = Point(scene.workpiece("piece").center_of_mass[:2])
        # banda de frontera fuera
        if polygon.boundary.distance(com) < 1e-5:
            continue

        quality = stability_quality("piece", [], scene, PARAMS)
        assert (quality > 0) == polygon.contains(com)
        checked += 1

    assert checked >= 50


@pytest.mark.slow
def test_random_stacks_agree_with_the_lp_oracle():
    rng = np.random.default_rng(11)
    params = StabilityParams(hull_exact_limit=100_000)
    axes = np.vstack([np.eye(6), -np.eye(6)])
    positives = 0
    for _ in range(100):
        base = random_polycube(rng, int(rng.integers(2, 5)))
        tops = [(x, y, z) for x, y, z in base if (x, y, z + 1) not in base]
        x, y, z = tops[int(rng.integers(len(tops)))]
        top = random_polycube(rng, int(rng.integers(2, 5)), start=(x, y, z + 1), taken=base)
        scene = make_scene({"base": base, "top": top})

        wrenches = _wrenches(scene, "top", ["base"], params)
        generators, query = wrenches.generators, -wrenches.gravity_wrench
        quality = stability_quality("top", ["base"], scene, params)

        if not _lp_contains(generators, query):
            assert quality == 0.0
            continue
        # con los 12 puntos q ± ε·eᵢ dentro cabe una bola de radio ε/√6 > min_margin
        if not all(_lp_contains(generators, query + 1e-4 * axis) for axis in axes):
            assert quality < 1e-4
            continue

        assert quality > 0
        positives += 1
        directions = rng.normal(size=(20, 6))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        assert all(_lp_contains(generators, query + 0.95 * quality * d) for d in directions)
        assert quality <= _facet_gap(generators, query) + 1e-9 <= 1.05 * quality + 1e-9

    assert positives > 0


@pytest.mark.parametrize("factor", [0.1, 7.3])
def test_quality_does_not_depend_on_mass_units(soma3_scene, factor):
    scaled = soma3_scene.with_workpieces(
        [replace(piece, mass=piece.mass * factor) for piece in soma3_scene.workpieces]
    )

    for piece_id, fixed in [("big_l", ["zeta"]), ("zeta", ["big_l"]), ("uve", ["big_l", "zeta"])]:
        original = stability_quality(piece_id, fixed, soma3_scene, PARAMS)
        assert original > 0
        assert stability_quality(piece_id, fixed, scaled, PARAMS) == pytest.approx(original, abs=1e-9)
