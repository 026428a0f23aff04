import math
from pathlib import Path

import numpy as np
import pytest

from robsynth.exprlang import load_model, parse_model
from robsynth.interval import Box
from robsynth.reach import Paving, over_reach

MODEL_PATH = Path(__file__).resolve().parents[1] / "configs" / "bicycle.model"


def _model_1d(expr, xdom=(-10, 10), udom=(-1, 1)):
    return parse_model(
        f"states 1\ninputs 1\ndomain x1 {xdom[0]} {xdom[1]}\n"
        f"domain u1 {udom[0]} {udom[1]}\nf1 = {expr}\n")


def test_identity_map_reach():
    model = _model_1d("x1")
    pav = over_reach(model, Box.from_bounds([0], [1]), (0.0,), 0.0, 0.5, 1.0)
    for t in np.linspace(0, 1, 101):
        assert pav.contains_point((t,))
    hull = pav.hull()
    assert hull.ivs[0].lo >= -0.5 and hull.ivs[0].hi <= 1.5


def test_linear_map_exact_image_oracle():
    model = _model_1d("2*x1")
    pav = over_reach(model, Box.from_bounds([0], [1]), (0.0,), 0.1, 0.05, 2.0)
    # exact image of [0,1] under 2x is [0,2]; with delta it is [-0.1, 2.1]
    for t in np.linspace(-0.1, 2.1, 201):
        assert pav.contains_point((t,))
    hull = pav.hull()
    assert hull.ivs[0].lo >= -0.15 - 1e-12
    assert hull.ivs[0].hi <= 2.15 + 1e-12


def test_reach_requires_positive_eps():
    model = _model_1d("x1")
    with pytest.raises(ValueError, match="eps"):
        over_reach(model, Box.from_bounds([0], [1]), (0.0,), 0.0, 0.0, 1.0)


def test_leaf_count_bound():
    model = _model_1d("x1*x1 / 4")
    cell = Box.from_bounds([0], [2])
    lip = 1.0
    eps = 0.25
    pav = over_reach(model, cell, (0.0,), 0.0, eps, lip)
    bound = math.ceil(cell.width() * 2 * lip / eps) ** 1
    assert len(pav.boxes) <= bound


def test_monotone_refinement_nests():
    model = _model_1d("sin(x1) + x1/2")
    cell = Box.from_bounds([0.0], [1.0])
    coarse = over_reach(model, cell, (0.0,), 0.05, 1.0, 1.5)
    fine = over_reach(model, cell, (0.0,), 0.05, 0.25, 1.5)
    # bisection refines, so every fine box lies inside some coarse box
    for fb in fine.boxes:
        assert any(cb.contains(fb) for cb in coarse.boxes)


def test_escape_flag():
    model = _model_1d("x1", xdom=(0, 1))
    inside = over_reach(model, Box.from_bounds([0.3], [0.5]), (0.0,), 0.0, 1.0, 1.0)
    assert not inside.escapes_domain
    leaking = over_reach(model, Box.from_bounds([0.8], [1.0]), (0.0,), 0.2, 1.0, 1.0)
    assert leaking.escapes_domain


def test_monte_carlo_soundness_2d():
    model = parse_model(
        "states 2\ninputs 1\ndomain x1 -3 3\ndomain x2 -3 3\ndomain u1 -1 1\n"
        "f1 = x1 + 0.3*sin(x2)\nf2 = x2 + 0.3*u1 - 0.1*x1*x2\n")
    cell = Box.from_bounds([0.5, -1.0], [1.0, -0.4])
    delta = 0.07
    pav = over_reach(model, cell, (0.5,), delta, 0.2, 2.0)
    rng = np.random.default_rng(21)
    for _ in range(5000):
        x = cell.sample(rng)
        w = rng.uniform(-delta, delta, size=2)
        y = np.array(model.step(x, (0.5,))) + w
        assert pav.contains_point(tuple(y))


def test_bicycle_cell_soundness():
    model = load_model(MODEL_PATH)
    cell = Box.from_bounds([7.6, 0.4, 1.4], [7.8, 0.6, 1.6])
    u = (0.6, -0.3)
    pav = over_reach(model, cell, u, 0.0, 1.0, 19.0)
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        x = cell.sample(rng)
        assert pav.contains_point(model.step(x, u))


def test_coalesce_preserves_union():
    model = _model_1d("x1")
    pav = over_reach(model, Box.from_bounds([0], [1]), (0.0,), 0.0, 0.1, 1.0)
    fused = pav.coalesced()
    assert len(fused.boxes) <= len(pav.boxes)
    rng = np.random.default_rng(4)
    for _ in range(500):
        p = pav.boxes[rng.integers(len(pav.boxes))].sample(rng)
        assert fused.contains_point(p)
    for _ in range(500):
        p = fused.boxes[rng.integers(len(fused.boxes))].sample(rng)
        assert pav.contains_point(p)
