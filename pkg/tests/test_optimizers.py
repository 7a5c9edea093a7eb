import math

import numpy as np
import pytest

from monet.archive import Archive
from monet.benchmarks import get_benchmark
from monet.graph import build_graph
from monet.operators import OperatorParams
from monet.optimizers import (
    Evaluator,
    FitnessEvaluationError,
    RunConfig,
    individual_learning,
    read_trace_csv,
    run_monet,
    run_mtme,
    social_learning,
)
from monet.spaces import BoundedSpace, sample_cvt_tasks, sample_uniform_tasks

UNIT1 = BoundedSpace([0.0], [1.0])
ARM = get_benchmark("arm")


@pytest.fixture(scope="module")
def arm_tasks():
    return sample_uniform_tasks(ARM.task_space, 60, seed=0)


def peak(theta, tau):
    """Unimodal toy fitness with its optimum at the task value."""
    return -abs(float(theta[0]) - float(tau[0]))


def _eval(fitness, tasks, archive, seed=0):
    return Evaluator(fitness, np.asarray(tasks, dtype=float).reshape(len(tasks), -1), archive, seed, 10**9)


# ---------------------------------------------------------------- config

def test_config_defaults():
    cfg = RunConfig()
    assert cfg.p_ind == 0.3 and cfg.neighbor_percentage == 0.05
    assert cfg.operators.eta_c == 10.0
    assert cfg.resolved_checkpoint_every() == 1000
    assert cfg.resolved_k_init(5000) == 5000


def test_config_roundtrip_and_validation():
    cfg = RunConfig(budget=500, p_ind=0.7, neighborhood="random", strategy="random", seed=3)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    for bad in ({"budget": 0}, {"p_ind": 1.5}, {"neighbor_percentage": 0.0}, {"k_init": -1}):
        with pytest.raises(ValueError):
            RunConfig(**bad)
    with pytest.raises(ValueError):
        RunConfig.from_dict({"budgett": 3})


# ---------------------------------------------------------------- learning steps

def test_individual_learning_fills_empty_node():
    arc = Archive(1, 1)
    ev = _eval(peak, [[0.3]], arc)
    individual_learning(0, arc, ev, UNIT1, 0.1, np.random.default_rng(0))
    assert arc.filled[0] and arc.eval_count == 1
    assert arc.fitness[0] == peak(arc.solutions[0], [0.3])


def test_individual_learning_rejects_worse_child():
    arc = Archive(1, 1)
    arc.try_insert(0, np.array([0.3]), 0.0)
    ev = _eval(peak, [[0.3]], arc)
    # any move away from the optimum is worse
    individual_learning(0, arc, ev, UNIT1, 0.1, np.random.default_rng(1))
    assert arc.eval_count == 1
    assert arc.solutions[0, 0] == 0.3 and arc.fitness[0] == 0.0


def test_individual_learning_hill_climb():
    arc = Archive(1, 1)
    arc.try_insert(0, np.array([0.9]), peak([0.9], [0.4]))
    ev = _eval(peak, [[0.4]], arc)
    rng = np.random.default_rng(2)
    history = []
    for _ in range(1000):
        individual_learning(0, arc, ev, UNIT1, 0.1, rng)
        history.append(arc.fitness[0])
    assert np.all(np.diff(history) >= 0)
    assert abs(arc.solutions[0, 0] - 0.4) < 0.01


def test_social_learning_copies_and_reevaluates():
    arc = Archive(2, 1)
    arc.try_insert(1, np.array([0.8]), 123.0)  # stored fitness belongs to task 1
    ev = _eval(peak, [[0.2], [0.8]], arc)
    assert social_learning(0, 1, arc, ev, UNIT1, 10.0, np.random.default_rng(0))
    assert arc.solutions[0, 0] == 0.8
    assert arc.fitness[0] == pytest.approx(peak([0.8], [0.2]))


def test_social_learning_skips_empty_neighbour():
    arc = Archive(2, 1)
    arc.try_insert(0, np.array([0.5]), 0.1)
    before = arc.snapshot()
    ev = _eval(peak, [[0.2], [0.8]], arc)
    assert not social_learning(0, 1, arc, ev, UNIT1, 10.0, np.random.default_rng(0))
    assert arc.eval_count == 0
    np.testing.assert_array_equal(arc.solutions, before.solutions)


def test_social_learning_both_empty_uses_random_solution():
    arc = Archive(2, 1)
    ev = _eval(peak, [[0.2], [0.8]], arc)
    assert social_learning(0, 1, arc, ev, UNIT1, 10.0, np.random.default_rng(0))
    assert arc.filled[0] and not arc.filled[1]


def test_social_learning_identical_elites_tie_admits():
    arc = Archive(2, 2)
    space = BoundedSpace.box(0.0, 1.0, 2)
    theta = np.array([0.25, 0.75])
    f = lambda s, t: 1.0  # noqa: E731
    arc.try_insert(0, theta, 1.0)
    arc.try_insert(1, theta, 1.0)
    ev = _eval(f, [[0.0], [1.0]], arc)
    assert social_learning(0, 1, arc, ev, space, 10.0, np.random.default_rng(0))
    np.testing.assert_array_equal(arc.solutions[0], theta)
    assert arc.eval_count == 1


# ---------------------------------------------------------------- full runs

def test_budget_is_exact_and_curve_grid(arm_tasks):
    tr = run_monet(arm_tasks, ARM, RunConfig(budget=3000, seed=1))
    assert tr.final_archive.eval_count == 3000
    assert tr.eval_counts.sum() == 3000
    np.testing.assert_array_equal(tr.evals, np.arange(3, 3001, 3))
    assert tr.curve.shape == (1000,)


def test_pure_individual_learning_has_no_crossover(arm_tasks):
    tr = run_monet(arm_tasks, ARM, RunConfig(budget=2000, p_ind=1.0, seed=2))
    assert tr.stats.get("sbx", 0) == 0 and tr.stats.get("copy", 0) == 0
    assert tr.stats["mutation"] + tr.stats.get("random_init", 0) == 2000 - 60


def test_pure_social_learning_on_full_archive(arm_tasks):
    n = arm_tasks.n
    arc = Archive(n, 10)
    rng = np.random.default_rng(3)
    for i in range(n):
        arc.try_insert(i, rng.random(10), 0.0)
    tr = run_monet(arm_tasks, ARM, RunConfig(budget=1500, p_ind=0.0, k_init=0, seed=3), archive=arc)
    assert tr.stats["sbx"] == 1500
    assert tr.draw_counts.sum() == 1500


@pytest.mark.parametrize("strategy", ["random", "best_fitness"])
@pytest.mark.parametrize("kind", ["closest", "random", "distance_proportional"])
def test_monet_archive_monotone_every_evaluation(arm_tasks, strategy, kind):
    n = arm_tasks.n
    arc = Archive(n, 10)
    prev = [arc.fitness.copy()]

    def watched(theta, tau):
        assert np.all(arc.fitness >= prev[0])
        prev[0] = arc.fitness.copy()
        return ARM(theta, tau)

    cfg = RunConfig(budget=1500, k_init=20, strategy=strategy, neighborhood=kind, neighbor_percentage=0.1, seed=4)
    tr = run_monet(arm_tasks, watched, cfg, solution_space=ARM.solution_space, archive=arc)
    assert arc.eval_count == 1500
    assert np.all(np.diff(tr.curve) >= -1e-12)


def test_monet_deterministic(arm_tasks):
    cfg = RunConfig(budget=2000, seed=5, neighborhood="distance_proportional", strategy="random")
    a = run_monet(arm_tasks, ARM, cfg)
    b = run_monet(arm_tasks, ARM, cfg)
    c = run_monet(arm_tasks, ARM, cfg.replace(seed=6))
    np.testing.assert_array_equal(a.checkpoints, b.checkpoints)
    np.testing.assert_array_equal(a.final_archive.solutions, b.final_archive.solutions)
    assert not np.array_equal(a.checkpoints, c.checkpoints)


def test_prebuilt_graph_gives_same_run(arm_tasks):
    cfg = RunConfig(budget=1000, seed=7)
    g = build_graph(arm_tasks, cfg.neighbor_percentage, cfg.neighborhood)
    np.testing.assert_array_equal(run_monet(arm_tasks, ARM, cfg).checkpoints,
                                  run_monet(arm_tasks, ARM, cfg, graph=g).checkpoints)


def test_random_strategy_counts_skips(arm_tasks):
    tr = run_monet(arm_tasks, ARM, RunConfig(budget=400, k_init=5, strategy="random", seed=8))
    assert tr.final_archive.eval_count == 400
    # skipped steps draw a task but spend nothing
    assert tr.draw_counts.sum() == 400 + tr.stats.get("skipped", 0)


def test_mtme_one_evaluation_per_step(arm_tasks):
    tr = run_mtme(arm_tasks, ARM, RunConfig(budget=1000, k_init=10, seed=9))
    assert tr.final_archive.eval_count == 1000
    assert tr.draw_counts.sum() == 1000
    assert tr.stats["iso_line_dd"] == 990


def test_mtme_single_task_is_gaussian_hill_climbing():
    cfg = RunConfig(budget=400, k_init=1, seed=10, operators=OperatorParams(iso_sigma1=0.01))
    tr = run_mtme(np.array([[0.4]]), peak, cfg, solution_space=UNIT1)
    assert tr.stats["iso_line_dd"] == 399
    assert abs(tr.final_archive.solutions[0, 0] - 0.4) < 0.01


def test_mtme_with_no_initialisation_falls_back_to_random():
    tr = run_mtme(np.array([[0.4], [0.6]]), peak, RunConfig(budget=10, k_init=0, seed=11), solution_space=UNIT1)
    assert tr.stats["random_fallback"] == 1 and tr.stats["iso_line_dd"] == 9


def test_mtme_deterministic(arm_tasks):
    cfg = RunConfig(budget=1500, seed=12)
    np.testing.assert_array_equal(run_mtme(arm_tasks, ARM, cfg).checkpoints, run_mtme(arm_tasks, ARM, cfg).checkpoints)


@pytest.mark.parametrize("runner", [run_monet, run_mtme])
def test_failing_fitness_aborts(runner, arm_tasks):
    def bad(theta, tau):
        return math.nan

    with pytest.raises(FitnessEvaluationError, match="non-finite"):
        runner(arm_tasks, bad, RunConfig(budget=100), solution_space=ARM.solution_space)

    def boom(theta, tau):
        raise RuntimeError("simulator crashed")

    with pytest.raises(FitnessEvaluationError, match="evaluation 0"):
        runner(arm_tasks, boom, RunConfig(budget=100), solution_space=ARM.solution_space)


def test_bare_callable_needs_space(arm_tasks):
    with pytest.raises(ValueError):
        run_monet(arm_tasks, peak, RunConfig(budget=10))


def test_stochastic_benchmark_gets_per_evaluation_seed():
    cart = get_benchmark("cartpole")
    tasks = sample_cvt_tasks(cart.task_space, 8, oversample=500, seed=0)
    a = run_monet(tasks, cart, RunConfig(budget=80, seed=3))
    b = run_monet(tasks, cart, RunConfig(budget=80, seed=3))
    np.testing.assert_array_equal(a.checkpoints, b.checkpoints)
    fit = a.final_archive.fitness
    assert np.all((fit >= 0) & (fit <= 1000)) and np.allclose(fit * 10, np.round(fit * 10))


def test_trace_csv_roundtrip(tmp_path, arm_tasks):
    tr = run_monet(arm_tasks, ARM, RunConfig(budget=500, seed=13))
    path = tr.to_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(read_trace_csv(path), tr.checkpoints)
    assert path.read_text().splitlines()[0] == "eval_count,mean_fitness"
