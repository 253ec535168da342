import math

import numpy as np
import pytest

from groupsched.errors import TrainerError
from groupsched.scheduler import ScheduleMode, TailPolicy, build_schedule
from groupsched.trainer import (
    ComparisonReport,
    ToyExample,
    ToyModel,
    TrainConfig,
    batch_loss,
    compare_runs,
    evaluate,
    gradient,
    save_run,
    synthesize_multitask,
    train,
)


def _random_batch(rng, n, d, c, group="g"):
    return [
        ToyExample(id=f"e{i}", features=rng.normal(size=d),
                   label=int(rng.integers(0, c)), group=group)
        for i in range(n)
    ]


# ------------------------------------------------------------------ batch_loss

def test_zero_model_loss_is_log_num_classes():
    rng = np.random.default_rng(0)
    for c in (2, 4, 7):
        batch = _random_batch(rng, 10, 5, c)
        model = ToyModel.zeros(c, 5)
        assert batch_loss(model, batch) == pytest.approx(math.log(c), abs=1e-13)


def test_loss_is_invariant_under_batch_duplication():
    rng = np.random.default_rng(1)
    batch = _random_batch(rng, 6, 4, 3)
    model = ToyModel.gaussian(3, 4, seed=5)
    assert batch_loss(model, batch + batch) == pytest.approx(
        batch_loss(model, batch), abs=1e-12
    )


def test_loss_is_invariant_under_batch_permutation():
    rng = np.random.default_rng(2)
    batch = _random_batch(rng, 8, 4, 3)
    model = ToyModel.gaussian(3, 4, seed=5)
    shuffled = [batch[i] for i in rng.permutation(len(batch))]
    assert batch_loss(model, shuffled) == pytest.approx(
        batch_loss(model, batch), abs=1e-12
    )
    dW0, db0 = gradient(model, batch)
    dW1, db1 = gradient(model, shuffled)
    np.testing.assert_allclose(dW0, dW1, atol=1e-12)
    np.testing.assert_allclose(db0, db1, atol=1e-12)


def test_loss_is_always_non_negative():
    rng = np.random.default_rng(3)
    for _ in range(20):
        batch = _random_batch(rng, int(rng.integers(1, 10)), 3, 4)
        model = ToyModel.gaussian(4, 3, seed=int(rng.integers(100)), scale=2.0)
        assert batch_loss(model, batch) >= 0.0


def test_empty_batch_rejected():
    with pytest.raises(TrainerError):
        batch_loss(ToyModel.zeros(2, 2), [])


def test_label_out_of_model_range_rejected():
    ex = ToyExample(id="a", features=np.zeros(2), label=5, group="g")
    with pytest.raises(TrainerError):
        batch_loss(ToyModel.zeros(3, 2), [ex])


# -------------------------------------------------------------------- gradient

def _fd_gradient(model, batch, eps=1e-5):
    """Central finite differences, parameter by parameter."""
    dW = np.zeros_like(model.weights)
    db = np.zeros_like(model.bias)
    for idx in np.ndindex(*model.weights.shape):
        up, down = model.copy(), model.copy()
        up.weights[idx] += eps
        down.weights[idx] -= eps
        dW[idx] = (batch_loss(up, batch) - batch_loss(down, batch)) / (2 * eps)
    for j in range(model.bias.shape[0]):
        up, down = model.copy(), model.copy()
        up.bias[j] += eps
        down.bias[j] -= eps
        db[j] = (batch_loss(up, batch) - batch_loss(down, batch)) / (2 * eps)
    return dW, db


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    for _ in range(10):
        batch = _random_batch(rng, int(rng.integers(1, 8)), 3, 4)
        model = ToyModel.gaussian(4, 3, seed=int(rng.integers(100)), scale=1.0)
        dW, db = gradient(model, batch)
        fW, fb = _fd_gradient(model, batch)
        scale = max(np.max(np.abs(fW)), np.max(np.abs(fb)), 1e-12)
        assert np.max(np.abs(dW - fW)) / scale <= 1e-4
        assert np.max(np.abs(db - fb)) / scale <= 1e-4


def test_zero_model_balanced_symmetric_batch_has_zero_bias_gradient():
    # one example per class, all with the same features: softmax is uniform,
    # so P - onehot sums to zero per class across the batch
    feats = np.array([1.0, -2.0, 0.5])
    batch = [ToyExample(id=f"e{c}", features=feats, label=c, group="g")
             for c in range(4)]
    _, db = gradient(ToyModel.zeros(4, 3), batch)
    np.testing.assert_allclose(db, 0.0, atol=1e-15)


def test_gradient_step_is_a_descent_direction():
    rng = np.random.default_rng(5)
    for trial in range(10):
        batch = _random_batch(rng, 6, 4, 3)
        model = ToyModel.gaussian(3, 4, seed=trial, scale=1.0)
        before = batch_loss(model, batch)
        dW, db = gradient(model, batch)
        norm = max(np.max(np.abs(dW)), np.max(np.abs(db)))
        if norm <= 1e-8:
            continue
        eta = 1e-3
        for _ in range(20):
            stepped = model.copy()
            stepped.weights -= eta * dW
            stepped.bias -= eta * db
            if batch_loss(stepped, batch) < before:
                break
            eta /= 2
        else:
            pytest.fail(f"no decrease found on trial {trial}")


# ------------------------------------------------------------------- synthesis

def test_synthesize_is_seed_deterministic():
    a, ga = synthesize_multitask(3, 10, 4, 3, 0.5, seed=9)
    b, gb = synthesize_multitask(3, 10, 4, 3, 0.5, seed=9)
    assert ga == gb
    assert all(
        x.id == y.id and x.label == y.label and np.array_equal(x.features, y.features)
        for x, y in zip(a, b)
    )


def test_synthesize_zero_noise_puts_examples_on_centers():
    examples, _ = synthesize_multitask(2, 12, 5, 3, 0.0, seed=1)
    by_cluster = {}
    for ex in examples:
        key = (ex.group, ex.label)
        by_cluster.setdefault(key, []).append(ex.features)
    for feats in by_cluster.values():
        for f in feats[1:]:
            assert np.array_equal(f, feats[0])


def test_synthesize_grouping_shape():
    examples, grouped = synthesize_multitask(3, 100, 4, 4, 0.1, seed=0)
    assert len(examples) == 300
    assert grouped.labels == ("task0", "task1", "task2")
    assert all(len(ids) == 100 for ids in grouped.groups.values())


def test_synthesize_rejects_bad_sizes():
    with pytest.raises(TrainerError):
        synthesize_multitask(0, 5, 4, 3, 0.0, seed=0)
    with pytest.raises(TrainerError):
        synthesize_multitask(1, 5, 4, 1, 0.0, seed=0)
    with pytest.raises(TrainerError):
        synthesize_multitask(1, 5, 4, 3, -0.5, seed=0)


# ----------------------------------------------------------------------- train

def test_lr_zero_leaves_model_at_init_and_trace_flat():
    examples, grouped = synthesize_multitask(2, 20, 4, 3, 0.0, seed=3)
    schedule = build_schedule(grouped, 5, epochs=2, seed=3)
    run = train(schedule, examples, TrainConfig(learning_rate=0.0))
    np.testing.assert_array_equal(run.final_model.weights, np.zeros((3, 4)))
    # zero model all steps: every loss is exactly ln C
    assert all(l == pytest.approx(math.log(3), abs=1e-13) for l in run.loss_trace)


def test_train_trace_is_reproducible():
    examples, grouped = synthesize_multitask(2, 30, 4, 3, 0.2, seed=8)
    schedule = build_schedule(grouped, 4, epochs=2, seed=8)
    cfg = TrainConfig(learning_rate=0.2)
    assert train(schedule, examples, cfg).loss_trace == \
        train(schedule, examples, cfg).loss_trace


def test_train_records_one_loss_per_step():
    examples, grouped = synthesize_multitask(2, 13, 4, 3, 0.2, seed=8)
    schedule = build_schedule(grouped, 4, epochs=2, seed=8)
    run = train(schedule, examples, TrainConfig())
    assert len(run.loss_trace) == len(schedule.steps)
    assert [m[1] for m in run.trace_meta] == [s.step for s in schedule.steps]


def test_train_fails_fast_on_unresolvable_id():
    examples, grouped = synthesize_multitask(1, 6, 3, 2, 0.0, seed=0)
    schedule = build_schedule(grouped, 2, epochs=1, seed=0)
    with pytest.raises(TrainerError) as err:
        train(schedule, examples[:-1], TrainConfig())
    assert "task0-0005" in str(err.value)


def test_reaches_full_accuracy_on_separable_data():
    examples, grouped = synthesize_multitask(3, 120, 8, 4, 0.0, seed=7)
    schedule = build_schedule(grouped, 8, epochs=3, seed=7)
    run = train(schedule, examples, TrainConfig(learning_rate=0.5))
    assert all(acc == 1.0 for acc in run.per_task_accuracy.values())


def test_save_run_layout(tmp_path):
    examples, grouped = synthesize_multitask(2, 10, 3, 2, 0.0, seed=4)
    schedule = build_schedule(grouped, 4, epochs=1, seed=4)
    run = train(schedule, examples, TrainConfig())
    path = tmp_path / "run.jsonl"
    save_run(run, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + len(run.loss_trace)
    assert '"mode":"CommonIT"' in lines[0]
    assert '"loss":' in lines[1]


# ---------------------------------------------------------------- compare_runs

def _two_runs(mode_b=ScheduleMode.VANILLA, lr_b=0.3):
    examples, grouped = synthesize_multitask(2, 24, 4, 3, 0.1, seed=6)
    sa = build_schedule(grouped, 4, epochs=2, seed=6)
    sb = build_schedule(grouped, 4, epochs=2, seed=6, mode=mode_b)
    ra = train(sa, examples, TrainConfig(learning_rate=0.3))
    rb = train(sb, examples, TrainConfig(learning_rate=lr_b))
    return ra, rb


def test_compare_run_with_itself_is_all_zero_deltas():
    ra, _ = _two_runs()
    report = compare_runs(ra, ra)
    assert report.loss_gap == 0.0
    assert all(a == b for a, b in report.per_task_accuracy.values())


def test_untrained_run_loses_to_trained_run_on_separable_data():
    examples, grouped = synthesize_multitask(2, 40, 6, 3, 0.0, seed=2)
    schedule = build_schedule(grouped, 4, epochs=3, seed=2)
    frozen = train(schedule, examples, TrainConfig(learning_rate=0.0))
    trained = train(schedule, examples, TrainConfig(learning_rate=0.5))
    report = compare_runs(trained, frozen)
    assert report.final_loss_a < report.final_loss_b


def test_compare_reports_both_curves_and_gap_sign():
    ra, rb = _two_runs()
    report = compare_runs(ra, rb)
    assert report.curve_a == ra.loss_trace
    assert report.curve_b == rb.loss_trace
    obj = report.to_json()
    assert {"final_loss_a", "final_loss_b", "loss_gap", "curves"} <= obj.keys()


def test_compare_rejects_different_datasets():
    ra, _ = _two_runs()
    examples, grouped = synthesize_multitask(2, 24, 4, 3, 0.1, seed=99)
    other = train(build_schedule(grouped, 4, epochs=1, seed=1), examples,
                  TrainConfig())
    with pytest.raises(TrainerError):
        compare_runs(ra, other)


def test_evaluate_reports_per_group_accuracy():
    examples, _ = synthesize_multitask(2, 8, 3, 2, 0.0, seed=1)
    accs = evaluate(ToyModel.zeros(2, 3), examples)
    assert set(accs) == {"task0", "task1"}
    for v in accs.values():
        assert 0.0 <= v <= 1.0
