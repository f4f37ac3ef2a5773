import numpy as np
import pytest

from shadowpolicy.agents import DqfdConfig, GreedyPolicy, collect_demonstrations
from shadowpolicy.agents.dqfd import (
    NStepSegment,
    build_replay_buffer,
    demonstration_agreement,
    dqfd_train,
    hybrid_loss,
    imitated_policy,
    margin_loss,
    margin_loss_gradient,
    n_step_return,
)
from shadowpolicy.agents.demonstrations import split_demonstrations
from shadowpolicy.env import CARTPOLE
from shadowpolicy.ml.approximator import (
    NetworkSpec,
    forward,
    forward_batch,
    init_network,
)

from ..factories import (
    balancing_network,
    constant_network,
    make_demonstrations,
    make_network,
)

FD_STEP = 1e-5


def tiny_config(**kwargs) -> DqfdConfig:
    params = dict(
        network=NetworkSpec(layer_sizes=[4, 8, 2], seed=3),
        pretraining_steps=50,
        interaction_steps=200,
        batch_size=8,
        target_update=20,
        replay_capacity=50,
        n_step=3,
        log_interval=10,
        seed=1,
    )
    params.update(kwargs)
    return DqfdConfig(**params)


@pytest.mark.parametrize(
    "q_row,a_e,margin,expected",
    [
        ([2.0, 1.0], 0, 0.8, 0.0),
        ([1.0, 2.0], 0, 0.8, 1.8),
        ([1.0, 2.0], 1, 0.0, 0.0),
        ([1.0, 1.5, 3.0], 1, 0.5, 2.0),
    ],
)
def test_margin_loss(q_row, a_e, margin, expected):
    assert margin_loss(q_row, a_e, margin) == pytest.approx(expected)


def test_margin_loss_brute_force():
    rng = np.random.default_rng(0)

    for _ in range(1000):
        q_row = rng.normal(size=int(rng.integers(2, 5)))
        a_e = int(rng.integers(len(q_row)))
        margin = float(rng.uniform(0.0, 2.0))

        expected = max(
            q_row[a] + (0.0 if a == a_e else margin) for a in range(len(q_row))
        ) - q_row[a_e]
        value = margin_loss(q_row, a_e, margin)

        assert abs(value - expected) <= 1e-9
        assert value >= 0.0
        others = [a for a in range(len(q_row)) if a != a_e]
        is_zero = all(q_row[a_e] >= q_row[a] + margin for a in others)
        assert (value == 0.0) == is_zero


@pytest.mark.parametrize(
    "q_row,a_e,expected",
    [([1.0, 2.0], 0, [-1.0, 1.0]), ([3.0, 1.0], 0, [0.0, 0.0])],
)
def test_margin_loss_gradient(q_row, a_e, expected):
    assert list(margin_loss_gradient(q_row, a_e, 0.8)) == expected


@pytest.mark.parametrize("a_e,margin", [(2, 0.8), (0, -1.0)])
def test_margin_loss_invalid(a_e, margin):
    with pytest.raises(ValueError):
        margin_loss([1.0, 2.0], a_e, margin)


def segment(rewards, terminal_at=None, state_size=4):
    count = len(rewards)
    terminals = np.zeros(count, dtype=bool)
    if terminal_at is not None:
        terminals[terminal_at] = True
    return NStepSegment(
        rewards=np.asarray(rewards, dtype=np.float64),
        next_states=np.zeros((count, state_size)),
        terminals=terminals,
    )


def test_n_step_return_geometric_series():
    value = n_step_return(segment([1.0] * 10), 10, 0.99, constant_network([0.0, 0.0]))
    assert value == pytest.approx(9.561792499119552, abs=1e-9)


def test_n_step_return_single_zero_step():
    assert n_step_return(segment([0.0]), 1, 0.99, constant_network([0.0, 0.0])) == 0.0


def test_n_step_return_terminal_truncation():
    value = n_step_return(
        segment([1.0] * 10, terminal_at=2), 10, 0.5, constant_network([9.0, 9.0])
    )
    assert value == pytest.approx(1.75)


def test_n_step_return_bootstraps_with_max():
    target = constant_network([2.0, 5.0])

    assert n_step_return(segment([1.0]), 1, 0.9, target) == pytest.approx(5.5)
    assert n_step_return(segment([1.0, 1.0]), 2, 0.9, target) == pytest.approx(
        1.9 + 0.81 * 5.0
    )


def test_n_step_return_brute_force():
    rng = np.random.default_rng(4)

    for _ in range(1000):
        length = int(rng.integers(1, 12))
        n = int(rng.integers(1, 12))
        gamma = float(rng.uniform(0.1, 1.0))
        rewards = rng.normal(size=length)
        terminal_at = int(rng.integers(length)) if rng.random() < 0.5 else None
        values = rng.normal(size=2)

        k = min(n, length)
        if terminal_at is not None and terminal_at < k:
            k = terminal_at + 1
            bootstrap = 0.0
        else:
            bootstrap = gamma ** k * values.max()
        expected = sum(gamma ** i * rewards[i] for i in range(k)) + bootstrap

        value = n_step_return(
            segment(rewards, terminal_at), n, gamma, constant_network(values)
        )
        assert abs(value - expected) <= 1e-9


def demo_batch(cfg: DqfdConfig, seed: int = 0, lengths=(2,)):
    demos = make_demonstrations(list(lengths), seed=seed)
    buffer = build_replay_buffer(demos, cfg)
    return buffer.take(np.arange(demos.count))


def test_hybrid_loss_collapses_to_one_step_error():
    cfg = tiny_config(lambda_nstep=0.0, lambda_imitation=0.0, lambda_l2=0.0)
    behavior = init_network(cfg.network)
    target = init_network(NetworkSpec(layer_sizes=[4, 8, 2], seed=9))
    batch = demo_batch(cfg, lengths=(3, 2))

    result = hybrid_loss(behavior, target, batch, cfg)

    q_taken = forward_batch(behavior, batch.states)[np.arange(5), batch.actions]
    best = np.argmax(forward_batch(behavior, batch.next_states), axis=1)
    bootstrap = forward_batch(target, batch.next_states)[np.arange(5), best]
    targets = np.where(
        batch.terminals, batch.rewards, batch.rewards + cfg.gamma * bootstrap
    )
    assert result.loss == pytest.approx(np.mean((q_taken - targets) ** 2), abs=1e-12)
    assert np.allclose(result.td_errors, np.abs(q_taken - targets))


def test_hybrid_loss_zero_network():
    cfg = tiny_config(margin=0.0)
    net = make_network([np.zeros((8, 4)), np.zeros((2, 8))])
    batch = demo_batch(cfg)
    batch.rewards = np.zeros(len(batch))
    batch.nstep_rewards = np.zeros(len(batch))

    result = hybrid_loss(net, net.copy(), batch, cfg)

    assert result.loss == 0.0


def test_hybrid_loss_is_linear_in_weights():
    behavior = init_network(NetworkSpec(layer_sizes=[4, 8, 2], seed=2))
    target = init_network(NetworkSpec(layer_sizes=[4, 8, 2], seed=5))
    cfg = tiny_config(lambda_nstep=0.5, lambda_imitation=2.0, lambda_l2=0.1)

    result = hybrid_loss(behavior, target, demo_batch(cfg, lengths=(4,)), cfg)
    parts = result.components

    assert result.loss == pytest.approx(
        parts["dq"] + 0.5 * parts["n_step"] + 2.0 * parts["margin"] + 0.1 * parts["l2"]
    )
    assert parts["l2"] == pytest.approx(sum(np.sum(w * w) for w in behavior.weights))


def test_margin_term_skips_self_generated_entries():
    cfg = tiny_config(lambda_imitation=1.0, margin=5.0)
    behavior = init_network(cfg.network)
    batch = demo_batch(cfg)
    batch.is_demo = np.zeros(len(batch), dtype=bool)

    result = hybrid_loss(behavior, behavior.copy(), batch, cfg)

    assert result.components["margin"] == 0.0


def _is_smooth(net, batch, margin) -> bool:
    """Whether no kink or argmax switch lies within reach of a small step."""
    for states in (batch.states, batch.next_states):
        a = states
        for w, b in zip(net.weights[:-1], net.biases[:-1]):
            z = a @ w.T + b
            if np.any(np.abs(z) < 1e-3):
                return False
            a = np.maximum(z, 0.0)

    next_q = np.sort(forward_batch(net, batch.next_states), axis=1)
    if np.any(next_q[:, -1] - next_q[:, -2] < 1e-3):
        return False

    q = forward_batch(net, batch.states)
    for row, a_e in zip(q, batch.actions):
        scores = np.sort(row + margin - margin * (np.arange(len(row)) == a_e))
        if scores[-1] - scores[-2] < 1e-3:
            return False

    return True


def test_hybrid_loss_matches_finite_differences():
    cfg = tiny_config(lambda_nstep=0.7, lambda_imitation=1.3, lambda_l2=0.05)
    target = init_network(NetworkSpec(layer_sizes=[4, 8, 2], seed=100))

    checked = 0
    for seed in range(20):
        behavior = init_network(NetworkSpec(layer_sizes=[4, 8, 2], seed=seed))
        batch = demo_batch(cfg, seed=seed)
        if not _is_smooth(behavior, batch, cfg.margin):
            continue

        grads = hybrid_loss(behavior, target, batch, cfg).grads

        for param, grad in zip(behavior.weights + behavior.biases, grads.arrays()):
            numeric = np.zeros_like(param)
            for idx in np.ndindex(param.shape):
                original = param[idx]
                param[idx] = original + FD_STEP
                upper = hybrid_loss(behavior, target, batch, cfg).loss
                param[idx] = original - FD_STEP
                lower = hybrid_loss(behavior, target, batch, cfg).loss
                param[idx] = original
                numeric[idx] = (upper - lower) / (2 * FD_STEP)

            np.testing.assert_allclose(grad, numeric, rtol=1e-6, atol=1e-7)
        checked += 1

    assert checked >= 5


def test_hybrid_loss_rejects_empty_batch():
    cfg = tiny_config()
    batch = demo_batch(cfg)
    empty = batch.__class__(
        states=batch.states[:0],
        actions=batch.actions[:0],
        rewards=batch.rewards[:0],
        next_states=batch.next_states[:0],
        terminals=batch.terminals[:0],
        indices=batch.indices[:0],
    )
    net = init_network(cfg.network)

    with pytest.raises(ValueError):
        hybrid_loss(net, net, empty, cfg)


def test_no_training_keeps_initialisation():
    cfg = tiny_config(pretraining_steps=0, interaction_steps=0)
    result = dqfd_train(make_demonstrations([5]), cfg)

    initial = init_network(cfg.network)
    for w, w0 in zip(result.network.weights, initial.weights):
        assert np.array_equal(w, w0)
    assert result.log == []
    assert result.env_steps == 0


def test_pretraining_does_not_touch_environment(mocker):
    spy = mocker.spy(CARTPOLE, "step")
    cfg = tiny_config(interaction_steps=0)

    result = dqfd_train(make_demonstrations([5, 5]), cfg)

    assert spy.call_count == 0
    assert result.env_steps == 0
    assert [r.step for r in result.log] == [10, 20, 30, 40, 50]
    assert all(0.0 <= r.agreement <= 1.0 for r in result.log)


def test_interaction_keeps_demonstrations_intact():
    demos = make_demonstrations([6, 4])
    cfg = tiny_config()

    result = dqfd_train(demos, cfg, keep_buffer=True)

    assert result.env_steps == 200
    assert result.buffer.self_count == 50
    kept = result.buffer.take(np.arange(demos.count))
    assert np.array_equal(kept.states, demos.states)
    assert np.array_equal(kept.actions, demos.actions)
    assert np.array_equal(kept.next_states, demos.next_states)
    assert len(result.log) == 25


def test_training_is_deterministic():
    demos = make_demonstrations([6, 4])
    first = dqfd_train(demos, tiny_config())
    second = dqfd_train(demos, tiny_config())

    assert first.log == second.log
    for w1, w2 in zip(first.network.weights, second.network.weights):
        assert np.array_equal(w1, w2)


def test_imitated_policy_is_greedy():
    q_tilde = constant_network([1.0, 1.0])
    policy = imitated_policy(q_tilde)

    assert policy.act(np.zeros(4)) == 0
    assert isinstance(policy, GreedyPolicy)


def test_demonstration_agreement():
    demos = make_demonstrations([4])
    demos.actions[:] = 1

    assert demonstration_agreement(constant_network([0.0, 1.0]), demos) == 1.0
    assert demonstration_agreement(constant_network([1.0, 0.0]), demos) == 0.0


@pytest.mark.slow
def test_imitation_reaches_holdout_agreement():
    victim = GreedyPolicy(balancing_network())
    demos = collect_demonstrations(victim, 5000, seed=0)
    train, holdout = split_demonstrations(demos, 0.2, seed=0)

    result = dqfd_train(train, DqfdConfig(interaction_steps=0))

    assert demonstration_agreement(result.network, holdout) >= 0.85
    assert forward(result.network, holdout.states[0]).shape == (2,)
