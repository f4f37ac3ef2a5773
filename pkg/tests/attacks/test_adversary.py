import numpy as np
import pytest

from shadowpolicy.agents import (
    BlackBoxPolicy,
    DqnConfig,
    GreedyPolicy,
    RandomPolicy,
)
from shadowpolicy.agents.dqn import evaluate_policy
from shadowpolicy.attacks import (
    AdversaryAction,
    AdversaryConfig,
    AdversaryEnv,
    AdversaryEnvState,
    adversary_env_step,
    adversary_step_reward,
    evaluate_attack,
    train_adversary,
    worst_action,
)
from shadowpolicy.env import CARTPOLE
from shadowpolicy.exceptions import AccountingError, InvalidSpecError
from shadowpolicy.ml.approximator import NetworkSpec

from ..factories import balancing_network, constant_network

STATE = np.zeros(4)
NEVER_PERTURB = constant_network([1.0, 0.0])
ALWAYS_PERTURB = constant_network([0.0, 1.0])


def tiny_adversary_config(**kwargs) -> AdversaryConfig:
    dqn = DqnConfig(
        network=NetworkSpec(layer_sizes=[4, 8, 2], seed=2),
        replay_capacity=200,
        batch_size=8,
        target_update=50,
        total_steps=300,
        learning_starts=50,
        seed=6,
    )
    return AdversaryConfig(dqn=dqn, **kwargs)


@pytest.mark.parametrize(
    "values,expected",
    [([1.0, 2.0], 0), ([2.0, 2.0], 0), ([3.0, -1.0, 0.5], 1)],
)
def test_worst_action(values, expected):
    assert worst_action(constant_network(values), STATE) == expected


def test_worst_action_differs_from_greedy():
    rng = np.random.default_rng(0)
    for _ in range(100):
        values = rng.normal(size=2)
        net = constant_network(values)
        assert worst_action(net, STATE) != GreedyPolicy(net).act(STATE)


@pytest.mark.parametrize(
    "to_perturb,terminal,cost,r_max,r_t,expected",
    [
        (False, False, 1.0, 500.0, 10.0, 0.0),
        (True, False, 1.0, 500.0, 10.0, -1.0),
        (False, True, 1.0, 500.0, 10.0, 490.0),
        (True, True, 2.0, 500.0, 500.0, -2.0),
    ],
)
def test_adversary_step_reward(to_perturb, terminal, cost, r_max, r_t, expected):
    assert adversary_step_reward(to_perturb, terminal, cost, r_max, r_t) == expected


def test_adversary_step_reward_brute_force():
    rng = np.random.default_rng(3)

    for _ in range(1000):
        to_perturb = bool(rng.integers(2))
        terminal = bool(rng.integers(2))
        cost = float(rng.uniform(0.0, 5.0))
        r_max = float(rng.uniform(1.0, 1000.0))
        r_t = float(rng.uniform(0.0, r_max))

        expected = 0.0
        if to_perturb:
            expected = -cost
        if terminal:
            expected = expected + (r_max - r_t)

        value = adversary_step_reward(to_perturb, terminal, cost, r_max, r_t)
        assert abs(value - expected) <= 1e-9


@pytest.mark.parametrize("r_t", [-1.0, 501.0])
def test_adversary_step_reward_rejects_score(r_t):
    with pytest.raises(ValueError):
        adversary_step_reward(False, True, 1.0, 500.0, r_t)


def test_perturb_step_plays_worst_action(mocker):
    victim = mocker.Mock()
    state = AdversaryEnvState(env_state=CARTPOLE.reset(0))
    q_tilde = constant_network([5.0, 1.0])

    result = adversary_env_step(state, AdversaryAction.perturb, victim, q_tilde)

    victim.act.assert_not_called()
    assert result.reward == -1.0
    assert result.next_state.perturbations == 1
    assert result.next_state.score == 1.0
    assert result.next_state.env_state == CARTPOLE.step(state.env_state, 1).next_state


def test_no_perturb_step_plays_victim_action():
    state = AdversaryEnvState(env_state=CARTPOLE.reset(0))
    victim = GreedyPolicy(constant_network([1.0, 0.0]))

    result = adversary_env_step(
        state, AdversaryAction.no_perturb, victim, constant_network([0.0, 1.0])
    )

    assert result.reward == 0.0
    assert result.next_state.perturbations == 0
    assert result.next_state.env_state == CARTPOLE.step(state.env_state, 0).next_state


def test_perturbation_matching_victim_only_costs():
    state = AdversaryEnvState(env_state=CARTPOLE.reset(1))
    victim = GreedyPolicy(constant_network([1.0, 0.0]))
    q_tilde = constant_network([0.0, 1.0])

    perturbed = adversary_env_step(state, AdversaryAction.perturb, victim, q_tilde)
    untouched = adversary_env_step(state, AdversaryAction.no_perturb, victim, q_tilde)

    assert perturbed.next_state.env_state == untouched.next_state.env_state
    assert perturbed.reward == untouched.reward - 1.0


def test_terminal_step_collects_regret():
    env_state = CARTPOLE.reset(0)
    state = AdversaryEnvState(env_state=env_state, score=0.0)
    victim = GreedyPolicy(constant_network([0.0, 1.0]))
    q_tilde = constant_network([0.0, 1.0])
    total = 0.0
    terminal = False

    while not terminal:
        result = adversary_env_step(state, AdversaryAction.no_perturb, victim, q_tilde)
        total += result.reward
        terminal = result.terminal
        state = result.next_state

    assert total == 500.0 - state.score
    assert result.reward == total


def test_adversary_env_wraps_victim():
    env = AdversaryEnv(GreedyPolicy(balancing_network()), constant_network([0.0, 1.0]))
    state = env.reset(3)

    assert isinstance(env.victim, BlackBoxPolicy)
    assert env.r_max == 500.0
    assert env.action_count == 2
    assert env.observation_size == 4
    assert np.array_equal(env.observe(state), CARTPOLE.reset(3).observation())


def test_never_perturbing_adversary_regret():
    victim = GreedyPolicy(balancing_network())
    report = evaluate_attack(
        NEVER_PERTURB, victim, constant_network([0.0, 1.0]), 5, seed=2
    )
    baseline = evaluate_policy(victim, 5, seed=2)

    assert report.mean_perturbations == 0.0
    assert [e.victim_return for e in report.episodes] == baseline.returns
    assert report.mean_regret == pytest.approx(500.0 - baseline.mean)
    assert all(e.adversary_return == e.regret for e in report.episodes)


def test_always_perturbing_adversary_accounting():
    victim = GreedyPolicy(balancing_network())
    q_tilde = balancing_network()
    report = evaluate_attack(ALWAYS_PERTURB, victim, q_tilde, 5, seed=0, cost=0.5)

    for e in report.episodes:
        assert e.perturbations == e.victim_return
        assert e.adversary_return == pytest.approx(e.regret - 0.5 * e.perturbations)
        # playing the imitation's worst action topples the pole quickly
        assert e.victim_return < 100
    assert 0.0 <= report.mean_regret <= 500.0
    assert report.max_regret == max(e.regret for e in report.episodes)


def test_evaluate_attack_detects_broken_accounting(mocker):
    mocker.patch(
        "shadowpolicy.attacks.adversary.adversary_step_reward", return_value=0.25
    )

    with pytest.raises(AccountingError):
        evaluate_attack(
            NEVER_PERTURB, RandomPolicy(2), constant_network([0.0, 1.0]), 1, seed=0
        )


def test_evaluate_attack_requires_episodes():
    with pytest.raises(ValueError):
        evaluate_attack(NEVER_PERTURB, RandomPolicy(2), NEVER_PERTURB, 0, seed=0)


def test_evaluate_attack_is_deterministic():
    args = (ALWAYS_PERTURB, RandomPolicy(2), constant_network([0.0, 1.0]), 3)

    assert evaluate_attack(*args, seed=4) == evaluate_attack(*args, seed=4)


def test_train_adversary_is_deterministic():
    victim = GreedyPolicy(balancing_network())
    q_tilde = balancing_network()

    first, first_curve = train_adversary(victim, q_tilde, tiny_adversary_config())
    second, second_curve = train_adversary(victim, q_tilde, tiny_adversary_config())

    assert first_curve == second_curve
    assert first.spec.layer_sizes == [4, 8, 2]
    for w1, w2 in zip(first.weights, second.weights):
        assert np.array_equal(w1, w2)


@pytest.mark.parametrize("kwargs", [{"cost": -1.0}, {"r_max": 0.0}])
def test_adversary_config_validation(kwargs):
    with pytest.raises(InvalidSpecError):
        AdversaryConfig(**kwargs).validate()


def test_r_max_below_environment_cap_is_rejected():
    victim = GreedyPolicy(balancing_network())
    q_tilde = balancing_network()

    with pytest.raises(InvalidSpecError, match="below the maximum return"):
        AdversaryEnv(victim, q_tilde, r_max=100.0)
    with pytest.raises(InvalidSpecError):
        train_adversary(victim, q_tilde, tiny_adversary_config(r_max=499.0))
    with pytest.raises(InvalidSpecError):
        AdversaryConfig(r_max=100.0).validate(max_return=500.0)

    assert AdversaryEnv(victim, q_tilde, r_max=600.0).r_max == 600.0
    AdversaryConfig(r_max=100.0).validate()
