import numpy as np
import pytest

from shadowpolicy import settings
from shadowpolicy.agents import DqfdConfig, save_demonstrations
from shadowpolicy.harness import stages
from shadowpolicy.ml.approximator import NetworkSpec, load_checkpoint
from shadowpolicy.utils import load_json

from ..factories import make_demonstrations


@pytest.fixture
def dqfd_config() -> DqfdConfig:
    return DqfdConfig(
        network=NetworkSpec(layer_sizes=[4, 8, 2]),
        pretraining_steps=20,
        interaction_steps=0,
        batch_size=8,
        target_update=10,
        replay_capacity=20,
        n_step=3,
        log_interval=10,
        holdout_fraction=0.2,
    )


def assert_same_weights(left, right):
    for a, b in zip(left.weights + left.biases, right.weights + right.biases):
        assert np.array_equal(a, b)


def test_imitation_checkpoint_learns_every_demonstration(
    tmp_path, dqfd_config, mocker
):
    demos = make_demonstrations([30] * 5, seed=4)
    demos_path = tmp_path / settings.DEMONSTRATIONS_NAME
    save_demonstrations(demos_path, demos)
    train = mocker.spy(stages, "dqfd_train")

    stages.imitate("v1", 150, demos_path, dqfd_config, 7, tmp_path)

    assert train.call_count == 2
    split_set, full_set = [call.args[0] for call in train.call_args_list]
    assert split_set.count < demos.count
    assert full_set.count == demos.count
    assert_same_weights(
        load_checkpoint(tmp_path / settings.IMITATION_CHECKPOINT_NAME),
        train.spy_return.network,
    )
    stats = load_json(tmp_path / settings.IMITATION_STATS_NAME)
    assert stats["demo_count"] == 150
    assert 0.0 <= stats["agreement"] <= 1.0


def test_single_episode_imitation_trains_once(tmp_path, dqfd_config, mocker):
    demos = make_demonstrations([40], seed=5)
    demos_path = tmp_path / settings.DEMONSTRATIONS_NAME
    save_demonstrations(demos_path, demos)
    train = mocker.spy(stages, "dqfd_train")

    stages.imitate("v1", 40, demos_path, dqfd_config, 7, tmp_path)

    assert train.call_count == 1
    assert train.call_args.args[0].count == 40
    assert_same_weights(
        load_checkpoint(tmp_path / settings.IMITATION_CHECKPOINT_NAME),
        train.spy_return.network,
    )
