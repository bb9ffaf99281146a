import numpy as np
import pytest

from detsched.agent import (
    Approximator,
    ArchitectureSpec,
    DivergenceError,
    GreedyPolicy,
    TrainSchedule,
    act,
    atom_support,
    load_checkpoint,
    loss_and_gradient,
    save_checkpoint,
    schedule_from_json,
    train,
)
from detsched.agent.replay import Transition
from detsched.env import EnvConfig, SchedulingEnv
from detsched.metrics import IouThresholdSpec

from toyworld import INSTANT, MID, SLOW, make_sequence, noisy_pred_fn, toy_dataset


def tiny_env(n_seqs=3, length=12, detectors=(INSTANT, MID)):
    sequences = [make_sequence(f"seq-{i}", length) for i in range(n_seqs)]
    dataset = toy_dataset(
        sequences, detectors, noisy_pred_fn(21),
        train_ids=tuple(s.sequence_id for s in sequences),
    )
    env = SchedulingEnv(
        dataset, EnvConfig(detectors, IouThresholdSpec.single(0.5), "train")
    )
    return env, [s.sequence_id for s in sequences]


def tiny_schedule(**overrides):
    base = dict(
        total_steps=300,
        epsilon_start=1.0,
        epsilon_end=0.05,
        epsilon_decay_steps=200,
        target_sync_period=50,
        warmup_transitions=30,
        batch_size=8,
        learn_period=2,
        n_step=3,
        discount=0.8,
        learning_rate=1e-3,
        replay_capacity=500,
        hidden_sizes=(16, 16),
        n_atoms=11,
        v_min=0.0,
        v_max=10.0,
        log_period=50,
    )
    base.update(overrides)
    return TrainSchedule(**base)


class TestAct:
    def spec(self):
        return ArchitectureSpec(3, (8,), 4, 5, 0.0, 4.0)

    def test_epsilon_zero_always_greedy(self):
        net = Approximator.initialize(self.spec(), seed=0)
        atoms = atom_support(5, 0.0, 4.0)
        rng = np.random.default_rng(0)
        feats = np.array([0.1, 0.2, 0.3])
        probs = net.probs(feats[None, :])[0]
        greedy = int(np.argmax(probs @ atoms))
        assert all(act(net, atoms, feats, 0.0, rng) == greedy for _ in range(20))

    def test_epsilon_one_uniform_within_three_sigma(self):
        net = Approximator.initialize(self.spec(), seed=0)
        atoms = atom_support(5, 0.0, 4.0)
        rng = np.random.default_rng(123)
        feats = np.zeros(3)
        n = 10_000
        counts = np.zeros(4)
        for _ in range(n):
            counts[act(net, atoms, feats, 1.0, rng)] += 1
        expected = n / 4
        sigma = np.sqrt(n * 0.25 * 0.75)
        assert np.all(np.abs(counts - expected) <= 3 * sigma)

    def test_fixed_seed_reproducible_stream(self):
        net = Approximator.initialize(self.spec(), seed=0)
        atoms = atom_support(5, 0.0, 4.0)
        feats = np.zeros(3)

        def stream(seed):
            rng = np.random.default_rng(seed)
            return [act(net, atoms, feats, 0.5, rng) for _ in range(50)]

        assert stream(7) == stream(7)

    def test_invalid_epsilon_rejected(self):
        net = Approximator.initialize(self.spec(), seed=0)
        atoms = atom_support(5, 0.0, 4.0)
        with pytest.raises(ValueError):
            act(net, atoms, np.zeros(3), 1.5, np.random.default_rng(0))

    def test_greedy_invariant_under_positive_affine_atom_transform(self):
        net = Approximator.initialize(self.spec(), seed=4)
        atoms = atom_support(5, 0.0, 4.0)
        rng = np.random.default_rng(1)
        for _ in range(20):
            feats = rng.normal(size=3)
            base = act(net, atoms, feats, 0.0, rng)
            for scale, shift in ((2.5, -3.0), (0.1, 100.0), (7.0, 0.0)):
                assert act(net, scale * atoms + shift, feats, 0.0, rng) == base


class TestScheduleConfig:
    def test_epsilon_linear_decay(self):
        s = tiny_schedule()
        assert s.epsilon_at(0) == 1.0
        assert s.epsilon_at(100) == pytest.approx(1.0 + (0.05 - 1.0) * 0.5)
        assert s.epsilon_at(200) == pytest.approx(0.05)
        assert s.epsilon_at(10_000) == pytest.approx(0.05)

    def test_defaults_follow_full_scale_protocol(self):
        s = TrainSchedule()
        assert s.total_steps == 300_000
        assert s.epsilon_start == 1.0 and s.epsilon_end == 0.01
        assert s.decay_steps == 300_000
        assert s.target_sync_period == 8_000
        assert s.warmup_transitions == 20_000
        assert s.n_step == 3 and s.batch_size == 32 and s.learn_period == 4
        assert s.discount == 0.99 and s.learning_rate == 6.25e-5
        assert s.n_atoms == 51 and (s.v_min, s.v_max) == (0.0, 20.0)

    def test_unknown_config_fields_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            schedule_from_json({"version": 1, "total_steps": 10, "typo_field": 3})

    def test_version_required(self):
        with pytest.raises(ValueError, match="version"):
            schedule_from_json({"total_steps": 10})


class TestTrainLoop:
    def test_zero_learning_rate_leaves_parameters_at_init(self):
        env, ids = tiny_env()
        schedule = tiny_schedule(learning_rate=0.0, total_steps=150)
        result = train(env, ids, schedule, seed=5)
        fresh = Approximator.initialize(result.approximator.spec, seed=[5, 0])
        assert np.array_equal(result.approximator.get_flat(), fresh.get_flat())

    def test_full_training_determinism(self):
        env, ids = tiny_env()
        schedule = tiny_schedule()
        a = train(env, ids, schedule, seed=9)
        b = train(env, ids, schedule, seed=9)
        assert np.array_equal(a.approximator.get_flat(), b.approximator.get_flat())
        assert [(r.step, r.epsilon, r.loss, r.mean_return_last_100) for r in a.log] == [
            (r.step, r.epsilon, r.loss, r.mean_return_last_100) for r in b.log
        ]
        assert a.episode_returns == b.episode_returns

    def test_different_seeds_differ(self):
        env, ids = tiny_env()
        schedule = tiny_schedule()
        a = train(env, ids, schedule, seed=1)
        b = train(env, ids, schedule, seed=2)
        assert not np.array_equal(a.approximator.get_flat(), b.approximator.get_flat())

    def test_divergence_aborts_with_diagnostic(self):
        env, ids = tiny_env()
        spec = ArchitectureSpec(3, (4,), 2, 5, 0.0, 4.0)
        net = Approximator.initialize(spec, seed=0)
        net.params["w0"][0, 0] = np.nan
        target = net.copy()
        atoms = atom_support(5, 0.0, 4.0)
        batch = [
            Transition(np.ones(3), 0, 1.0, np.ones(3), False, 0.9)
        ]
        with pytest.raises(DivergenceError):
            loss_and_gradient(batch, net, target, atoms)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        spec = ArchitectureSpec(3, (8, 4), 2, 7, 0.0, 6.0)
        net = Approximator.initialize(spec, seed=11)
        path = tmp_path / "agent.ckpt"
        save_checkpoint(path, net, {"detector_ids": ["a", "b"], "reward_iou": "0.5"})
        loaded, metadata = load_checkpoint(path)
        assert loaded.spec == spec
        assert np.array_equal(loaded.get_flat(), net.get_flat())
        assert metadata["detector_ids"] == ["a", "b"]

    def test_mismatched_architecture_rejected(self, tmp_path):
        spec = ArchitectureSpec(3, (8,), 2, 7, 0.0, 6.0)
        net = Approximator.initialize(spec, seed=0)
        path = tmp_path / "agent.ckpt"
        save_checkpoint(path, net, {})
        other = ArchitectureSpec(4, (8,), 2, 7, 0.0, 6.0)
        with pytest.raises(ValueError, match="architecture"):
            load_checkpoint(path, expected=other)

    def test_version_checked(self, tmp_path):
        path = tmp_path / "agent.ckpt"
        path.write_text('{"version": 99}')
        with pytest.raises(ValueError, match="version"):
            load_checkpoint(path)

    def test_greedy_policy_uses_checkpointed_network(self, tmp_path):
        env, ids = tiny_env()
        schedule = tiny_schedule(total_steps=100)
        result = train(env, ids, schedule, seed=3)
        path = tmp_path / "agent.ckpt"
        save_checkpoint(path, result.approximator, {})
        loaded, _ = load_checkpoint(path)
        policy = GreedyPolicy(loaded, result.atoms, env.state_features)
        state = env.reset(ids[0])
        a1 = policy.act(state)
        a2 = policy.act(state)
        assert a1 == a2
        assert 0 <= a1 < env.action_count
