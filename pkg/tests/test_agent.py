import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import central_difference, max_rel_error, naive_forward
from uavedge.agent import DdpgAgent, Mlp, OuNoise, SplitReplay, Transition
from uavedge.agent.ddpg import actor_objective_and_grads, critic_loss_and_grads
from uavedge.agent.replay import Batch
from uavedge.config import AgentConfig


# -- networks ----------------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.lists(st.integers(1, 12), min_size=2, max_size=4),
       st.sampled_from(["tanh", "identity"]))
def test_forward_matches_naive_loop(seed, sizes, output):
    rng = np.random.default_rng(seed)
    net = Mlp(sizes, output=output, rng=rng, final_scale=0.5)
    x = rng.normal(size=sizes[0])
    expected = naive_forward(net.weights, net.biases, x, output)
    np.testing.assert_allclose(net(x), expected, rtol=1e-12, atol=1e-12)


def test_batched_forward_matches_rows():
    rng = np.random.default_rng(0)
    net = Mlp((4, 6, 3), output="tanh", rng=rng)
    x = rng.normal(size=(5, 4))
    batch = net(x)
    for k in range(5):
        np.testing.assert_allclose(batch[k], net(x[k]), rtol=1e-14)


def test_backward_needs_forward_cache():
    net = Mlp((2, 3, 1))
    with pytest.raises(ValueError):
        net.backward(None, np.ones((1, 1)))


def test_actor_output_in_unit_box():
    rng = np.random.default_rng(2)
    net = Mlp((3, 8, 4), output="tanh", rng=rng, final_scale=10.0)
    out = net(rng.normal(scale=100, size=(50, 3)))
    assert np.all(np.abs(out) <= 1.0)


def test_final_layer_init_is_small():
    net = Mlp((10, 256, 128, 7), rng=np.random.default_rng(0))
    assert np.abs(net.weights[-1]).max() <= 3e-3
    assert np.abs(net.weights[0]).max() <= 1 / np.sqrt(10)


def test_mlp_gradient_against_finite_differences():
    rng = np.random.default_rng(4)
    net = Mlp((3, 5, 4, 2), output="tanh", rng=rng, final_scale=0.5)
    x = rng.normal(size=(6, 3))
    g_out = rng.normal(size=(6, 2))

    def f():
        return float(np.sum(net(x) * g_out))

    out, cache = net.forward(x)
    analytic, _ = net.backward(cache, g_out)
    numeric = central_difference(f, net.params)
    assert max_rel_error(analytic, numeric) <= 1e-6


def test_critic_and_actor_gradients():
    rng = np.random.default_rng(5)
    actor = Mlp((4, 8, 3), output="tanh", rng=rng, final_scale=0.5)
    critic = Mlp((7, 8, 1), rng=rng, final_scale=0.5)
    s = rng.normal(size=(5, 4))
    a = rng.uniform(-1, 1, (5, 3))
    y = rng.normal(size=5)
    _, cg = critic_loss_and_grads(critic, s, a, y)
    num = central_difference(lambda: critic_loss_and_grads(critic, s, a, y)[0], critic.params)
    assert max_rel_error(cg, num) <= 1e-6
    _, ag, _ = actor_objective_and_grads(actor, critic, s)
    num = central_difference(lambda: actor_objective_and_grads(actor, critic, s)[0], actor.params)
    assert max_rel_error(ag, num) <= 1e-6


def test_soft_update_endpoints():
    rng = np.random.default_rng(0)
    a, b = Mlp((3, 4, 2), rng=rng), Mlp((3, 4, 2), rng=rng)
    keep = a.copy()
    keep.soft_update(b, 0.0)
    assert all(np.array_equal(p, q) for p, q in zip(keep.params, a.params))
    keep.soft_update(b, 1.0)
    assert all(np.array_equal(p, q) for p, q in zip(keep.params, b.params))
    half = a.copy()
    half.soft_update(b, 0.5)
    assert all(np.allclose(h, (p + q) / 2) for h, p, q in zip(half.params, a.params, b.params))


# -- agent -------------------------------------------------------------------

def test_zero_discount_targets_are_rewards():
    agent = DdpgAgent(3, 2, AgentConfig(gamma=0.0, hidden=(8,)), rng=np.random.default_rng(0))
    batch = Batch(np.ones((4, 3)), np.zeros((4, 2)), np.arange(4.0), np.ones((4, 3)))
    np.testing.assert_array_equal(agent.targets(batch), np.arange(4.0))


def test_train_step_moves_critic_towards_targets():
    rng = np.random.default_rng(1)
    agent = DdpgAgent(3, 2, AgentConfig(gamma=0.0, hidden=(16,), optimizer="adam", critic_lr=1e-2),
                      rng=rng)
    s = rng.normal(size=(64, 3))
    a = rng.uniform(-1, 1, (64, 2))
    batch = Batch(s, a, np.ones(64), s)
    first = agent.train_step(batch)["critic_loss"]
    for _ in range(200):
        last = agent.train_step(batch)["critic_loss"]
    assert last < 0.1 * first


def test_checkpoint_round_trip(tmp_path):
    agent = DdpgAgent(5, 3, AgentConfig(hidden=(7, 6)), rng=np.random.default_rng(3))
    agent.updates = 12
    path = tmp_path / "agent.npz"
    agent.save(path, extra={"seed": 9})
    loaded, extra = DdpgAgent.load(path)
    assert extra == {"seed": 9} and loaded.updates == 12
    assert loaded.cfg == agent.cfg
    for name in ("actor", "critic", "actor_target", "critic_target"):
        for p, q in zip(getattr(agent, name).params, getattr(loaded, name).params):
            assert np.array_equal(p, q)
    x = np.random.default_rng(0).normal(size=5)
    assert np.array_equal(agent.act(x), loaded.act(x))


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "other.npz"
    np.savez(path, header=np.frombuffer(b'{"format": "x", "version": 1}', dtype=np.uint8))
    with pytest.raises(ValueError):
        DdpgAgent.load(path)


# -- exploration noise ---------------------------------------------------------

def test_ou_noise_is_mean_reverting():
    noise = OuNoise(1, theta=0.15, sigma=0.2, rng=np.random.default_rng(0))
    draws = np.array([noise.sample()[0] for _ in range(100_000)])
    assert abs(draws.mean()) < 0.01


def test_ou_zero_sigma_decays_to_mu():
    noise = OuNoise(2, theta=0.5, sigma=0.0, mu=0.3, rng=np.random.default_rng(0))
    noise.state[:] = 1.0
    for _ in range(100):
        x = noise.sample()
    np.testing.assert_allclose(x, 0.3, atol=1e-12)


def test_ou_sigma_decay_and_reset():
    noise = OuNoise(3, sigma=0.2, sigma_decay=0.5, rng=np.random.default_rng(0))
    noise.sample()
    noise.decay()
    assert noise.sigma == pytest.approx(0.1)
    noise.reset()
    assert np.all(noise.state == noise.mu)


# -- split replay ------------------------------------------------------------

def make_replay(**kw):
    args = dict(state_dim=2, action_dim=1, steps_per_episode=100, capacity=10_000, batch_size=64,
                threshold=0.0, rng=np.random.default_rng(0), keep_log=True)
    args.update(kw)
    return SplitReplay(**args)


def fill(replay, n_pos, n_neg):
    for k in range(n_pos):
        replay.store(Transition(np.array([k, 0.0]), np.zeros(1), 1.0, np.zeros(2)))
    for k in range(n_neg):
        replay.store(Transition(np.array([k, 1.0]), np.zeros(1), -1.0, np.zeros(2)))


def test_split_by_threshold():
    r = make_replay(threshold=0.3)
    assert r.is_positive(0.9) and not r.is_positive(0.1)
    assert r.is_positive(0.3)


def test_inverted_split():
    r = make_replay(threshold=0.3, invert_split=True)
    assert not r.is_positive(0.9) and r.is_positive(0.1)


def test_differentiated_batch_composition():
    r = make_replay()
    fill(r, 100, 100)
    assert r.differentiated_steps == 10 and r.negatives_per_batch == 6
    b = r.sample(0)
    assert b.n_negative == 6 and np.count_nonzero(b.rewards < 0) == 6
    assert np.count_nonzero(b.rewards > 0) == 58


def test_negative_shortage_topped_up_with_positives():
    r = make_replay()
    fill(r, 100, 2)
    b = r.sample(3)
    assert b.n_negative == 2 and len(b) == 64


def test_uniform_after_cutover():
    r = make_replay()
    fill(r, 100, 100)
    counts = [r.sample(50).n_negative for _ in range(200)]
    assert 25 < np.mean(counts) < 39
    assert r.log[-1].differentiated is False


def test_uniform_ablation_never_differentiates():
    r = make_replay(differentiated=False)
    fill(r, 100, 100)
    r.sample(0)
    assert r.log[-1].differentiated is False


def test_sample_none_until_batch_available():
    r = make_replay()
    fill(r, 30, 30)
    assert r.sample(0) is None


def test_ring_eviction_keeps_newest():
    r = make_replay(capacity=10)
    fill(r, 7, 0)
    assert len(r.positive) == 5
    assert sorted(r.positive.states[:, 0]) == [2, 3, 4, 5, 6]


def test_adaptive_threshold():
    r = make_replay(threshold=None)
    assert r.is_positive(-100.0)
    for k in range(100):
        r.store(Transition(np.zeros(2), np.zeros(1), float(k), np.zeros(2)))
    r.end_episode()
    assert r.threshold == pytest.approx(np.quantile(np.arange(100.0), 0.25))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 200), st.integers(0, 200), st.integers(0, 99))
def test_batches_have_no_duplicates(n_pos, n_neg, step):
    r = make_replay()
    fill(r, n_pos, n_neg)
    b = r.sample(step)
    if n_pos + n_neg < 64:
        assert b is None
        return
    keys = {tuple(row) for row in b.states}
    assert len(keys) == 64
