import json

import numpy as np
import pytest

from smac_rl import trainer
from smac_rl.advantage import compute_gae
from smac_rl.envs import make_env
from smac_rl.net import Mlp, MlpSpec
from smac_rl.numcore import finite_diff_grad, make_rng
from smac_rl.optim import AdamState
from smac_rl.trainer import (AgentConfig, RunRecord, actor_update, collect_rollout, critic_update,
                             make_agent, paper_config, train)

SMALL = dict(hidden=(16,), diagnostics=False)


def rollout(env_id, seed, T):
    env = make_env(env_id)
    rng = make_rng(seed)
    policy, critic = make_agent(env, rng, (16,))
    batch, _ = collect_rollout(policy, critic, env, rng, T)
    return policy, critic, batch


def test_rollout_single_step():
    _, _, batch = rollout("cartpole", 0, 1)
    assert len(batch) == 1 and batch.values.shape == (2,)


@pytest.mark.parametrize("env_id", ["cartpole", "acrobot", "pendulum"])
def test_rollout_deterministic(env_id):
    _, _, a = rollout(env_id, 7, 300)
    _, _, b = rollout(env_id, 7, 300)
    for name in ("states", "actions", "rewards", "dones", "values", "log_probs"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


@pytest.mark.parametrize("env_id", ["cartpole", "acrobot", "pendulum"])
def test_stored_log_probs_match_density(env_id):
    policy, _, batch = rollout(env_id, 3, 200)
    for t in range(0, 200, 17):
        assert batch.log_probs[t] == pytest.approx(
            policy.log_prob_of(batch.states[t], batch.actions[t]), abs=1e-12)
    np.testing.assert_allclose(policy.log_probs(batch.states, batch.actions), batch.log_probs,
                               rtol=0, atol=1e-12)


def test_rollout_crosses_episode_boundaries():
    _, _, batch = rollout("cartpole", 0, 1000)
    ends = np.flatnonzero(batch.dones)
    assert len(ends) == len(batch.episodes) >= 2
    assert sum(length for _, _, length in batch.episodes) == ends[-1] + 1


def test_truncation_bootstrap_uses_final_observation():
    env = make_env("pendulum", max_steps=50)
    rng = make_rng(0)
    policy, critic = make_agent(env, rng, (8,))
    batch, _ = collect_rollout(policy, critic, env, rng, 120)
    cut = np.flatnonzero(batch.dones)
    assert list(cut) == [49, 99]
    assert np.all(batch.bootstrap[cut] != 0.0)
    assert np.count_nonzero(batch.bootstrap) == 2


def _critic_batch(R, zero=False):
    env = make_env("cartpole")
    rng = make_rng(1)
    _, critic = make_agent(env, rng, (8,))
    if zero:
        critic.set_params(np.zeros(critic.dim))
    _, _, batch = rollout("cartpole", 1, len(R))
    gae = compute_gae(batch, 0.99, 0.9)
    object.__setattr__(gae, "returns", np.asarray(R, dtype=float))
    return critic, batch, gae


def test_critic_perfect_fit_zero_loss():
    critic, batch, gae = _critic_batch(np.zeros(20))
    object.__setattr__(gae, "returns", critic.forward(batch.states)[:, 0])
    before = critic.get_params()
    _, loss = critic_update(critic, batch, gae, AdamState.zeros(critic.dim), 1e-3)
    assert loss == pytest.approx(0.0, abs=1e-30)
    np.testing.assert_array_equal(critic.get_params(), before)


def test_critic_unit_residual_loss():
    critic, batch, gae = _critic_batch(np.ones(20), zero=True)
    _, loss = critic_update(critic, batch, gae, AdamState.zeros(critic.dim), 1e-3)
    assert loss == 1.0


def test_critic_loss_decreases_with_epochs():
    critic, batch, gae = _critic_batch(make_rng(2).standard_normal(200))
    adam = AdamState.zeros(critic.dim)
    adam, first = critic_update(critic, batch, gae, adam, 1e-2, epochs=20, minibatch=50,
                                rng=make_rng(0))
    _, second = critic_update(critic, batch, gae, adam, 1e-2)
    assert second < first


def test_critic_gradient_matches_finite_differences():
    rng = make_rng(4)
    net = Mlp.init(MlpSpec(4, 1, (8, 8)), rng)
    X, R = rng.standard_normal((32, 4)), rng.standard_normal(32)
    theta = net.get_params()

    def loss(th):
        net.set_params(th)
        return float(np.mean((net.forward(X)[:, 0] - R) ** 2))

    fd = finite_diff_grad(loss, theta)
    net.set_params(theta)
    analytic = net.backward(X, (2.0 / 32) * (net.forward(X)[:, 0] - R)[:, None])
    assert np.linalg.norm(analytic - fd) <= 1e-4 * np.linalg.norm(fd)


def test_single_iteration():
    rec = train(paper_config("cartpole", total_timesteps=1000, **SMALL))
    assert rec.status == "ok"
    assert len(rec.logs) == 1 and rec.logs[0].n_actor_updates == 1
    assert rec.logs[0].timestep == 1000


def test_timesteps_increase_by_T_and_logprob_nonpositive():
    rec = train(paper_config("acrobot", T=250, total_timesteps=2000, **SMALL))
    ts = [lg.timestep for lg in rec.logs]
    assert ts == list(range(250, 2001, 250))
    assert all(lg.mean_logprob <= 0 for lg in rec.logs)


def test_bit_deterministic():
    cfg = paper_config("pendulum", total_timesteps=3000, **SMALL)
    a, b = train(cfg), train(cfg)
    np.testing.assert_array_equal(a.actor_params, b.actor_params)
    assert a.episodes == b.episodes
    assert [lg.critic_loss for lg in a.logs] == [lg.critic_loss for lg in b.logs]


def test_large_damping_reduces_to_sgd():
    lam, eta = 1e8, 1e-2
    common = dict(total_timesteps=1000, T=200, **SMALL)
    sgd = train(paper_config("cartpole", "sgd", eta=eta, **common))
    smac = train(paper_config("cartpole", "smac", eta=eta * lam, lam=lam, **common))
    assert sgd.status == smac.status == "ok"
    np.testing.assert_allclose(smac.actor_params, sgd.actor_params, rtol=0, atol=1e-6)


@pytest.mark.parametrize("opt", ["smac", "sgd", "adam", "cg"])
def test_every_optimizer_runs_and_stays_finite(opt):
    rec = train(paper_config("acrobot", opt, total_timesteps=3000, **SMALL))
    assert rec.status == "ok", rec.error
    assert np.all(np.isfinite(rec.actor_params))
    assert all(lg.dot_with_grad >= 0 for lg in rec.logs)


def test_pendulum_stays_finite():
    rec = train(paper_config("pendulum", "smac", total_timesteps=50_000))
    assert rec.status == "ok", rec.error
    assert np.all(np.isfinite(rec.actor_params))


def test_per_sample_counts_updates():
    rec = train(paper_config("cartpole", total_timesteps=1000, batch_mode="per_sample", **SMALL))
    assert rec.logs[0].n_actor_updates == 1000
    rec = train(paper_config("cartpole", total_timesteps=1000, actor_batch=250, **SMALL))
    assert rec.logs[0].n_actor_updates == 4


def test_chunked_update_matches_manual_loop():
    cfg = paper_config("cartpole", actor_batch=100, **SMALL)
    policy, critic, batch = rollout("cartpole", 5, 1000)
    gae = compute_gae(batch, 0.99, 0.9)
    theta = policy.get_params()
    L = policy.scores(batch.states, batch.actions)
    adv = gae.advantages
    manual = theta.copy()
    for s in range(0, 1000, 100):
        lbar = L[s:s + 100].mean(0)
        g = (adv[s:s + 100, None] * L[s:s + 100]).mean(0)
        manual = manual + cfg.eta * np.linalg.solve(cfg.lam * np.eye(len(g)) + np.outer(lbar, lbar), g)
    actor_update(cfg, policy, batch, gae, None)
    np.testing.assert_allclose(policy.get_params(), manual, rtol=0, atol=1e-10)


def test_smac_iteration_cost_close_to_sgd():
    common = dict(total_timesteps=10_000, diagnostics=False)
    t_sgd = min(train(paper_config("cartpole", "sgd", **common)).wall_time for _ in range(2))
    t_smac = min(train(paper_config("cartpole", "smac", **common)).wall_time for _ in range(2))
    assert t_smac <= 2.0 * t_sgd


def test_diagnostics_logged():
    rec = train(paper_config("cartpole", total_timesteps=2000, hidden=(16,)))
    for lg in rec.logs:
        assert lg.G_hat > 0 and lg.G_hat ** 2 >= lg.trace > 0


def test_failure_is_recorded(monkeypatch):
    def broken(*a, **k):
        raise RuntimeError("simulator exploded")

    monkeypatch.setattr(trainer, "make_env", broken)
    rec = train(paper_config("cartpole", total_timesteps=1000, **SMALL))
    assert rec.status == "failed" and "simulator exploded" in rec.error


def test_csv_log_and_checkpoints(tmp_path):
    cfg = paper_config("cartpole", total_timesteps=3000, checkpoint_every=2,
                       out_dir=str(tmp_path), **SMALL)
    rec = train(cfg, log_path=tmp_path / "log.csv")
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == ",".join(trainer.LOG_COLUMNS)
    assert len(lines) == 4
    ck = json.loads((tmp_path / "checkpoint_000002.json").read_text())
    assert ck["iteration"] == 2
    assert set(ck) == {"iteration", "actor", "critic", "critic_adam", "actor_adam"}
    critic = Mlp.from_dict(ck["critic"])
    actor = Mlp.from_dict(ck["actor"]["net"])
    assert (critic.spec.input_dim, critic.spec.output_dim) == (4, 1)
    assert (actor.spec.input_dim, actor.spec.output_dim) == (4, 2)
    assert ck["critic_adam"]["t"] > 0 and ck["actor_adam"] is None
    assert actor.dim == rec.actor_params.size


def test_record_round_trip():
    rec = train(paper_config("cartpole", total_timesteps=2000, **SMALL))
    back = RunRecord.from_dict(json.loads(json.dumps(rec.to_dict())))
    assert back.episodes == rec.episodes
    assert back.final_return() == rec.final_return()


def test_config_validation():
    with pytest.raises(ValueError, match="invalid config"):
        AgentConfig(eta=-1.0).validate()
    with pytest.raises(ValueError):
        AgentConfig(total_timesteps=1500).validate()
    with pytest.raises(ValueError):
        AgentConfig(gamma=0.0).validate()
    with pytest.raises(ValueError):
        AgentConfig(actor_batch=300).validate()
    with pytest.raises(ValueError):
        AgentConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        paper_config("hopper")
    cfg = paper_config("acrobot", "cg", seed=3)
    assert AgentConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.eta == 6e-1 and cfg.lam == 0.1 and cfg.T == 1000


def test_published_step_sizes():
    table = {("acrobot", "smac"): 5e-2, ("cartpole", "smac"): 5e-3, ("pendulum", "smac"): 6e-3,
             ("acrobot", "adam"): 6e-4, ("cartpole", "sgd"): 7e-3, ("pendulum", "cg"): 3e-2}
    for (env, opt), eta in table.items():
        assert paper_config(env, opt).eta == eta
