import numpy as np
import pytest
import torch

from mzi_align.nn_core import (
    Actor,
    Critic,
    NetworkSpec,
    build_actor,
    build_critic,
    clip_and_step,
    count_parameters,
    forward_actor,
    forward_critic,
    init_orthogonal,
    load_checkpoint,
    polyak_blend,
    save_checkpoint,
)

VEC_SPEC = NetworkSpec(obs_mode="vector", hidden_sizes=(16, 16))
TINY = NetworkSpec.downsized()


def orthogonality_defect(w: torch.Tensor) -> float:
    m = w.detach().reshape(w.shape[0], -1)
    if m.shape[0] <= m.shape[1]:
        gram = m @ m.T
    else:
        gram = m.T @ m
    eye = torch.eye(gram.shape[0], dtype=gram.dtype)
    return float((gram - eye).abs().max())


class TestInit:
    @pytest.mark.parametrize("spec", [VEC_SPEC, TINY])
    def test_orthogonal_weights(self, spec):
        actor = build_actor(spec, seed=0)
        for m in actor.modules():
            if isinstance(m, (torch.nn.Linear, torch.nn.Conv2d)):
                assert orthogonality_defect(m.weight) < 1e-5
                assert torch.all(m.bias == 0)

    def test_deterministic(self):
        a1 = build_actor(VEC_SPEC, seed=42)
        a2 = build_actor(VEC_SPEC, seed=42)
        for p1, p2 in zip(a1.parameters(), a2.parameters()):
            assert torch.equal(p1, p2)
        a3 = build_actor(VEC_SPEC, seed=43)
        assert any(not torch.equal(p1, p3)
                   for p1, p3 in zip(a1.parameters(), a3.parameters()))

    def test_actor_outputs_bounded(self):
        actor = build_actor(TINY, seed=1)
        obs = torch.rand(7, 2, 8, 8)
        out = forward_actor(actor, obs)
        assert out.shape == (7, 5)
        assert torch.all(out > -1) and torch.all(out < 1)

    def test_zero_observation_zero_action(self):
        actor = build_actor(VEC_SPEC, seed=2)
        out = forward_actor(actor, torch.zeros(6))
        assert torch.all(out == 0)

    def test_parameter_count_parity(self):
        c1 = build_critic(VEC_SPEC, seed=0)
        c2 = build_critic(VEC_SPEC, seed=1)
        t1 = build_critic(VEC_SPEC, seed=2)
        assert count_parameters(c1) == count_parameters(c2) == count_parameters(t1)


class TestGradients:
    def _fd_check(self, params, closure, h=1e-4, tol=1e-4):
        loss = closure()
        grads = torch.autograd.grad(loss, params)
        worst = 0.0
        with torch.no_grad():
            for p, g in zip(params, grads):
                flat = p.reshape(-1)
                gflat = g.reshape(-1)
                for idx in range(flat.numel()):
                    orig = flat[idx].item()
                    flat[idx] = orig + h
                    up = closure().item()
                    flat[idx] = orig - h
                    down = closure().item()
                    flat[idx] = orig
                    fd = (up - down) / (2 * h)
                    an = gflat[idx].item()
                    rel = abs(an - fd) / max(abs(an), abs(fd), 1e-6)
                    worst = max(worst, rel)
        return worst

    def test_critic_gradients_match_finite_differences(self):
        torch.manual_seed(0)
        critic = build_critic(TINY, seed=3).double()
        obs = torch.rand(3, 2, 8, 8, dtype=torch.float64)
        act = torch.rand(3, 5, dtype=torch.float64) * 2 - 1
        params = list(critic.parameters())

        def closure():
            return forward_critic(critic, obs, act).sum()

        assert self._fd_check(params, closure) < 1e-4

    def test_actor_through_critic_gradients(self):
        torch.manual_seed(1)
        actor = build_actor(TINY, seed=4).double()
        critic = build_critic(TINY, seed=5).double()
        obs = torch.rand(3, 2, 8, 8, dtype=torch.float64)
        params = list(actor.parameters())

        def closure():
            return forward_critic(critic, obs, forward_actor(actor, obs)).sum()

        assert self._fd_check(params, closure) < 1e-4

    def test_critic_grad_wrt_action(self):
        torch.manual_seed(2)
        critic = build_critic(VEC_SPEC, seed=6).double()
        obs = torch.rand(4, 6, dtype=torch.float64)
        act = (torch.rand(4, 5, dtype=torch.float64) * 2 - 1).requires_grad_(True)
        q = forward_critic(critic, obs, act).sum()
        (grad,) = torch.autograd.grad(q, act)
        h = 1e-4
        with torch.no_grad():
            for i in range(4):
                for j in range(5):
                    orig = act[i, j].item()
                    act[i, j] = orig + h
                    up = forward_critic(critic, obs, act).sum().item()
                    act[i, j] = orig - h
                    down = forward_critic(critic, obs, act).sum().item()
                    act[i, j] = orig
                    fd = (up - down) / (2 * h)
                    assert grad[i, j].item() == pytest.approx(fd, rel=1e-5, abs=1e-8)


class TestOptimizerStep:
    def test_norm_clipping_halves_large_gradients(self):
        lin = torch.nn.Linear(4, 4, bias=False)
        with torch.no_grad():
            lin.weight.zero_()
        g = torch.full((4, 4), 5.0)
        lin.weight.grad = g.clone()
        assert float(torch.linalg.vector_norm(g)) == pytest.approx(20.0)
        torch.nn.utils.clip_grad_norm_(lin.parameters(), 10.0)
        assert torch.allclose(lin.weight.grad, g * 0.5)

    def test_zero_gradients_leave_parameters(self):
        lin = torch.nn.Linear(3, 3)
        before = lin.weight.detach().clone()
        opt = torch.optim.Adam(lin.parameters(), lr=1e-3)
        lin.weight.grad = torch.zeros_like(lin.weight)
        lin.bias.grad = torch.zeros_like(lin.bias)
        clip_and_step(opt, lin)
        assert torch.equal(lin.weight, before)

    def test_quadratic_convergence(self):
        x = torch.nn.Parameter(torch.tensor([5.0]))
        target = 1.7
        opt = torch.optim.Adam([x], lr=1e-2)
        for _ in range(10_000):
            opt.zero_grad()
            loss = (x - target) ** 2
            loss.backward()
            opt.step()
            if abs(x.item() - target) < 1e-3:
                break
        assert abs(x.item() - target) < 1e-3

    def test_nonfinite_gradient_raises(self):
        from mzi_align.nn_core import TrainingFault

        lin = torch.nn.Linear(2, 2)
        opt = torch.optim.Adam(lin.parameters())
        lin.weight.grad = torch.full_like(lin.weight, float("nan"))
        lin.bias.grad = torch.zeros_like(lin.bias)
        with pytest.raises(TrainingFault):
            clip_and_step(opt, lin)


class TestPolyak:
    def test_endpoints(self):
        t = build_actor(VEC_SPEC, seed=7)
        o = build_actor(VEC_SPEC, seed=8)
        t_copy = build_actor(VEC_SPEC, seed=7)
        polyak_blend(t, o, rho=1.0)
        for a, b in zip(t.parameters(), t_copy.parameters()):
            assert torch.equal(a, b)
        polyak_blend(t, o, rho=0.0)
        for a, b in zip(t.parameters(), o.parameters()):
            assert torch.equal(a, b)

    def test_geometric_contraction(self):
        t = build_actor(VEC_SPEC, seed=9)
        o = build_actor(VEC_SPEC, seed=10)
        rho = 0.9

        def dist():
            return sum(float((a - b).norm()) for a, b in zip(t.parameters(), o.parameters()))

        d0 = dist()
        for n in range(1, 6):
            polyak_blend(t, o, rho)
            assert dist() <= rho**n * d0 * (1 + 1e-6)

    def test_rho_validation(self):
        t = build_actor(VEC_SPEC, seed=0)
        with pytest.raises(ValueError):
            polyak_blend(t, t, rho=1.5)


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        actor = build_actor(VEC_SPEC, seed=11)
        critic = build_critic(VEC_SPEC, seed=12)
        path = tmp_path / "ckpt.pt"
        save_checkpoint(path, VEC_SPEC, {"actor": actor, "critic1": critic},
                        meta={"step": 123})
        spec, state, meta = load_checkpoint(path)
        assert spec == VEC_SPEC
        assert meta["step"] == 123
        restored = Actor(spec)
        restored.load_state_dict(state["actor"])
        obs = torch.rand(2, 6)
        assert torch.equal(forward_actor(restored, obs), forward_actor(actor, obs))

    def test_rejects_foreign_payload(self, tmp_path):
        path = tmp_path / "junk.pt"
        torch.save({"kind": "other"}, path)
        with pytest.raises(ValueError):
            load_checkpoint(path)
