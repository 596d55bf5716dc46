import math
import warnings

import numpy as np
import pytest

from lpcns.initial import InitialConditionSpec, generate_initial
from lpcns.model import (
    BlowUpError,
    CFLWarning,
    InformationLossError,
    ModelParams,
    ScalingLossWarning,
    State,
    Trajectory,
    rhs,
    run,
    scale_transform,
    step_imex,
    step_schedule,
)
from lpcns.spectral import make_grid, max_divergence, to_real


def state(grid, n, c, u, t=0.0):
    return State.from_arrays(grid, t, n, c, u)


def zeros_u(grid):
    return np.zeros((grid.dim,) + grid.shape)


class TestParams:
    def test_default_gravity(self):
        assert list(ModelParams().gravity(2)) == [0.0, -1.0]
        assert list(ModelParams().gravity(3)) == [0.0, 0.0, -1.0]

    def test_bad_params(self):
        with pytest.raises(ValueError):
            ModelParams(chi=math.inf)
        with pytest.raises(ValueError):
            ModelParams(grav=(0.0, math.nan))
        with pytest.raises(ValueError):
            ModelParams(grav=(0.0, 1.0)).gravity(3)


class TestState:
    def test_rejects_divergent_velocity(self):
        g = make_grid(2, 16)
        x = g.coords()
        u = np.stack([np.sin(x[0]), np.zeros(g.shape)])
        with pytest.raises(ValueError, match="divergence"):
            state(g, np.zeros(g.shape), np.zeros(g.shape), u)

    def test_rejects_mixed_grids(self):
        g, h = make_grid(2, 16), make_grid(2, 8)
        from lpcns.spectral import RealField

        with pytest.raises(ValueError):
            State(0.0, RealField.zeros(g), RealField.zeros(h), RealField.zeros(g, 2))

    def test_rejects_nan(self):
        g = make_grid(2, 8)
        n = np.zeros(g.shape)
        n[0, 0] = np.inf
        with pytest.raises(FloatingPointError):
            state(g, n, np.zeros(g.shape), zeros_u(g))


class TestRhs:
    def test_equilibrium(self):
        g = make_grid(2, 16)
        t = rhs(state(g, np.zeros(g.shape), np.full(g.shape, 2.0), zeros_u(g)), ModelParams())
        for part in t:
            assert np.max(np.abs(part.coef)) == 0.0

    def test_pure_diffusion(self):
        g = make_grid(2, 16)
        x = g.coords()
        t = rhs(state(g, np.zeros(g.shape), np.sin(x[0]), zeros_u(g)), ModelParams())
        assert np.max(np.abs(to_real(t.c).values[0] + np.sin(x[0]))) < 1e-13

    @pytest.mark.parametrize("chi", [1.0, 0.3])
    def test_manufactured(self, chi):
        g = make_grid(2, 32)
        X, Y = g.coords()
        n, c = np.cos(Y), np.sin(X)
        u = np.stack([np.sin(Y), np.zeros(g.shape)])
        t = rhs(state(g, n, c, u), ModelParams(chi=chi))
        # hand-differentiated right-hand sides
        tn = -np.cos(Y) + chi * np.cos(Y) * np.sin(X)
        tc = -np.sin(X) - np.sin(Y) * np.cos(X) - np.cos(Y) * np.sin(X)
        tu = np.stack([-np.sin(Y), np.zeros(g.shape)])  # n*grav = grad(-sin y) is projected out
        assert np.max(np.abs(to_real(t.n).values[0] - tn)) < 1e-10
        assert np.max(np.abs(to_real(t.c).values[0] - tc)) < 1e-10
        assert np.max(np.abs(to_real(t.u).values - tu)) < 1e-10

    def test_buoyancy_drives_flow(self):
        g = make_grid(2, 16)
        X, Y = g.coords()
        n = 1.0 + 0.1 * np.cos(X)
        t = rhs(state(g, n, np.zeros(g.shape), zeros_u(g)), ModelParams())
        # horizontal density variation under vertical gravity is not a gradient
        assert np.max(np.abs(t.u.coef)) > 1e-3
        assert max_divergence(t.u) < 1e-14
        # the uniform part of n*grav is absorbed by the pressure
        assert np.max(np.abs(t.u.coef[:, 0, 0])) == 0.0


class TestStep:
    def test_heat_mode(self):
        g = make_grid(2, 16)
        x = g.coords()
        s = state(g, np.zeros(g.shape), np.sin(x[0]), zeros_u(g))
        for _ in range(10):
            s = step_imex(s, 0.1, ModelParams())
        assert s.time == pytest.approx(1.0)
        assert np.max(np.abs(s.c.values[0] - math.exp(-1.0) * np.sin(x[0]))) < 1e-12

    def test_zero_state(self):
        g = make_grid(2, 16)
        s = step_imex(State.zeros(g), 0.1, ModelParams())
        assert np.all(s.n.values == 0) and np.all(s.c.values == 0) and np.all(s.u.values == 0)

    @pytest.mark.parametrize("dim,n", [(2, 32), (3, 16)])
    def test_taylor_green(self, dim, n):
        g = make_grid(dim, n)
        s0 = generate_initial(InitialConditionSpec("taylor_green", amplitude=1.0), g)
        rate = 2.0 if dim == 2 else 3.0
        s = run(s0, 0.5, 0.01, ModelParams()).final
        err = np.max(np.abs(s.u.values - s0.u.values * math.exp(-rate * 0.5)))
        if dim == 2:
            assert err < 1e-8
        else:
            # the 3D vortex is not an exact solution; it only starts that way
            assert err < 0.05

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            step_imex(State.zeros(make_grid(2, 8)), 0.0, ModelParams())

    def test_cfl_warning(self):
        g = make_grid(2, 16)
        s0 = generate_initial(InitialConditionSpec("taylor_green", amplitude=10.0), g)
        with pytest.warns(CFLWarning):
            step_imex(s0, 0.1, ModelParams())

    def test_second_order(self):
        g = make_grid(2, 16)
        s0 = generate_initial(InitialConditionSpec("random_smooth", 0.5, seed=2, kmax=4, decay=0.5), g)
        p = ModelParams()
        finals = [run(s0, 0.1, dt, p).final for dt in (0.01, 0.005, 0.0025)]
        e1 = np.max(np.abs(finals[0].n.values - finals[1].n.values))
        e2 = np.max(np.abs(finals[1].n.values - finals[2].n.values))
        assert 3.0 < e1 / e2 < 5.0


class TestRun:
    def test_empty_run(self):
        g = make_grid(2, 8)
        s0 = State.zeros(g, time=0.5)
        traj = run(s0, 0.5, 0.1, ModelParams())
        assert traj.steps == 0
        assert traj.final is s0

    def test_heat_to_one(self):
        g = make_grid(2, 16)
        x = g.coords()
        s0 = state(g, np.zeros(g.shape), np.sin(x[0]), zeros_u(g))
        traj = run(s0, 1.0, 0.1, ModelParams())
        assert traj.final.time == pytest.approx(1.0, abs=1e-14)
        assert np.max(np.abs(traj.final.c.values[0] - math.exp(-1) * np.sin(x[0]))) < 1e-12

    def test_last_step_shortened(self):
        sched = step_schedule(0.0, 0.25, 0.1)
        assert len(sched) == 3
        assert sched[-1] == pytest.approx(0.05)
        assert sum(sched) == pytest.approx(0.25)
        assert step_schedule(0.0, 0.3, 0.1) == pytest.approx([0.1] * 3)

    def test_observer_sees_every_step(self):
        g = make_grid(2, 8)
        seen = []
        traj = run(State.zeros(g), 0.05, 0.01, ModelParams(), observer=lambda s, i: seen.append(i))
        assert seen == list(range(traj.steps + 1))

    def test_backwards_rejected(self):
        with pytest.raises(ValueError):
            run(State.zeros(make_grid(2, 8), time=1.0), 0.5, 0.1, ModelParams())

    def test_trajectory_times_increase(self):
        g = make_grid(2, 8)
        t = Trajectory()
        t.append(State.zeros(g, 0.0), None, True)
        with pytest.raises(ValueError):
            t.append(State.zeros(g, 0.0), 0.1, True)

    def test_blowup_carries_partial_trajectory(self):
        g = make_grid(2, 16)
        s0 = generate_initial(InitialConditionSpec("random_smooth", 50.0, kmax=4, decay=0.3), g)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(BlowUpError) as info:
                run(s0, 100.0, 0.5, ModelParams(), keep_states=True)
        exc = info.value
        assert exc.trajectory is not None
        assert exc.trajectory.steps >= 1
        assert exc.time > exc.trajectory.final.time

    def test_smooth_run_conserves_mass(self):
        g = make_grid(2, 32)
        s0 = generate_initial(InitialConditionSpec("random_smooth", 0.2, seed=4), g)
        traj = run(s0, 0.5, 0.01, ModelParams(), keep_states=True)
        m0 = s0.n.values.sum()
        for s in traj.states:
            assert abs(s.n.values.sum() - m0) < 1e-10 * abs(m0)
            assert max_divergence(s.u_hat) < 1e-10

    def test_deterministic(self):
        g = make_grid(2, 16)
        s0 = generate_initial(InitialConditionSpec("random_smooth", 0.3, seed=9), g)
        a = run(s0, 0.1, 0.01, ModelParams()).final
        b = run(s0, 0.1, 0.01, ModelParams()).final
        for f in "ncu":
            assert getattr(a, f).values.tobytes() == getattr(b, f).values.tobytes()


class TestScaling:
    def test_identity(self):
        g = make_grid(2, 16)
        s = generate_initial(InitialConditionSpec("random_smooth", 0.3), g)
        t = scale_transform(s, 1)
        for f in "ncu":
            assert np.max(np.abs(getattr(t, f).values - getattr(s, f).values)) < 1e-14

    def test_cosine(self):
        g = make_grid(2, 16)
        X, Y = g.coords()
        s = state(g, np.cos(X), np.zeros(g.shape), zeros_u(g), t=0.4)
        t = scale_transform(s, 2)
        assert t.time == pytest.approx(0.1)
        assert np.max(np.abs(t.n.values[0] - 4 * np.cos(2 * X))) < 1e-13

    def test_velocity_and_c_rule(self):
        g = make_grid(2, 16)
        X, Y = g.coords()
        u = np.stack([np.sin(Y), np.zeros(g.shape)])
        s = state(g, np.zeros(g.shape), 1 + np.sin(X), u)
        t = scale_transform(s, 2)
        assert np.max(np.abs(t.c.values[0] - (1 + np.sin(2 * X)))) < 1e-13
        assert np.max(np.abs(t.u.values[0] - 2 * np.sin(2 * Y))) < 1e-13

    def test_round_trip_down(self):
        g = make_grid(2, 16)
        X, Y = g.coords()
        s = state(g, np.cos(X) + np.sin(2 * Y), np.zeros(g.shape), zeros_u(g))
        back = scale_transform(scale_transform(s, 2), 0.5)
        assert np.max(np.abs(back.n.values - s.n.values)) < 1e-13

    def test_loss_flagged(self):
        g = make_grid(2, 16)
        X, _ = g.coords()
        s = state(g, np.cos(4 * X), np.zeros(g.shape), zeros_u(g))  # 2*4 = 8 > cutoff 5
        with pytest.warns(ScalingLossWarning):
            t = scale_transform(s, 2)
        assert np.max(np.abs(t.n.values)) < 1e-14
        with pytest.raises(InformationLossError):
            scale_transform(s, 2, strict=True)

    def test_odd_modes_lost_downscaling(self):
        g = make_grid(2, 16)
        X, _ = g.coords()
        s = state(g, np.cos(X), np.zeros(g.shape), zeros_u(g))
        with pytest.raises(InformationLossError):
            scale_transform(s, 0.5, strict=True)

    @pytest.mark.parametrize("lam", [3, 0.0, -2, 1.5])
    def test_bad_lambda(self, lam):
        with pytest.raises(ValueError):
            scale_transform(State.zeros(make_grid(2, 8)), lam)
