import numpy as np
import pytest

from conftest import random_clamped, random_theta
from platetx.diagnostics import (EnergyBreakdown, ObservableRow,
                                 difference_observables, dissipation, energy,
                                 energy_identity_residual,
                                 multiplier_functionals, negnorm,
                                 observable_row, thermal_gradient)
from platetx.domain import build_cutoffs
from platetx.errors import ConfigurationError, UsageError
from platetx.fields import PhysParams, State, make_state
from platetx.nonlinearity import NonlinearitySpec, potential
from platetx.operators import (biharmonic_transmission, coupling_to_plate,
                               laplacian_clamped, thermal_form,
                               thermal_laplacian)
from platetx.stepper import PlateStepper, SchemeConfig, Trajectory, simulate


def test_energy_zero_state(dom16, params):
    eb = energy(dom16, State.zeros(dom16), params, NonlinearitySpec.linear())
    assert eb.e == 0.0
    assert eb.lyapunov == 0.0


def test_energy_single_node_kick(dom16, params):
    ut = np.zeros((17, 17))
    ut[8, 8] = 1.0  # interior inner-plate node
    eb = energy(dom16, make_state(dom16, ut=ut), params,
                NonlinearitySpec.linear())
    assert eb.kinetic2 == pytest.approx(0.5 * params.rho2 * dom16.h**2)
    assert eb.kinetic1 == 0.0
    assert eb.bending1 == 0.0


def test_lyapunov_minus_e_is_potential(dom16, params, rng):
    spec = NonlinearitySpec.berger(tension=-1.0, stretch=2.0)
    for _ in range(100):
        s = make_state(dom16, u=random_clamped(dom16, rng),
                       ut=random_clamped(dom16, rng),
                       theta=random_theta(dom16, rng))
        eb = energy(dom16, s, params, spec)
        assert eb.lyapunov - eb.e == pytest.approx(potential(dom16, s, spec),
                                                   rel=1e-12)
        assert eb.kinetic1 >= 0 and eb.bending1 >= 0 and eb.thermal >= 0


def test_dissipation_zero_theta(dom16, params):
    assert dissipation(dom16, State.zeros(dom16), params) == 0.0


def _dissipation_by_direct_summation(domain, th, par):
    """Independent oracle: loop over every grid edge and boundary node."""
    n = domain.n
    total = 0.0
    for i in range(n):
        for j in range(n + 1):
            frac = sum(
                0.5 for cj in (j - 1, j)
                if 0 <= cj < n and not domain.cell_inner[i, cj]
            )
            total += frac * (th[i + 1, j] - th[i, j]) ** 2
    for i in range(n + 1):
        for j in range(n):
            frac = sum(
                0.5 for ci in (i - 1, i)
                if 0 <= ci < n and not domain.cell_inner[ci, j]
            )
            total += frac * (th[i, j + 1] - th[i, j]) ** 2
    robin = par.lam * domain.h * float(np.sum(th[domain.gamma1] ** 2))
    return par.beta0 * (total + robin)


def test_dissipation_matches_direct_summation(dom16, rng):
    par = PhysParams(beta0=1.7, lam=0.6)
    th = random_theta(dom16, rng)
    assert dissipation(dom16, th, par) == pytest.approx(
        _dissipation_by_direct_summation(dom16, th, par), rel=1e-12
    )


def test_thermal_gradient_linear_profile_closed_form(dom16):
    # theta = x: every frame x-edge contributes h^2 per unit transverse
    # extent, integrating |grad theta|^2 = 1 over the frame area
    par = PhysParams(beta0=1.7, lam=0.0)
    assert thermal_gradient(dom16, dom16.X.copy(), par) == pytest.approx(
        1.7 * 0.75, rel=1e-12
    )


def test_dissipation_matches_thermal_form(dom16, params, rng):
    for _ in range(50):
        th = random_theta(dom16, rng)
        d = dissipation(dom16, th, params)
        assert d >= 0.0
        ref = params.beta0 * thermal_form(dom16, th, th, params)
        assert abs(d - ref) <= 1e-12 * max(abs(ref), 1.0)


def test_thermal_gradient_excludes_robin(dom16, rng):
    th = random_theta(dom16, rng)
    p0 = PhysParams(beta0=2.0, lam=0.0)
    p1 = PhysParams(beta0=2.0, lam=3.0)
    assert thermal_gradient(dom16, th, p0) == pytest.approx(
        thermal_gradient(dom16, th, p1)
    )
    assert dissipation(dom16, th, p1) > dissipation(dom16, th, p0)


def test_residual_zero_trajectory(dom16, params):
    states = [State.zeros(dom16) for _ in range(5)]
    traj = Trajectory(times=[0.1 * k for k in range(5)], states=states,
                      stride=1, meta={"dt": 0.1})
    per_step, cum = energy_identity_residual(traj, params,
                                             NonlinearitySpec.linear())
    assert np.all(per_step == 0.0)
    assert np.all(cum == 0.0)


def test_residual_requires_stride_one(dom16, params):
    traj = Trajectory(times=[0.0], states=[State.zeros(dom16)], stride=2,
                      meta={"dt": 0.1})
    with pytest.raises(UsageError):
        energy_identity_residual(traj, params, NonlinearitySpec.linear())


def test_residual_small_for_midpoint_run(dom16, params):
    stepper = PlateStepper(dom16, params, scheme=SchemeConfig(tol_inner=1e-12))
    u0 = np.sin(np.pi * dom16.X) ** 2 * np.sin(np.pi * dom16.Y) ** 2
    th0 = random_theta(dom16, np.random.default_rng(3))
    s0 = make_state(dom16, u=u0, theta=th0)
    traj = simulate(stepper, s0, n_steps=30)
    per_step, _ = energy_identity_residual(traj, params,
                                           NonlinearitySpec.linear())
    e0 = energy(dom16, traj.states[0], params,
                NonlinearitySpec.linear()).lyapunov
    assert np.max(np.abs(per_step)) <= 1e-9 * e0
    # the recomputed residuals agree with the in-step record
    np.testing.assert_allclose(per_step, traj.step_series["residual"],
                               atol=1e-13 * e0)


def _euler_trajectory(domain, params, s0, dt, n_steps):
    """Forward Euler import: deliberately not energy consistent."""
    states = [s0.copy()]
    s = s0
    for _ in range(n_steps):
        u, ut, th = s.u.values, s.ut.values, s.theta.values
        acc = -(biharmonic_transmission(domain, u, params)
                + coupling_to_plate(domain, th, params))
        acc /= params.density(domain).clip(1e-300)
        acc[domain.gamma1] = 0.0
        dth = (params.mu * laplacian_clamped(domain, ut)
               - params.beta0 * thermal_laplacian(domain, th, params))
        dth[~domain.theta_free] = 0.0
        s = make_state(domain, u=u + dt * ut, ut=ut + dt * acc,
                       theta=th + dt * dth / params.rho0)
        states.append(s)
    return Trajectory(times=[dt * k for k in range(n_steps + 1)],
                      states=states, stride=1, meta={"dt": dt})


def test_residual_flags_explicit_euler(dom16, params):
    spec = NonlinearitySpec.linear()
    u0 = np.sin(np.pi * dom16.X) ** 2 * np.sin(np.pi * dom16.Y) ** 2
    s0 = make_state(dom16, u=u0)
    maxres = {}
    for m in (1, 2):
        dt = 1e-5 / m
        traj = _euler_trajectory(dom16, params, s0, dt, 10 * m)
        per_step, _ = energy_identity_residual(traj, params, spec)
        maxres[m] = np.max(np.abs(per_step))
    # visible residual, shrinking with dt (second order per step)
    e0 = energy(dom16, s0, params, spec).lyapunov
    assert maxres[1] > 1e-7 * e0
    assert 2.0 <= maxres[1] / maxres[2] <= 8.0


def test_multipliers_zero_state(dom16, params):
    cut = build_cutoffs(dom16)
    vals = multiplier_functionals(dom16, State.zeros(dom16), cut, params)
    assert vals == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_multipliers_j1_vanishes_without_heat(dom16, params, rng):
    cut = build_cutoffs(dom16)
    s = make_state(dom16, u=random_clamped(dom16, rng),
                   ut=random_clamped(dom16, rng))
    j1, j2, j3, j4, r = multiplier_functionals(dom16, s, cut, params)
    assert j1 == 0.0
    assert any(v != 0.0 for v in (j2, j3, j4))


def test_multipliers_weight_guard(dom16, params):
    cut = build_cutoffs(dom16)
    with pytest.raises(ConfigurationError):
        multiplier_functionals(dom16, State.zeros(dom16), cut, params,
                               eta=10.0, calib_c=1.0)


def test_difference_observables_identical_states(dom16, params, rng):
    s = make_state(dom16, u=random_clamped(dom16, rng),
                   ut=random_clamped(dom16, rng),
                   theta=random_theta(dom16, rng))
    obs = difference_observables(dom16, s, s, params)
    assert all(v == 0.0 for v in obs.values())


def test_difference_observables_reduce_to_single(dom16, params, rng):
    s = make_state(dom16, u=random_clamped(dom16, rng),
                   ut=random_clamped(dom16, rng),
                   theta=random_theta(dom16, rng))
    obs = difference_observables(dom16, s, State.zeros(dom16), params)
    eb = energy(dom16, s, params, NonlinearitySpec.linear())
    assert obs["e_d"] == pytest.approx(eb.e)
    assert obs["negnorm"] == pytest.approx(negnorm(dom16, s, params))


def test_negnorm_bounded_by_energy(dom16, params, rng):
    # norm comparison constant is finite on a fixed grid
    ratios = []
    for _ in range(20):
        s = make_state(dom16, ut=random_clamped(dom16, rng))
        eb = energy(dom16, s, params, NonlinearitySpec.linear())
        ratios.append(negnorm(dom16, s, params) / eb.e)
    assert max(ratios) < 1e3


def test_observable_row_csv(dom16, params):
    cols = ObservableRow.columns()
    assert cols[0] == "t"
    assert cols == sorted(set(cols), key=cols.index)  # no duplicates
    header = ObservableRow.csv_header()
    assert header.count(",") == len(cols) - 1
    row = observable_row(dom16, State.zeros(dom16), params,
                         NonlinearitySpec.linear(), 0.25)
    line = row.to_csv_line()
    assert line.split(",")[0] == "0.25"
    assert len(line.split(",")) == len(cols)


def test_observable_row_with_multipliers(dom16, params, rng):
    cut = build_cutoffs(dom16)
    s = make_state(dom16, u=random_clamped(dom16, rng),
                   ut=random_clamped(dom16, rng),
                   theta=random_theta(dom16, rng))
    row = observable_row(dom16, s, params, NonlinearitySpec.linear(), 1.0,
                         cutoffs=cut)
    assert row.r_over_e == pytest.approx(abs(row.r) / row.e)
    assert row.dissipation >= 0.0


def test_energy_breakdown_invariants():
    eb = EnergyBreakdown(kinetic1=1.0, bending2=2.0, potential=-0.5)
    assert eb.e == 3.0
    assert eb.lyapunov == 2.5
