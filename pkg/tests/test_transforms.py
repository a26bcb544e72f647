"""Transform fixed point, population transform and Monte Carlo oracles."""

import math

import numpy as np
import pytest

import graphon_hawkes as gh
from graphon_hawkes.errors import InvalidArgumentError
from graphon_hawkes.model import LifetimeModel, MarkModel, PairFunction
from graphon_hawkes.transforms import (
    TestFunction,
    TransformGrid,
    beta_eval,
    fixed_point,
    gamma_eval,
    interchange_experiment,
    laplace_of_Q,
    mc_population_transform,
    mc_transform_oracle,
    phi_apply,
)

LN2 = math.log(2)


def test_gamma_zero_function():
    j = LifetimeModel("exponential", rate=1.0)
    f0 = TestFunction.constant(0.0)
    for u in (0.0, 0.7, 3.0):
        assert gamma_eval(j, f0, [0.2], u) == pytest.approx(1.0)


def test_gamma_values():
    j = LifetimeModel("exponential", rate=1.0)
    f = TestFunction.constant(LN2)
    assert gamma_eval(j, f, [0.5], 0.0) == pytest.approx(0.5)
    assert gamma_eval(j, f, [0.5], 1.0) == pytest.approx(1 - 0.5 * math.exp(-1))


def test_beta_deterministic_and_exponential():
    spec = gh.constant_model(0.5, grid_n=256)
    unmarked = spec.marks
    nodes, _ = spec.std_grid
    g = np.full(nodes.shape[0], 0.8)
    assert beta_eval(unmarked, [0.5], g, spec) == pytest.approx(math.exp(-0.8))
    assert beta_eval(unmarked, [0.5], np.zeros_like(g), spec) == pytest.approx(1.0)
    exp_marks = MarkModel(kind="scaled-profile", xi_family="exponential", xi_value=1.0,
                          profile=PairFunction("constant", value=1.0))
    assert beta_eval(exp_marks, [0.5], np.ones_like(g), spec) == pytest.approx(0.5)


def test_beta_rejects_negative():
    spec = gh.constant_model(0.5, grid_n=64)
    with pytest.raises(InvalidArgumentError):
        beta_eval(spec.marks, [0.5], -np.ones(64), spec)


def test_phi_trivial_cases():
    spec0 = gh.constant_model(0.0, grid_n=64)
    f = TestFunction.constant(LN2)
    u = np.linspace(0, 2, 65)
    nodes, _ = spec0.std_grid
    xi = TransformGrid(values=np.random.default_rng(0).random((64, 65)), u_grid=u, f=f)
    out = phi_apply(xi, spec0, f)
    surv = spec0.lifetimes.survival(u)
    gamma = (1 - surv)[None, :] + surv[None, :] * 0.5
    assert np.allclose(out.values, gamma)  # W = 0: Phi(xi) = gamma for any xi
    ones = TransformGrid(values=np.ones((64, 65)), u_grid=u, f=f)
    spec = gh.constant_model(0.5, grid_n=64)
    out2 = phi_apply(ones, spec, f)
    assert np.allclose(out2.values, gamma)  # xi = 1 kills the excitation term
    f0 = TestFunction.constant(0.0)
    out3 = phi_apply(TransformGrid(values=np.ones((64, 65)), u_grid=u, f=f0), spec, f0)
    assert np.allclose(out3.values, 1.0)


def test_fixed_point_w_zero_equals_gamma_after_one_step():
    spec0 = gh.constant_model(0.0, grid_n=64)
    f = TestFunction.constant(LN2)
    eta, log = fixed_point(spec0, f, 2.0, n_u=65)
    surv = spec0.lifetimes.survival(eta.u_grid)
    gamma = (1 - surv)[None, :] + surv[None, :] * 0.5
    assert np.allclose(eta.values, gamma)
    assert log.iterations <= 3


def test_fixed_point_f_zero_is_one():
    spec = gh.constant_model(0.5, grid_n=64)
    eta, _ = fixed_point(spec, TestFunction.constant(0.0), 2.0, n_u=65)
    assert np.allclose(eta.values, 1.0)


def test_fixed_point_envelope_dominates_changes():
    for build in (lambda: gh.constant_model(0.5, grid_n=64),
                  lambda: gh.rank_one_model(1.2, grid_n=64)):
        spec = build()
        eta, log = fixed_point(spec, TestFunction.constant(LN2), 2.0, n_u=129)
        assert log.envelope_ok
        assert all(c <= e + 1e-9 for c, e in zip(log.sup_changes, log.envelope))


def test_two_starts_within_envelope():
    spec = gh.constant_model(0.5, grid_n=64)
    f = TestFunction.constant(LN2)
    t = 2.0
    n_u = 129
    u = np.linspace(0, t, n_u)
    xi1 = TransformGrid(values=np.ones((64, n_u)), u_grid=u, f=f)
    xi0 = TransformGrid(values=np.zeros((64, n_u)), u_grid=u, f=f)
    c = 2 * spec.excitation.sup_norm * spec.c_b * spec.graphon_bound()
    for n in range(1, 12):
        xi1 = phi_apply(xi1, spec, f)
        xi0 = phi_apply(xi0, spec, f)
        gap = np.abs(xi1.values - xi0.values)
        # at every time u on the grid the gap obeys C^n u^n / n!
        bound = c**n * u**n / math.factorial(n)
        assert np.all(gap <= bound[None, :] + 1e-9), n


def test_range_preservation():
    spec = gh.rank_one_model(1.2, grid_n=64)
    f = TestFunction.constant(1.3)
    u = np.linspace(0, 3, 97)
    rng = np.random.default_rng(4)
    xi = TransformGrid(values=rng.random((64, 97)), u_grid=u, f=f)
    for _ in range(5):
        xi = phi_apply(xi, spec, f)
        assert np.all(xi.values >= 0.0) and np.all(xi.values <= 1.0)


def test_laplace_of_q_trivial():
    spec = gh.constant_model(0.5, grid_n=64)
    eta, _ = fixed_point(spec, TestFunction.constant(0.0), 2.0, n_u=65)
    assert laplace_of_Q(eta, spec, 2.0) == pytest.approx(1.0)


def test_laplace_of_q_mginfty_closed_form():
    z, t = 0.7, 2.0
    spec0 = gh.constant_model(0.0, grid_n=64)
    eta, _ = fixed_point(spec0, TestFunction.constant(z), t, n_u=513)
    val = laplace_of_Q(eta, spec0, t)
    assert val == pytest.approx(math.exp(-(1 - math.exp(-z)) * (1 - math.exp(-t))), abs=1e-6)


def test_laplace_of_q_zero_baseline():
    base = gh.constant_model(0.5, grid_n=64)
    spec = gh.ModelSpec(
        domain=base.domain, baseline=gh.SpatialProfile("constant", value=0.0),
        graphon=base.graphon, excitation=base.excitation, lifetimes=base.lifetimes,
        c_w=0.5, grid_n=64,
    )
    eta, _ = fixed_point(spec, TestFunction.constant(0.9), 2.0, n_u=129)
    assert laplace_of_Q(eta, spec, 2.0) == pytest.approx(1.0)


def test_mc_oracle_w_zero_matches_gamma():
    spec0 = gh.constant_model(0.0, grid_n=64)
    f = TestFunction.constant(LN2)
    est = mc_transform_oracle(spec0, [0.4], f, 1.0, 50_000, gh.SplitStream(1))
    target = 1 - 0.5 * math.exp(-1)
    assert abs(est.estimate - target) <= 3 * est.stderr


def test_mc_oracle_f_zero_degenerate():
    spec = gh.constant_model(0.5, grid_n=64)
    est = mc_transform_oracle(spec, [0.4], TestFunction.constant(0.0), 1.0, 2000,
                              gh.SplitStream(2))
    assert est.estimate == 1.0 and est.stderr == 0.0


def test_mc_oracle_agrees_with_fixed_point():
    spec = gh.constant_model(0.5, grid_n=128)
    f = TestFunction.constant(LN2)
    u = 2.0
    eta, _ = fixed_point(spec, f, u, n_u=257)
    est = mc_transform_oracle(spec, [0.5], f, u, 100_000, gh.SplitStream(3))
    idx = int(np.argmin(np.abs(spec.std_grid[0][:, 0] - 0.5)))
    assert abs(est.estimate - eta.values[idx, -1]) <= 3 * est.stderr + 1e-3


def test_population_transform_mc_matches_solver():
    spec = gh.constant_model(0.5, grid_n=128)
    f = TestFunction.constant(0.9)
    t = 2.0
    eta, _ = fixed_point(spec, f, t, n_u=257)
    solver = laplace_of_Q(eta, spec, t)
    est = mc_population_transform(spec, f, t, 100_000, gh.SplitStream(4))
    assert abs(est.estimate - solver) <= 3 * est.stderr + 1e-3


def test_eta_monotone_in_f():
    spec = gh.constant_model(0.5, grid_n=64)
    eta_small, _ = fixed_point(spec, TestFunction.constant(0.3), 2.0, n_u=129)
    eta_big, _ = fixed_point(spec, TestFunction.constant(1.1), 2.0, n_u=129)
    assert np.all(eta_big.values <= eta_small.values + 1e-12)


def test_interchange_constant_model():
    spec = gh.constant_model(0.5, grid_n=64)
    rep = interchange_experiment(spec, [2, 4], TestFunction.constant(0.7), 12.0,
                                 tol=1e-10, n_u=257)
    diffs = [e.abs_diff for e in rep.entries]
    assert all(b <= a + 1e-12 for a, b in zip(diffs, diffs[1:]))
    assert max(diffs) < 1e-9  # identical piecewise-constant inputs
    assert rep.tail_mass < 1e-2


def test_interchange_affine_model_converges():
    spec = gh.ModelSpec(
        domain=gh.SpatialDomain((0.0,), (1.0,)),
        baseline=gh.SpatialProfile("affine", intercept=0.5, slope=(1.0,)),
        graphon=gh.PairFunction("rank-one", coeff=1.2,
                                profile=gh.SpatialProfile("identity")),
        excitation=gh.ExcitationKernel("exponential", rate=1.0, l1=1.0),
        c_w=1.2, grid_n=64,
    )
    rep = interchange_experiment(spec, [2, 16], TestFunction.constant(0.7), 12.0,
                                 tol=1e-10, n_u=257)
    assert rep.entries[-1].abs_diff < rep.entries[0].abs_diff
