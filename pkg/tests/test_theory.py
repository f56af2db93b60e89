import math

import numpy as np
import pytest

from netlasso import datagen, errors, graph, solver, theory


def base_inputs(**over):
    kw = dict(rho=0.4, m=5, n=40, N=200, d=100, s=4, sigma=0.5,
              zeta_sigma=16.0 / 15.0, lambda_min_cov=0.64,
              lambda_max_cov=1.78, L_max=3.0, lambda_min_W=0.0, t0=3.0)
    kw.update(over)
    return theory.TheoryInputs(**kw)


class TestChooseLambda:
    def test_arithmetic(self):
        inp = base_inputs(sigma=0.5, zeta_sigma=1.0, t0=2.0000001,
                          d=round(math.e ** 1), N=2)
        # with t0 ~= 2 and ln d ~= 1: 0.5 * sqrt(2 * 1 / 2) ~= 0.5
        # use exact values instead: d = 3 gives ln d = 1.0986
        inp = theory.TheoryInputs(rho=0.0, m=1, n=2, N=2, d=3, s=1, sigma=0.5,
                                  zeta_sigma=1.0, lambda_min_cov=1.0,
                                  lambda_max_cov=1.0, L_max=1.0,
                                  lambda_min_W=1.0, t0=2.5)
        expect = 0.5 * math.sqrt(1.0 * 2.5 * math.log(3) / 2)
        assert theory.choose_lambda(inp) == pytest.approx(expect, rel=1e-12)

    def test_shrinks_by_sqrt2_when_N_doubles(self):
        a = theory.choose_lambda(base_inputs(N=200))
        b = theory.choose_lambda(base_inputs(N=400))
        assert a / b == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_t0_validated(self):
        with pytest.raises(errors.ConfigError):
            base_inputs(t0=2.0)


class TestChooseGamma:
    def test_vanishes_as_rho_to_one(self):
        vals = [theory.choose_gamma(base_inputs(rho=r))
                for r in (0.0, 0.9, 0.9999)]
        assert vals[0] > vals[1] > vals[2]
        assert vals[2] < 1e-3 * vals[0]

    def test_halves_when_d_doubles_in_dm_regime(self):
        # lmin d m (log m + 1) dominates for large m
        a = theory.choose_gamma(base_inputs(d=400, m=50))
        b = theory.choose_gamma(base_inputs(d=800, m=50))
        assert a / b == pytest.approx(2.0, rel=0.05)

    def test_complete_beats_weakly_connected(self):
        full = theory.choose_gamma(base_inputs(rho=0.0))
        weak = theory.choose_gamma(base_inputs(rho=0.973))
        assert full > weak


class TestChooseBeta:
    def test_arithmetic(self):
        assert theory.choose_beta(0.1, 2.0, 0.0) == pytest.approx(1.0 / 12.0)

    def test_single_agent(self):
        assert theory.choose_beta(0.5, 4.0, 1.0) == pytest.approx(0.25)

    def test_identity(self):
        gamma, L, lw = 0.037, 5.3, -0.2
        beta = theory.choose_beta(gamma, L, lw)
        assert beta * (L + (1.0 - lw) / gamma) == pytest.approx(1.0, rel=1e-12)


class TestRadiusBounds:
    def test_threshold_regime_nonempty(self):
        # direct evaluation oracle: mu = 1824 s tau makes
        # 56 lam s/(1792 s tau) == lam/(32 tau)
        s, tau, lam = 3, 0.01, 0.4
        rsc = theory.RscParams(mu=1824 * s * tau, tau=tau)
        rb = theory.radius_bounds(lam, s, rsc, l1_truth=0.0)
        assert rb.lower == pytest.approx(rb.upper, rel=1e-12)
        assert not rb.is_empty

    def test_tau_zero_upper_infinite(self):
        rb = theory.radius_bounds(0.5, 2, theory.RscParams(mu=1.0, tau=0.0),
                                  l1_truth=1.0)
        assert rb.upper == math.inf

    def test_lambda_condition_guarantees_truth_term(self):
        # lam >= 64 tau ||theta*||_1 implies 2||theta*||_1 <= lam/(32 tau)
        tau, l1 = 0.02, 1.5
        lam = 64 * tau * l1
        rb = theory.radius_bounds(lam, 1, theory.RscParams(mu=1824 * tau, tau=tau),
                                  l1_truth=l1)
        assert 2 * l1 <= rb.upper + 1e-12

    def test_regime_violation(self):
        with pytest.raises(errors.RegimeError):
            theory.radius_bounds(0.1, 10, theory.RscParams(mu=0.1, tau=0.01),
                                 l1_truth=0.0)


class TestRateQuantities:
    def test_kappa_in_unit_interval(self):
        inp = base_inputs()
        rsc = theory.RscParams(mu=0.64, tau=1e-4)
        beta = theory.choose_beta(0.01, inp.L_max, inp.lambda_min_W)
        rq = theory.rate_quantities(inp, rsc, beta, avg_err_hat=0.05,
                                    lam=0.1, gamma=0.01)
        assert 0 < rq.kappa < 1
        assert 0 < rq.kappa_strict < 1
        # the appendix contraction expands mu_av: 1 - beta*(mu/8 - 8 s tau)
        assert rq.kappa_strict == pytest.approx(1 - beta * rq.mu_av, rel=1e-12)

    def test_eps_stat_zero_case(self):
        inp = base_inputs()
        rsc = theory.RscParams(mu=0.64, tau=1e-4)
        rq = theory.rate_quantities(inp, rsc, beta=1e-3, avg_err_hat=0.0,
                                    lam=1e-300, gamma=0.01)
        assert rq.eps_stat_sq == pytest.approx(0.0, abs=1e-280)

    def test_h_max_linear_in_gamma(self):
        inp = base_inputs()
        rsc = theory.RscParams(mu=0.64, tau=1e-4)
        a = theory.rate_quantities(inp, rsc, 1e-3, 0.0, lam=0.1, gamma=0.01)
        b = theory.rate_quantities(inp, rsc, 1e-3, 0.0, lam=0.1, gamma=0.02)
        assert b.h_max / a.h_max == pytest.approx(2.0, rel=1e-12)

    def test_regime_error(self):
        inp = base_inputs(s=100)
        with pytest.raises(errors.RegimeError):
            theory.rate_quantities(inp, theory.RscParams(mu=0.1, tau=0.01),
                                   1e-3, 0.0, lam=0.1, gamma=0.01)


class TestIterationBound:
    def rate(self, inp, gamma):
        rsc = theory.RscParams(mu=0.64, tau=1e-5)
        beta = theory.choose_beta(gamma, inp.L_max, inp.lambda_min_W)
        return theory.rate_quantities(inp, rsc, beta, 0.0, lam=0.1,
                                      gamma=gamma)

    def test_alpha_at_eta0_drops_linear_term(self):
        inp = base_inputs()
        rq = self.rate(inp, 0.01)
        a = theory.iteration_bound(eta0=1.0, alpha_sq=1.0, radius=100.0,
                                   lam=0.1, rate=rq, gamma=0.01,
                                   L_max=inp.L_max, rho=inp.rho)
        b = theory.iteration_bound(eta0=1.0, alpha_sq=0.25, radius=100.0,
                                   lam=0.1, rate=rq, gamma=0.01,
                                   L_max=inp.L_max, rho=inp.rho)
        assert a.iterations < b.iterations

    def test_halving_gamma_increases_bound(self):
        inp = base_inputs()
        a = theory.iteration_bound(1.0, 0.05, 10.0, 0.1, self.rate(inp, 0.01),
                                   0.01, inp.L_max, inp.rho)
        b = theory.iteration_bound(1.0, 0.05, 10.0, 0.1, self.rate(inp, 0.005),
                                   0.005, inp.L_max, inp.rho)
        assert b.iterations > a.iterations

    def test_doubling_L_max_roughly_doubles(self):
        # L_max-dominated regime: gamma large enough that (1+rho)/gamma is small
        inp = base_inputs(rho=0.0)
        rsc = theory.RscParams(mu=0.64, tau=1e-6)
        gamma = 10.0

        def bound(L):
            beta = theory.choose_beta(gamma, L, 0.0)
            rq = theory.rate_quantities(inp, rsc, beta, 0.0, lam=0.1,
                                        gamma=gamma)
            return theory.iteration_bound(1.0, 1e-3, 10.0, 0.1, rq, gamma,
                                          L, 0.0).iterations
        ratio = bound(2000.0) / bound(1000.0)
        assert 1.8 <= ratio <= 2.2

    def test_alpha_out_of_range(self):
        inp = base_inputs()
        rq = self.rate(inp, 0.01)
        with pytest.raises(errors.RegimeError):
            theory.iteration_bound(1.0, 5.0, 10.0, 0.1, rq, 0.01,
                                   inp.L_max, inp.rho)

    def test_comm_order_reported(self):
        inp = base_inputs()
        rq = self.rate(inp, 0.01)
        est = theory.iteration_bound(1.0, 0.05, 10.0, 0.1, rq, 0.01,
                                     inp.L_max, inp.rho, inp=inp)
        assert est.comm_order is not None and est.comm_order > 0


class TestRscCheck:
    def test_scaled_identity_equality(self):
        N = 8
        X = math.sqrt(N) * np.eye(N)
        slack = theory.rsc_check(X, theory.RscParams(mu=2.0, tau=0.0),
                                 num_dirs=60, seed=0)
        assert abs(slack) <= 1e-9

    def test_large_tau_always_nonnegative(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((10, 6))
        # tau >= mu since ||D||_1^2 >= ||D||^2 makes the RHS <= 0 ... use
        # tau = mu so (mu/2)(||D||^2 - ||D||_1^2) <= 0 <= ||XD||^2/N
        slack = theory.rsc_check(X, theory.RscParams(mu=0.5, tau=0.5),
                                 num_dirs=300, seed=2)
        assert slack >= 0

    def test_ar_design_gaussian_parameters(self):
        # Monte-Carlo falsification oracle on the certified (mu, tau)
        N, d = 400, 50
        X = datagen.gen_ar_design(N, d, seed=3)
        inp = base_inputs(N=N, d=d, n=N, m=1)
        rsc = theory.rsc_from_gaussian(inp)
        slack = theory.rsc_check(X, rsc, num_dirs=10000, seed=4)
        assert slack >= 0


class TestConeMembership:
    def make_solved(self, seed=0):
        truth = datagen.gen_sparse_truth(12, 2, seed=seed)
        X = datagen.gen_ar_design(60, 12, seed=seed + 1)
        ds = datagen.gen_observations(X, truth, sigma=0.4, seed=seed + 2)
        shards = datagen.partition(ds, 3)
        w = graph.metropolis_weights(graph.build_topology("complete", 3))
        return truth, ds, shards, w

    def test_consensual_supported_direction(self):
        truth, ds, shards, w = self.make_solved()
        delta_vec = np.zeros(12)
        delta_vec[truth.support] = [1.0, -2.0]
        delta = solver.StackedState(blocks=np.tile(delta_vec, (3, 1)))
        res = theory.cone_membership(delta, truth, gamma=1e-3, lam=0.1,
                                     shards=shards, rho=w.rho)
        assert res == pytest.approx(3 * 3.0)  # 3 * ||delta_S||_1, h(gamma,0)=0

    def test_zero_direction(self):
        truth, ds, shards, w = self.make_solved(seed=5)
        delta = solver.StackedState(blocks=np.zeros((3, 12)))
        assert theory.cone_membership(delta, truth, 1e-3, 0.1, shards,
                                      w.rho) == 0.0

    def test_missing_noise_record(self):
        truth, ds, shards, w = self.make_solved(seed=6)
        for sh in shards.shards:
            sh.noise = None
        delta = solver.StackedState(blocks=np.zeros((3, 12)))
        with pytest.raises(errors.ConfigError):
            theory.cone_membership(delta, truth, 1e-3, 0.1, shards, w.rho)

    def test_solver_output_in_cone(self):
        truth, ds, shards, w = self.make_solved(seed=7)
        lam = max(2.0 * np.abs(ds.X.T @ ds.noise).max() / ds.N, 0.05)
        gamma = 1e-3
        beta = theory.choose_beta(gamma, solver.max_shard_lipschitz(shards),
                                  w.lambda_min)
        cfg = solver.SolverConfig(lam=lam, gamma=gamma, beta=beta,
                                  radius=2 * truth.l1_norm + 1.0,
                                  max_iters=200000, rel_tol=1e-14)
        trace = solver.run(shards, w, cfg, truth=truth)
        delta = solver.StackedState(
            blocks=trace.final_state.blocks - truth.theta)
        res = theory.cone_membership(delta, truth, gamma, lam, shards, w.rho)
        assert res >= -1e-9


class TestErrorBound:
    def test_gamma_to_zero_limit(self):
        inp = base_inputs()
        rsc = theory.RscParams(mu=0.64, tau=1e-4)
        delta = rsc.mu / 2 - 16 * inp.s * rsc.tau
        lam = 0.1
        b = theory.error_bound_eval(inp, rsc, lam, gamma=1e-14, noise_inf=0.5)
        assert b == pytest.approx(9 * lam ** 2 * inp.s / delta ** 2, rel=1e-6)

    def test_monotone_in_gamma(self):
        inp = base_inputs()
        rsc = theory.RscParams(mu=0.64, tau=1e-4)
        gammas = np.linspace(1e-5, 1e-3, 8)
        vals = [theory.error_bound_eval(inp, rsc, 0.1, g, 0.5) for g in gammas]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_gamma_range_enforced(self):
        inp = base_inputs()
        rsc = theory.RscParams(mu=0.64, tau=1e-4)
        with pytest.raises(errors.RegimeError):
            theory.error_bound_eval(inp, rsc, 0.1, gamma=1.0, noise_inf=0.5)


class TestDiagnosticsReport:
    def test_report_shape(self):
        rep = theory.diagnostics_report(base_inputs())
        assert set(rep) >= {"lambda_rule", "gamma_rule", "beta_rule",
                            "rsc_gaussian"}
        for entry in rep.values():
            assert "definition" in entry or "error" in entry

    def test_constant_lower_bound_enforced(self):
        with pytest.raises(errors.ConfigError):
            base_inputs(constants={"c10_tilde": 2.0})
        inp = base_inputs(constants={"c10_tilde": 1824.0, "c4": 0.5})
        assert inp.const("c4") == 0.5
