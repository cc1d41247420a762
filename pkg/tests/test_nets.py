import math

import numpy as np
import pytest

from mixheat import nets
from mixheat.coefficients import (
    CoefficientSpec,
    DiracTerm,
    DistributionSpec,
    MollifierSpec,
    SmoothTerm,
)
from mixheat.errors import CgDivergence, NetAborted, NotRegularData, UnresolvedKernel
from mixheat.evolve import RunConfig
from mixheat.nets import (
    DEFAULT_EPSILONS,
    NetConfig,
    consistency_experiment,
    refinement_study,
    resolved_epsilons,
    run_net,
    uniqueness_experiment,
)
from mixheat.spectral import GridSpec

# unit-mass bump psi: int psi^2 and int psi'^2, by adaptive quadrature of
# exp(-1/(1 - z^2)) outside this package
BUMP_L2_SQ = 0.6751168130096978
BUMP_DX_SQ = 2.077745668366742

GRID = GridSpec(1, 4096)
RUN = RunConfig(T=0.1, dt=0.01)


def smooth(text):
    return DistributionSpec((SmoothTerm(text),), True)


def make_cfg(c_singular=None, u0=None, **kw):
    return NetConfig(
        grid=kw.pop("grid", GRID),
        s=0.5,
        coeff_a=CoefficientSpec(1.0, smooth("1 + sin(x)")),
        coeff_b=CoefficientSpec(1.0, smooth("0.5 + 0.5*cos(x)")),
        coeff_c=CoefficientSpec(1.0, c_singular or DistributionSpec((), True)),
        u0_spec=u0 or DistributionSpec((SmoothTerm("gauss(x, pi, 0.5)"),)),
        run=kw.pop("run", RUN),
        **kw,
    )


def delta(weight=1.0):
    return DistributionSpec((DiracTerm((math.pi,), weight),), True)


class TestNetConfig:
    def test_defaults(self):
        cfg = make_cfg()
        assert cfg.epsilons == DEFAULT_EPSILONS
        assert cfg.is_regular

    def test_rejects_unresolved(self):
        with pytest.raises(UnresolvedKernel):
            make_cfg(grid=GridSpec(1, 256))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            make_cfg(epsilons=(0.1, 0.2))

    def test_clamp(self):
        kept, clamped = resolved_epsilons(DEFAULT_EPSILONS, MollifierSpec(), GridSpec(1, 512))
        # 2h = 4 pi / 512 ~ 0.0245 resolves omega down to 1/32
        assert kept == DEFAULT_EPSILONS[:3]
        assert clamped == DEFAULT_EPSILONS[3:]


class TestRunNet:
    def test_smooth_data_flat(self):
        rep = run_net(make_cfg())
        assert rep.moderateness.fitted_exponent == pytest.approx(0.0, abs=0.1)
        assert rep.verdict == "moderate"

    def test_delta_coefficient(self):
        rep = run_net(make_cfg(c_singular=delta()))
        assert rep.all_apriori_satisfied
        assert rep.verdict == "moderate"
        assert len(rep.per_eps) == len(DEFAULT_EPSILONS)
        assert not rep.failures

    def test_delta_initial_value(self):
        rep = run_net(make_cfg(u0=DistributionSpec((DiracTerm((math.pi,)),))))
        h1 = [r.sup_t_h1_sq for r in rep.per_eps]
        assert all(b > a for a, b in zip(h1, h1[1:]))
        assert rep.moderateness.fit_quality >= 0.9
        assert math.isfinite(rep.moderateness.fitted_exponent)
        for r in rep.per_eps:
            oracle = BUMP_L2_SQ / r.eps + BUMP_DX_SQ / r.eps**3
            # the solution never exceeds C_eps times the initial H^1 norm
            assert r.sup_t_h1_sq <= r.C_eps * oracle
            if r.eps >= 1 / 32:
                # kernel spans at least 20 cells: sup is the initial value
                assert r.sup_t_h1_sq == pytest.approx(oracle, rel=1e-3)

    def test_C_eps_exponent(self):
        rep = run_net(make_cfg(c_singular=delta(1.0)))
        eps = np.array([r.eps for r in rep.per_eps])
        C = np.array([r.C_eps for r in rep.per_eps])
        # C_eps = K (alpha + beta / omega); the slope approaches 1 as omega -> 0
        local = math.log(C[-1] / C[-2]) / math.log(eps[-2] / eps[-1])
        assert local == pytest.approx(1.0, abs=0.1)
        heavy = run_net(make_cfg(c_singular=delta(10.0)))
        C = [r.C_eps for r in heavy.per_eps]
        slope = -np.polyfit(np.log(eps), np.log(C), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.1)

    def test_thread_count_does_not_change_report(self):
        cfg = make_cfg(c_singular=delta())
        assert run_net(cfg).to_dict() == run_net(cfg, threads=3).to_dict()

    def test_aborts_when_most_fail(self):
        cfg = make_cfg(c_singular=delta(), run=RunConfig(T=0.1, dt=0.05, cg_max_iter=1))
        with pytest.raises(NetAborted) as info:
            run_net(cfg)
        assert len(info.value.failures) == len(DEFAULT_EPSILONS)

    def test_records_single_failure(self, monkeypatch):
        real = nets._net_member

        def flaky(cfg, eps):
            if eps == DEFAULT_EPSILONS[2]:
                raise CgDivergence(1e-3, 1, step=1)
            return real(cfg, eps)

        monkeypatch.setattr(nets, "_net_member", flaky)
        rep = run_net(make_cfg())
        assert list(rep.failures) == [DEFAULT_EPSILONS[2]]
        assert len(rep.per_eps) == len(DEFAULT_EPSILONS) - 1
        assert rep.moderateness is not None


class TestUniqueness:
    def test_zero_perturbation(self):
        rep = uniqueness_experiment(make_cfg(), "none")
        assert rep.differences == (0.0,) * len(DEFAULT_EPSILONS)
        assert all(ok for _, ok in rep.per_q)

    def test_exp_small_coefficients(self):
        rep = uniqueness_experiment(make_cfg(), "exp_small")
        assert all(ok for q, ok in rep.per_q if q <= 10)
        assert rep.conclusive

    def test_exp_small_initial(self):
        rep = uniqueness_experiment(make_cfg(), "initial_exp_small")
        assert rep.negligible_up_to_q == 10

    def test_power_control(self):
        rep = uniqueness_experiment(make_cfg(), "power")
        per_q = dict(rep.per_q)
        assert per_q[1] and not per_q[2]

    def test_unknown(self):
        with pytest.raises(ValueError):
            uniqueness_experiment(make_cfg(), "large")


class TestConsistency:
    @pytest.mark.parametrize("profile", ["bump", "truncated_gaussian"])
    def test_rate_and_monotone(self, profile):
        rep = consistency_experiment(make_cfg(mollifier=MollifierSpec(profile)))
        assert rep.monotone
        assert rep.fitted_rate == pytest.approx(2.0, abs=0.3)
        assert rep.fitted_rate_L2H1 == pytest.approx(2.0, abs=0.3)

    def test_without_mollification(self):
        rep = consistency_experiment(make_cfg(epsilons=(0.125,)), mollify=False)
        assert rep.errors_CL2 == (0.0,) and rep.errors_L2H1 == (0.0,)

    def test_rejects_singular(self):
        with pytest.raises(NotRegularData):
            consistency_experiment(make_cfg(c_singular=delta()))


class TestRefinement:
    def test_orders_and_spatial(self):
        rep = refinement_study(ns=(16, 64, 256))
        assert rep.temporal_orders["backward_euler"] == pytest.approx(1.0, abs=0.1)
        assert rep.temporal_orders["crank_nicolson"] == pytest.approx(2.0, abs=0.1)
        assert all(err <= 1e-8 for err in rep.spatial_errors.values())
