import math

import pytest

from testroll.bernoulli_model import BernoulliState, DesignContext, error_prob
from testroll.criteria import evaluate
from testroll.dist_core import normal_cdf
from testroll.errors import ConfigurationError, DomainError
from testroll.gaussian_model import GaussianState
from testroll.montecarlo import SimConfig, simulate_error_prob, simulate_regret


def within(est, exact, z=3.0):
    return abs(est.mean - exact) <= z * est.std_error


class TestErrorSimulation:
    def test_symmetric_state(self):
        est = simulate_error_prob(SimConfig(100_000, 1, BernoulliState(0.5, 0.5), DesignContext(20, 10)))
        assert within(est, 0.5)

    def test_example(self):
        est = simulate_error_prob(SimConfig(1_000_000, 2, BernoulliState(0.7, 0.3), DesignContext(10, 4)))
        assert within(est, 0.2160)

    def test_mirrored_state(self):
        ctx, s = DesignContext(40, 14), BernoulliState(0.35, 0.6)
        est = simulate_error_prob(SimConfig(200_000, 3, s, ctx))
        assert within(est, error_prob(ctx, s))

    def test_gaussian(self):
        est = simulate_error_prob(SimConfig(100_000, 4, GaussianState(0.2, 1.0), DesignContext(200, 100)))
        assert within(est, normal_cdf(-1.0))

    def test_certain_ties(self):
        for reps in (1, 10, 1000):
            est = simulate_error_prob(SimConfig(reps, 5, BernoulliState(1.0, 1.0), DesignContext(10, 4)))
            assert est.mean == 0.5
            assert est.std_error == 0.0

    def test_requires_experiment(self):
        with pytest.raises(DomainError):
            simulate_error_prob(SimConfig(10, 0, BernoulliState(0.6, 0.4), DesignContext(10, 0)))

    def test_odd_m(self):
        with pytest.raises(DomainError):
            SimConfig(10, 0, BernoulliState(0.6, 0.4), DesignContext(10, 3))


class TestRegretSimulation:
    def test_diagonal(self):
        est = simulate_regret(SimConfig(50_000, 6, BernoulliState(0.4, 0.4), DesignContext(100, 20)))
        assert abs(est.mean) <= 3 * est.std_error

    def test_example(self):
        est = simulate_regret(SimConfig(1_000_000, 7, BernoulliState(0.7, 0.3), DesignContext(10, 4)))
        assert within(est, 1.3184)

    def test_no_experiment(self):
        est = simulate_regret(SimConfig(100_000, 8, BernoulliState(0.6, 0.4), DesignContext(500, 0)))
        assert within(est, 50.0)

    def test_full_experiment(self):
        ctx, s = DesignContext(30, 30), BernoulliState(0.2, 0.5)
        est = simulate_regret(SimConfig(100_000, 9, s, ctx))
        assert within(est, evaluate(ctx, s).regret)

    def test_gaussian(self):
        est = simulate_regret(SimConfig(100_000, 10, GaussianState(0.2, 1.0), DesignContext(200, 100)))
        exact = 50 * 0.2 + 100 * 0.2 * normal_cdf(-1.0)
        assert within(est, exact)


class TestReproducibility:
    def test_same_seed_identical(self):
        cfg = SimConfig(120_000, 42, BernoulliState(0.45, 0.4), DesignContext(60, 20))
        assert simulate_error_prob(cfg) == simulate_error_prob(cfg)

    def test_independent_of_workers(self):
        base = dict(replications=130_000, seed=9, model=BernoulliState(0.45, 0.4),
                    ctx=DesignContext(60, 20), batch_size=10_000)
        a = simulate_regret(SimConfig(workers=1, **base))
        b = simulate_regret(SimConfig(workers=4, **base))
        assert a == b

    def test_seed_changes_estimate(self):
        s, ctx = BernoulliState(0.45, 0.4), DesignContext(60, 20)
        assert simulate_error_prob(SimConfig(10_000, 1, s, ctx)) != simulate_error_prob(SimConfig(10_000, 2, s, ctx))

    def test_standard_error_scaling(self):
        s, ctx = BernoulliState(0.55, 0.45), DesignContext(40, 20)
        small = simulate_error_prob(SimConfig(20_000, 3, s, ctx))
        large = simulate_error_prob(SimConfig(80_000, 3, s, ctx))
        ratio = small.std_error / large.std_error
        assert 1.0 <= ratio <= 4.0
        assert ratio == pytest.approx(2.0, rel=0.1)

    def test_batches(self):
        cfg = SimConfig(25, 0, BernoulliState(0.5, 0.4), DesignContext(10, 4), batch_size=10)
        assert cfg.batch_sizes() == [10, 10, 5]


class TestConfig:
    @pytest.mark.parametrize("kwargs", [dict(replications=0), dict(seed=-1), dict(seed=2**64),
                                        dict(workers=0), dict(model="bernoulli")])
    def test_rejects(self, kwargs):
        base = dict(replications=10, seed=0, model=BernoulliState(0.5, 0.4), ctx=DesignContext(10, 4))
        base.update(kwargs)
        with pytest.raises(ConfigurationError):
            SimConfig(**base)

    def test_single_replication(self):
        est = simulate_error_prob(SimConfig(1, 0, BernoulliState(0.5, 0.4), DesignContext(10, 4)))
        assert est.std_error == 0.0
        assert est.mean in (0.0, 0.5, 1.0)
        assert math.isfinite(est.mean)
