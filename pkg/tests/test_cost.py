"""Cost model: closed forms, monotonicity, bound checks, slope classification."""

import numpy as np
import pytest

from loopsim.channel import ChannelSpec, PsiKind
from loopsim.cost import (
    CostModel,
    CostVariant,
    check_quadratic_bound,
    cumulative_compute,
    flops_at,
    validate_log_rank,
)
from loopsim.engine import Mode, RunConfig, delta_monotone, run
from loopsim.measures import length_measure


FULL = CostModel(alpha_attn=2.0, alpha_ffn=3.0)
LOW_RANK = CostModel(alpha_attn=2.0, alpha_ffn=3.0, variant=CostVariant.LOW_RANK,
                     rank=4, alpha_attn_r=2.0)


def linear_norm_run(horizon=10_000):
    channel = ChannelSpec(psi_kind=PsiKind.GATED, gamma_true=10.0, gain_lo=0,
                          gain_hi=10, noise_len=8, seed=0)
    cfg = RunConfig(channel=channel, update=delta_monotone(1.0),
                    measure=length_measure(), gamma=10.0, horizon=horizon,
                    mode=Mode.ABSTRACT, initial_norm=11.0)
    return run(cfg)


class TestFlopsAt:
    def test_zero_context_costs_nothing(self):
        assert flops_at(0.0, FULL) == 0.0

    def test_full_closed_form(self):
        assert flops_at(10.0, FULL) == 230.0

    def test_low_rank_closed_form(self):
        assert flops_at(10.0, LOW_RANK) == 110.0

    def test_strictly_increasing(self):
        grid = np.linspace(0.0, 500.0, 101)
        for model in (FULL, LOW_RANK,
                      CostModel(variant=CostVariant.LOG_RANK, log_coeff=2.0)):
            values = [flops_at(n, model) for n in grid]
            assert all(b > a for a, b in zip(values, values[1:]))

    def test_full_dominates_low_rank_past_crossover(self):
        crossover = LOW_RANK.rank * LOW_RANK.alpha_attn_r / FULL.alpha_attn
        for n in np.linspace(crossover + 1e-9, 1_000.0, 50):
            assert flops_at(n, FULL) >= flops_at(n, LOW_RANK)

    def test_rejects_nonpositive_coefficients(self):
        with pytest.raises(ValueError):
            CostModel(alpha_attn=0.0)
        with pytest.raises(ValueError):
            CostModel(variant=CostVariant.LOW_RANK, rank=0)


class TestQuadraticBound:
    NORMS = [1.0, 2.0, 5.0, 10.0, 100.0, 10_000.0]

    def test_bound_at_alpha_passes(self):
        report = check_quadratic_bound(FULL, 2.0, self.NORMS)
        assert report.passed

    def test_bound_above_alpha_fails_at_large_norm(self):
        # 2n^2 + 3n < 2.5n^2 once n > 6.
        report = check_quadratic_bound(FULL, 2.5, self.NORMS)
        assert not report.passed
        assert report.smallest_failing_norm == 10.0

    def test_unit_norm_edge(self):
        report = check_quadratic_bound(FULL, 5.0, [1.0])
        assert report.passed
        assert report.largest_admissible == 5.0

    def test_rejects_low_rank(self):
        with pytest.raises(ValueError):
            check_quadratic_bound(LOW_RANK, 1.0, self.NORMS)


class TestCumulativeCompute:
    def test_constant_norm_run_is_flat(self):
        norms = np.full(2_000, 50.0)
        report = cumulative_compute(norms, FULL, fit_window=(100, 1_900))
        assert report.classification == "FLAT"
        assert report.cumulative[-1] == pytest.approx(2_000 * flops_at(50.0, FULL))

    def test_linear_divergence_is_quadratic_under_full(self):
        traj = linear_norm_run()
        report = cumulative_compute(traj, FULL, fit_window=(100, 10_000))
        assert report.classification == "QUADRATIC"
        assert report.slope == pytest.approx(2.0, abs=0.1)

    def test_same_run_is_linear_under_low_rank(self):
        traj = linear_norm_run()
        report = cumulative_compute(traj, LOW_RANK, fit_window=(100, 10_000))
        assert report.classification == "LINEAR"
        assert report.slope == pytest.approx(1.0, abs=0.1)

    def test_budget_capped_run_goes_flat(self):
        from loopsim.engine import BudgetGate
        channel = ChannelSpec(psi_kind=PsiKind.GATED, gamma_true=10.0, gain_lo=0,
                              gain_hi=10, noise_len=8, seed=0)
        cfg = RunConfig(channel=channel, update=delta_monotone(1.0),
                        measure=length_measure(), gamma=10.0, horizon=5_000,
                        mode=Mode.ABSTRACT, initial_norm=11.0,
                        budget=BudgetGate(max_norm=200.0))
        report = cumulative_compute(run(cfg), FULL, fit_window=(1_000, 5_000))
        assert report.classification == "FLAT"

    def test_total_exceeds_any_budget_below_final_step_cost(self):
        traj = linear_norm_run(horizon=2_000)
        final_step_cost = flops_at(float(traj.norms[-2]), FULL)
        assert cumulative_compute(traj, FULL).cumulative[-1] >= final_step_cost


class TestLogRank:
    def test_validation_honours_coupling(self):
        model = CostModel(variant=CostVariant.LOG_RANK, log_coeff=0.05)
        validate_log_rank(model, delta=1.0, eps=0.0, gamma=10.0)
        with pytest.raises(ValueError):
            validate_log_rank(
                CostModel(variant=CostVariant.LOG_RANK, log_coeff=0.2),
                delta=1.0, eps=0.0, gamma=10.0)

    def test_near_linear_growth(self):
        traj = linear_norm_run()
        model = CostModel(variant=CostVariant.LOG_RANK, log_coeff=0.05)
        report = cumulative_compute(traj, model, fit_window=(100, 10_000))
        assert report.classification == "LINEAR"
        assert report.slope == pytest.approx(1.0, abs=0.15)
