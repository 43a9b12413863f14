from fractions import Fraction

import pytest

from curvedkakeya.metric import (MetricError, MetricJet3, contact4_condition,
                                 flat_metric, metric_from_json,
                                 metric_genericity_sweep, metric_to_json)

F = Fraction


def worked_metric() -> MetricJet3:
    # g33 = 1 + x1^2 + x1 x2 x3, other entries flat
    return flat_metric().with_g33_perturbation({
        (2, 0, 0): F(1),
        (1, 1, 1): F(1),
    })


class TestCondition:
    def test_flat_vanishes(self):
        value, nonzero = contact4_condition(flat_metric())
        assert value == 0 and not nonzero

    def test_worked_example_exactly_two(self):
        value, nonzero = contact4_condition(worked_metric())
        assert value == 2 and nonzero

    def test_even_in_x1_x2_without_mixed_cubic(self):
        # g33 even in (x1, x2), no x1 x2 x3 term: every factor vanishes
        m = flat_metric().with_g33_perturbation({
            (2, 0, 0): F(3), (0, 2, 0): F(3),
            (2, 0, 1): F(5), (0, 2, 1): F(5),
        })
        value, nonzero = contact4_condition(m)
        assert value == 0 and not nonzero

    def test_scaling_linearity_in_cubic_block(self):
        # scaling the cubic coefficients scales the first product linearly
        base = worked_metric()
        v1, _ = contact4_condition(base)
        for s in (2, 3):
            scaled = flat_metric().with_g33_perturbation({
                (2, 0, 0): F(1),
                (1, 1, 1): F(s),
            })
            vs, _ = contact4_condition(scaled)
            assert vs == s * v1

    def test_float_agrees_with_exact(self, rng):
        for _ in range(20):
            delta = {}
            for exps in [(2, 0, 0), (0, 2, 0), (1, 1, 1), (2, 0, 1), (0, 2, 1), (1, 1, 0)]:
                delta[exps] = F(rng.randint(-64, 64), 64)
            m = flat_metric().with_g33_perturbation(delta)
            exact, _ = contact4_condition(m)
            entries = {key: float(v) for key, v in m.coefficients}
            approx = ((entries.get((3, 3, (2, 0, 0)), 0.0) * 2
                       - entries.get((3, 3, (0, 2, 0)), 0.0) * 2)
                      * entries.get((3, 3, (1, 1, 1)), 0.0)
                      - (entries.get((3, 3, (2, 0, 1)), 0.0) * 2
                         - entries.get((3, 3, (0, 2, 1)), 0.0) * 2)
                      * entries.get((3, 3, (1, 1, 0)), 0.0))
            assert abs(approx - float(exact)) <= 1e-12 * max(1.0, abs(float(exact)))


class TestValidation:
    def test_not_positive_definite(self):
        with pytest.raises(MetricError):
            MetricJet3.from_entries({(1, 1, (0, 0, 0)): F(-1),
                                     (2, 2, (0, 0, 0)): F(1),
                                     (3, 3, (0, 0, 0)): F(1)})

    def test_bad_multi_index(self):
        with pytest.raises(MetricError):
            flat_metric().with_g33_perturbation({(2, 2, 2): F(1)})

    def test_symmetric_storage(self):
        m = MetricJet3.from_entries({(1, 1, (0, 0, 0)): F(1),
                                     (2, 2, (0, 0, 0)): F(1),
                                     (3, 3, (0, 0, 0)): F(1),
                                     (2, 1, (1, 0, 0)): F(7)})
        assert m.coefficient(1, 2, (1, 0, 0)) == 7
        assert m.coefficient(2, 1, (1, 0, 0)) == 7


class TestSweep:
    def test_flat_base_generic(self):
        res = metric_genericity_sweep(flat_metric(), F(1, 16), 50, seed=3)
        assert res["fraction"] >= 0.99

    def test_zero_magnitude(self):
        res = metric_genericity_sweep(flat_metric(), F(0), 10, seed=3)
        assert res["fraction"] == 0.0

    def test_zero_trials(self):
        res = metric_genericity_sweep(flat_metric(), F(1, 16), 0, seed=3)
        assert res == {"trials": 0, "successes": 0, "fraction": None}

    def test_deterministic(self):
        a = metric_genericity_sweep(flat_metric(), F(1, 16), 20, seed=9)
        b = metric_genericity_sweep(flat_metric(), F(1, 16), 20, seed=9)
        assert a == b


class TestSerialization:
    def test_roundtrip(self):
        m = worked_metric()
        again = metric_from_json(metric_to_json(m))
        assert again == m

    def test_schema(self):
        d = metric_to_json(flat_metric())
        assert set(d) == {"entries"}
        assert all(set(e) == {"i", "j", "exps", "coef"} for e in d["entries"])
