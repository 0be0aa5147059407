"""Base learners: contracts, regret behavior, pools, wrappers."""

import math

import numpy as np
import pytest

from ogboost.core import Example
from ogboost.losses import LossClass
from ogboost.learners import (
    FunctionPool,
    GreedyFitLearner,
    HedgeLearner,
    LinearFeedback,
    OnlineGradientLearner,
    StumpLearner,
    greedy_adapter,
    hedge_committee,
    make_lower_bound_pool,
    symmetrize,
)


def _ex(features, label=None, eid=-1):
    return Example(features, label, eid)


def _random_linear_stream(rng, rounds, n_features=5):
    """(example, feedback) pairs with unit-bounded feature vectors."""
    out = []
    for t in range(rounds):
        x = rng.uniform(-1, 1, n_features)
        x /= max(float(np.linalg.norm(x)), 1.0)
        feats = {j: float(v) for j, v in enumerate(x) if v != 0.0}
        g = float(rng.uniform(-1, 1))
        out.append((_ex(feats, eid=t), g))
    return out


class TestFeedbackContract:
    def test_norm_violation_raises(self):
        lrn = OnlineGradientLearner()
        with pytest.raises(ValueError):
            lrn.update(_ex({0: 1.0}), 1.5)

    def test_wrapper_accepted(self):
        lrn = OnlineGradientLearner()
        lrn.update(_ex({0: 1.0}), LinearFeedback(-1.0))
        assert lrn.updates == 1


class TestOnlineGradientLearner:
    def test_zero_weights_predict_zero(self):
        assert OnlineGradientLearner().predict(_ex({0: 3.0, 7: -1.0})) == 0.0

    def test_single_step(self):
        # w <- w - eta_t * g * x with eta_1 = D / (G * sqrt(1)) = 1
        lrn = OnlineGradientLearner(output_bound=1.0, lr_scale=0.1)
        lrn.update(_ex({0: 1.0}), -1.0)
        assert lrn.w[0] == pytest.approx(0.1, abs=1e-15)

    def test_boundary_projection(self):
        # oracle: take the unprojected step by hand, then scale to the ball
        lrn = OnlineGradientLearner(output_bound=1.0, lr_scale=1.0)
        lrn.w = {0: 1.0}
        lrn._norm2 = 1.0
        lrn._gmax = 1.0
        lrn._t = 3
        step = 1.0 / (1.0 * math.sqrt(4))
        raw = 1.0 - step * (-1.0) * 1.0
        expected = raw * (1.0 / abs(raw))
        lrn.update(_ex({0: 1.0}), -1.0)
        assert lrn.w[0] == pytest.approx(expected, abs=1e-12)
        assert abs(lrn.w[0]) <= 1.0 + 1e-12

    def test_predictions_stay_bounded(self):
        rng = np.random.default_rng(3)
        lrn = OnlineGradientLearner(output_bound=0.7)
        for ex, g in _random_linear_stream(rng, 400):
            assert abs(lrn.predict(ex)) <= 0.7 + 1e-9
            lrn.update(ex, g)

    def test_no_regret_against_offline_ball_optimum(self):
        # offline oracle: linear total loss over the weight ball is
        # minimized at w* = -D * (sum g_t x_t) / ||sum g_t x_t||
        rng = np.random.default_rng(29)
        for trial in range(3):
            stream = _random_linear_stream(rng, 3000)
            d = 5
            lrn = OnlineGradientLearner(output_bound=1.0)
            cum = 0.0
            gsum = np.zeros(d)
            gmax = 0.0
            for ex, g in stream:
                cum += g * lrn.predict(ex)
                lrn.update(ex, g)
                xv = np.zeros(d)
                for k, v in ex.features.items():
                    xv[k] = v
                gsum += g * xv
                gmax = max(gmax, float(np.linalg.norm(g * xv)))
            w_star = -gsum / max(float(np.linalg.norm(gsum)), 1e-12)
            best = float(w_star @ gsum)
            assert cum <= best + 1.5 * 1.0 * gmax * math.sqrt(len(stream))


class TestStumpLearner:
    def test_no_features_predicts_zero(self):
        assert StumpLearner().predict(_ex({})) == 0.0

    def test_tie_breaks_to_lowest_feature_id(self):
        lrn = StumpLearner()
        lrn.w = {2: 0.5, 5: -0.5}
        # equal (zero) cumulative losses: lowest id wins
        assert lrn.predict(_ex({5: 1.0, 2: 1.0})) == 0.5

    def test_picks_lowest_cumulative_loss_feature(self):
        lrn = StumpLearner()
        lrn.w = {0: 0.3, 1: 0.9}
        lrn.cum_loss = {0: 5.0, 1: -2.0}
        assert lrn.predict(_ex({0: 1.0, 1: 1.0})) == pytest.approx(0.9)

    def test_prediction_clipped_to_bound(self):
        lrn = StumpLearner(output_bound=1.0)
        lrn.w = {0: 4.0}
        assert lrn.predict(_ex({0: 1.0})) == 1.0

    def test_not_much_worse_than_zero_predictor(self):
        # zero predictor's cumulative linear loss is 0; the stump's should
        # trail it by at most a sqrt-regret allowance per feature
        rng = np.random.default_rng(4)
        lrn = StumpLearner()
        cum = 0.0
        rounds = 2000
        for ex, g in _random_linear_stream(rng, rounds):
            cum += g * lrn.predict(ex)
            lrn.update(ex, g)
        n_feats = len(lrn.w)
        assert cum <= 0.0 + 3.0 * n_feats * math.sqrt(rounds)


def _const_pool(values):
    return FunctionPool([(lambda x, _v=v: _v) for v in values],
                        output_bound=max(abs(v) for v in values) or 1.0)


class TestHedgeLearner:
    def test_symmetric_pool_uniform_weights_average_zero(self):
        pool = _const_pool([0.6, -0.6])
        lrn = HedgeLearner(pool, horizon=100)
        assert lrn.predict(_ex({0: 1.0})) == pytest.approx(0.0, abs=1e-15)

    def test_equal_feedback_keeps_weights_uniform(self):
        pool = _const_pool([0.5, 0.5])
        lrn = HedgeLearner(pool, horizon=100)
        for t in range(10):
            lrn.update(_ex({0: 1.0}, eid=t), 0.7)
        np.testing.assert_allclose(lrn.weights, 0.5, atol=1e-15)

    def test_no_regret_vs_brute_force_min_arm(self):
        # oracle: enumerate every arm's cumulative linear loss directly
        rng = np.random.default_rng(8)
        m, rounds = 8, 5000
        member_vals = rng.uniform(-1, 1, size=(rounds, m))
        pool_rows = {t: member_vals[t] for t in range(rounds)}
        pool = FunctionPool([(lambda x, _j=j: float(pool_rows[x.eid][_j]))
                             for j in range(m)])
        lrn = HedgeLearner(pool, horizon=rounds)
        gs = rng.uniform(-1, 1, rounds)
        mix_loss = 0.0
        arm_loss = np.zeros(m)
        for t in range(rounds):
            ex = _ex({0: 1.0}, eid=t)
            mix_loss += gs[t] * lrn.predict(ex)
            lrn.update(ex, float(gs[t]))
            arm_loss += gs[t] * member_vals[t]
        assert mix_loss <= float(arm_loss.min()) + 2.0 * math.sqrt(rounds * math.log(m))

    def test_doubling_mode_runs_without_horizon(self):
        pool = _const_pool([0.3, -0.3])
        lrn = HedgeLearner(pool)
        for t in range(100):
            lrn.update(_ex({0: 1.0}, eid=t), 0.5)
        assert lrn.updates == 100

    def test_sample_mode_emits_pool_values(self):
        pool = _const_pool([0.25, -0.75])
        lrn = HedgeLearner(pool, horizon=50, mode="sample", seed=3)
        vals = {lrn.predict(_ex({0: 1.0}, eid=t)) for t in range(50)}
        assert vals <= {0.25, -0.75}

    def test_committee_matches_independent_copies(self):
        rng = np.random.default_rng(10)
        rounds, m, n = 300, 5, 3
        vals = rng.uniform(-1, 1, size=(rounds, m))
        rows = {t: vals[t] for t in range(rounds)}

        def build_pool():
            return FunctionPool([(lambda x, _j=j: float(rows[x.eid][_j])) for j in range(m)])

        singles = [HedgeLearner(build_pool(), horizon=rounds) for _ in range(n)]
        bank = hedge_committee(build_pool(), n, horizon=rounds)
        gs = rng.uniform(-1, 1, size=(rounds, n))
        for t in range(rounds):
            ex = _ex({0: 1.0}, eid=t)
            for i in range(n):
                a = singles[i].predict(ex)
                b = bank[i].predict(ex)
                assert a == pytest.approx(b, abs=1e-12)
            for i in range(n):
                singles[i].update(ex, float(gs[t, i]))
                bank[i].update(ex, float(gs[t, i]))


class TestSymmetrize:
    def test_requires_fresh_learner(self):
        lrn = OnlineGradientLearner()
        lrn.update(_ex({0: 1.0}), 0.5)
        with pytest.raises(ValueError):
            symmetrize(lrn)

    def test_zero_feedback_keeps_uniform_mixture(self):
        pool = _const_pool([0.4, 0.1])
        comp = symmetrize(HedgeLearner(pool, horizon=100), horizon=100)
        ex = _ex({0: 1.0}, eid=0)
        a_pos, a_neg, zero = comp.arm_outputs(ex)
        expected = (a_pos + a_neg + zero) / 3.0
        assert comp.predict(ex) == pytest.approx(expected, abs=1e-15)
        comp.update(ex, 0.0)
        np.testing.assert_allclose(comp.mix, 1.0 / 3.0, atol=1e-15)

    def test_constant_positive_feedback_favors_negative_arm(self):
        # with g = +1 every round, arm loss is its prediction; the composite
        # must track the best of (copy, negated copy, zero) up to the usual
        # multiplicative-weights allowance, and the mixture should lean on
        # whichever arm predicts negative values
        rounds = 1000
        rng = np.random.default_rng(13)

        def fresh():
            return OnlineGradientLearner(output_bound=1.0)

        comp = symmetrize(fresh(), horizon=rounds)
        mirror_pos = fresh()
        mirror_neg = fresh()
        comp_loss = 0.0
        pos_loss = neg_loss = 0.0
        for t in range(rounds):
            x = rng.uniform(0.2, 1.0)
            ex = _ex({0: float(x)}, eid=t)
            comp_loss += comp.predict(ex)
            pos_loss += mirror_pos.predict(ex)
            neg_loss += -mirror_neg.predict(ex)
            comp.update(ex, 1.0)
            mirror_pos.update(ex, 1.0)
            mirror_neg.update(ex, -1.0)
        best_arm = min(pos_loss, neg_loss, 0.0)
        assert comp_loss <= best_arm + 2.0 * math.sqrt(rounds * math.log(3)) + 1e-9

    def test_weight_shifts_to_negated_arm_for_constant_learner(self):
        # fixed-output inner learner: with g = +1 the negated copy is the
        # only arm with negative loss, so its mixing weight must dominate
        rounds = 200
        comp = symmetrize(HedgeLearner(_const_pool([0.4]), horizon=rounds),
                          horizon=rounds)
        for t in range(rounds):
            ex = _ex({0: 1.0}, eid=t)
            comp.predict(ex)
            comp.update(ex, 1.0)
        assert comp.mix[1] > comp.mix[0]
        assert comp.mix[1] > comp.mix[2]

    def test_output_bound_preserved(self):
        pool = _const_pool([1.0, -1.0])
        comp = symmetrize(HedgeLearner(pool, horizon=10), horizon=10)
        for t in range(10):
            ex = _ex({0: 1.0}, eid=t)
            assert abs(comp.predict(ex)) <= 1.0 + 1e-9
            comp.update(ex, 0.3)

    def test_symmetric_pool_learner_wrap_costs_at_most_mixing_regret(self):
        # wrapping a learner whose pool already contains negations cannot
        # lose more than the three-arm mixing allowance against the bare
        # learner run side by side
        rng = np.random.default_rng(17)
        rounds, m = 2000, 4
        vals = rng.uniform(-1, 1, size=(rounds, m))
        rows = {t: np.concatenate([vals[t], -vals[t]]) for t in range(rounds)}

        def build_pool():
            return FunctionPool([(lambda x, _j=j: float(rows[x.eid][_j]))
                                 for j in range(2 * m)])

        bare = HedgeLearner(build_pool(), horizon=rounds)
        comp = symmetrize(HedgeLearner(build_pool(), horizon=rounds), horizon=rounds)
        gs = rng.uniform(-1, 1, rounds)
        bare_loss = comp_loss = 0.0
        for t in range(rounds):
            ex = _ex({0: 1.0}, eid=t)
            bare_loss += gs[t] * bare.predict(ex)
            comp_loss += gs[t] * comp.predict(ex)
            bare.update(ex, float(gs[t]))
            comp.update(ex, float(gs[t]))
        assert comp_loss <= bare_loss + 2.0 * math.sqrt(rounds * math.log(3)) + 1e-9


class TestGreedyAdapter:
    def test_step_size_sqrt_mode(self):
        pool = _const_pool([1.0, -1.0])  # output bound D = 1
        params = LossClass("squared").ball_params(2.0)  # smoothness 1
        ad = greedy_adapter(GreedyFitLearner(pool), 10000, params, offset_bound=1.0)
        assert ad.alpha == pytest.approx(math.sqrt(2.0 * 100.0 / 10000.0), abs=1e-9)

    def test_step_size_alpha_linear_mode(self):
        pool = _const_pool([1.0, -1.0])
        params = LossClass("squared").ball_params(2.0)
        ad = greedy_adapter(GreedyFitLearner(pool), 10000, params, offset_bound=1.0,
                            regret_model="alpha-linear")
        assert ad.alpha == pytest.approx(0.02, abs=1e-12)

    def test_offset_bound_enforced(self):
        pool = _const_pool([0.5, -0.5])
        params = LossClass("squared").ball_params(2.0)
        ad = greedy_adapter(GreedyFitLearner(pool), 100, params, offset_bound=1.0)
        with pytest.raises(ValueError):
            ad.predict(_ex({0: 1.0}, eid=0), offset=1.5)

    def test_zero_alpha_degenerate(self):
        pool = _const_pool([0.5, -0.5])
        params = LossClass("squared").ball_params(2.0)
        ad = greedy_adapter(GreedyFitLearner(pool), 100, params, offset_bound=1.0,
                            regret_fn=lambda t: 0.0)
        assert ad.alpha == 0.0
        lc = LossClass("squared")
        ex = _ex({0: 1.0}, eid=0)
        p = ad.predict(ex, 0.5)
        assert abs(p) <= pool.output_bound
        ad.update(ex, 0.5, lc.make(0.2))  # loss independent of the prediction
        np.testing.assert_allclose(ad.inner.cum, ad.inner.cum[0])

    def test_linear_regret_chain_on_planted_stream(self):
        # derived check: the adapter's linear regret obeys the smoothness
        # chain sum grad.A <= sum grad.f + (beta/2) alpha D^2 T + R_true/alpha
        # against the brute-force best pool member, with R_true measured
        rng = np.random.default_rng(21)
        rounds, m = 2000, 6
        member_vals = rng.uniform(-1, 1, size=(rounds, m))
        rows = {t: member_vals[t] for t in range(rounds)}
        pool = FunctionPool([(lambda x, _j=j: float(rows[x.eid][_j])) for j in range(m)])
        lc = LossClass("squared")
        params = lc.ball_params(1.5)
        ad = greedy_adapter(GreedyFitLearner(pool), rounds, params, offset_bound=0.5)
        alpha, beta = ad.alpha, params.smoothness

        offsets = 0.4 * np.sin(np.arange(rounds) / 50.0)
        labels = np.clip(0.6 * member_vals[:, 0] + 0.05 * rng.standard_normal(rounds), -1, 1)

        lin_self = 0.0
        lin_member = np.zeros(m)
        offset_self = 0.0
        offset_member = np.zeros(m)
        for t in range(rounds):
            ex = _ex({0: 1.0}, eid=t)
            inst = lc.make(float(labels[t]))
            y0 = float(offsets[t])
            pred = ad.predict(ex, y0)
            grad = inst.gradient(y0)
            lin_self += grad * pred
            lin_member += grad * member_vals[t]
            offset_self += inst.evaluate(y0 + alpha * pred)
            offset_member += np.array([inst.evaluate(y0 + alpha * v)
                                       for v in member_vals[t]])
            ad.update(ex, y0, inst)
        r_true = max(offset_self - float(offset_member.min()), 0.0)
        bound = (beta / 2.0) * alpha * 1.0 * rounds + r_true / alpha
        assert lin_self <= float(lin_member.min()) + bound + 1e-9


class TestLowerBoundPool:
    def test_size_from_scale(self):
        pool = make_lower_bound_pool(4, seed=0)
        assert pool.size == 16000
        assert make_lower_bound_pool(4, seed=0, pool_scale=1 / 50).size == 200

    def test_degenerate_labels(self):
        pool = make_lower_bound_pool(1, seed=1, pool_scale=1 / 50)
        ones = pool.row(_ex({0: 1.0}, label=1.0, eid=0))
        zeros = pool.row(_ex({0: 2.0}, label=0.0, eid=1))
        assert np.all(ones == 1.0)
        assert np.all(zeros == 0.0)

    def test_memoization_consistent(self):
        pool = make_lower_bound_pool(2, seed=5, pool_scale=1 / 50)
        ex = _ex({0: 1.0}, label=0.5, eid=7)
        first = pool.row(ex).copy()
        again = pool.row(ex)
        np.testing.assert_array_equal(first, again)
        assert pool.members[3](ex) == first[3]

    def test_empirical_mean_concentrates(self):
        # binomial oracle: with n = 4000, p = 0.55 the mean deviates from p
        # by more than 0.03 (~3.8 sigma) with probability < 1e-3
        pool = make_lower_bound_pool(1, seed=9)  # M = 4000
        ex = _ex({0: 1.0}, label=0.55, eid=0)
        assert abs(pool.mean_value(ex) - 0.55) <= 0.03


class TestContractAcrossLearners:
    @pytest.mark.parametrize("make", [
        lambda: OnlineGradientLearner(output_bound=0.8),
        lambda: StumpLearner(output_bound=0.8),
        lambda: HedgeLearner(_const_pool([0.8, -0.4]), horizon=300),
        lambda: symmetrize(OnlineGradientLearner(output_bound=0.8), horizon=300),
    ])
    def test_predictions_bounded_after_updates(self, make):
        rng = np.random.default_rng(31)
        lrn = make()
        for ex, g in _random_linear_stream(rng, 300):
            assert abs(lrn.predict(ex)) <= lrn.output_bound + 1e-9
            lrn.update(ex, g)
