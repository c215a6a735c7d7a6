"""Hand-derived values and properties for every training objective."""

import math

import numpy as np
import pytest
import torch

from ogstyle import losses as L
from ogstyle.errors import DataError


class TestLossWeights:
    def test_defaults_match_documented_settings(self):
        w = L.LossWeights()
        assert (w.alpha, w.beta, w.gamma, w.tau) == (0.7, 1.0, 1.0, 0.1)

    def test_ranges_enforced(self):
        with pytest.raises(DataError):
            L.LossWeights(alpha=1.5)
        with pytest.raises(DataError):
            L.LossWeights(beta=-0.1)
        with pytest.raises(DataError):
            L.LossWeights(tau=0.0)


class TestSupLoss:
    def test_perfect_prediction_is_zero(self):
        target = torch.tensor([2, 0, 1])
        pred = torch.nn.functional.one_hot(target, 4).to(torch.float64)
        assert float(L.sup_loss(pred, target)) == pytest.approx(0.0, abs=1e-9)

    def test_uniform_prediction_hand_value(self):
        # one position, uniform over V=4 -> log 4
        pred = torch.full((1, 4), 0.25, dtype=torch.float64)
        target = torch.tensor([2])
        assert float(L.sup_loss(pred, target)) == pytest.approx(math.log(4), abs=1e-6)

    def test_matches_scalar_loop_oracle(self):
        gen = torch.Generator().manual_seed(0)
        pred = torch.softmax(torch.randn(3, 5, 7, generator=gen, dtype=torch.float64), -1)
        target = torch.randint(0, 7, (3, 5), generator=gen)
        got = float(L.sup_loss(pred, target))
        total = 0.0
        for b in range(3):
            for n in range(5):
                total += -math.log(float(pred[b, n, int(target[b, n])]))
        assert got == pytest.approx(total / 3, abs=1e-9)

    def test_mask_excludes_padding_positions(self):
        pred = torch.full((1, 2, 4), 0.25, dtype=torch.float64)
        target = torch.tensor([[1, 2]])
        mask = torch.tensor([[True, False]])
        assert float(L.sup_loss(pred, target, mask)) == pytest.approx(math.log(4), abs=1e-9)

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            L.sup_loss(torch.full((1, 2, 4), 0.25), torch.tensor([[1, 2, 3]]))


class TestLmLoss:
    def test_matching_one_hot_is_zero(self):
        pi = torch.nn.functional.one_hot(torch.tensor([1, 3]), 4).to(torch.float64)
        assert float(L.lm_loss(pi, pi.clone())) == pytest.approx(0.0, abs=1e-9)

    def test_hand_value(self):
        pi = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
        q = torch.tensor([[0.9, 0.1]], dtype=torch.float64)
        assert float(L.lm_loss(pi, q)) == pytest.approx(-math.log(0.9), abs=1e-6)

    def test_grid_search_minimum_is_at_pi_with_entropy_value(self):
        # fixed pi = [0.8, 0.2]: scan q over the simplex
        pi = torch.tensor([[0.8, 0.2]], dtype=torch.float64)
        entropy = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2))
        best_q, best_val = None, math.inf
        for q0 in np.linspace(1e-6, 1 - 1e-6, 2001):
            val = float(L.lm_loss(pi, torch.tensor([[q0, 1 - q0]], dtype=torch.float64)))
            if val < best_val:
                best_q, best_val = q0, val
        assert best_q == pytest.approx(0.8, abs=1e-3)
        assert best_val == pytest.approx(entropy, abs=1e-6)
        assert entropy == pytest.approx(0.5004, abs=1e-4)

    def test_lower_bound_by_entropy(self):
        gen = torch.Generator().manual_seed(1)
        for _ in range(50):
            pi = torch.softmax(torch.randn(1, 6, generator=gen, dtype=torch.float64), -1)
            q = torch.softmax(torch.randn(1, 6, generator=gen, dtype=torch.float64), -1)
            entropy = float(-(pi * pi.log()).sum(-1).mean())
            assert float(L.lm_loss(pi, q)) >= entropy - 1e-9
            assert float(L.lm_loss(pi, pi.clone())) == pytest.approx(entropy, abs=1e-9)

    def test_misaligned_lengths_rejected(self):
        with pytest.raises(DataError):
            L.lm_loss(torch.full((2, 3), 0.5), torch.full((3, 3), 0.5))


class TestSsLoss:
    def test_identical_representations_are_zero(self):
        x = torch.randn(4, 8, dtype=torch.float64)
        assert float(L.ss_loss(x, x.clone())) == pytest.approx(0.0, abs=1e-9)

    def test_orthogonal_pair_is_one(self):
        a = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
        b = torch.tensor([[0.0, 1.0]], dtype=torch.float64)
        assert float(L.ss_loss(a, b)) == pytest.approx(1.0, abs=1e-9)

    def test_mixed_batch_hand_value(self):
        # cosines {1, 0} -> ((1-1)^2 + (1-0)^2) / 2 = 0.5
        a = torch.tensor([[1.0, 0.0], [1.0, 0.0]], dtype=torch.float64)
        b = torch.tensor([[2.0, 0.0], [0.0, 3.0]], dtype=torch.float64)
        assert float(L.ss_loss(a, b)) == pytest.approx(0.5, abs=1e-9)

    def test_zero_norm_contributes_maximum_and_warns(self, caplog):
        a = torch.tensor([[0.0, 0.0]], dtype=torch.float64)
        b = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
        with caplog.at_level("WARNING"):
            val = float(L.ss_loss(a, b))
        assert val == pytest.approx(1.0, abs=1e-9)
        assert any("zero-norm" in r.message for r in caplog.records)

    def test_range_is_zero_to_four(self):
        gen = torch.Generator().manual_seed(2)
        for _ in range(50):
            a = torch.randn(5, 6, generator=gen, dtype=torch.float64)
            b = torch.randn(5, 6, generator=gen, dtype=torch.float64)
            val = float(L.ss_loss(a, b))
            assert 0.0 <= val <= 4.0
        anti = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
        assert float(L.ss_loss(anti, -anti)) == pytest.approx(4.0, abs=1e-9)


class TestCombinations:
    def test_unsup_linear_form(self):
        w = L.LossWeights(beta=1.0, gamma=1.0)
        assert L.unsup_loss(0.5, 0.25, w) == pytest.approx(0.75)

    def test_joint_hand_value(self):
        w = L.LossWeights(alpha=0.7)
        assert L.joint_loss(2.0, 0.0, w) == pytest.approx(1.4)

    def test_alpha_one_reduces_to_supervised_objective(self):
        w = L.LossWeights(alpha=1.0)
        assert L.joint_loss(3.3, 123.0, w) == pytest.approx(3.3)

    def test_affine_in_each_component(self):
        w = L.LossWeights(alpha=0.7, beta=2.0, gamma=0.5)
        for s, u in [(0.0, 0.0), (1.0, 2.0), (5.0, 3.0)]:
            expected = 0.7 * s + 0.3 * u
            assert L.joint_loss(s, u, w) == pytest.approx(expected, abs=1e-12)

    def test_supervised_scaling_scales_gradient_by_c_alpha(self):
        w = L.LossWeights(alpha=0.7)
        for c in (0.5, 2.0, 3.0):
            l_sup = torch.tensor(1.3, dtype=torch.float64, requires_grad=True)
            L.joint_loss(c * l_sup, torch.tensor(0.4, dtype=torch.float64), w).backward()
            assert float(l_sup.grad) == pytest.approx(c * 0.7, abs=1e-12)


class TestLossBreakdown:
    def test_invariants_hold_exactly(self):
        w = L.LossWeights(alpha=0.7, beta=2.0, gamma=0.5)
        b = L.LossBreakdown.from_components(1.5, 0.8, 0.3, w)
        assert abs(b.l_unsup - (2.0 * 0.8 + 0.5 * 0.3)) <= 1e-9
        assert abs(b.l_total - (0.7 * 1.5 + 0.3 * b.l_unsup)) <= 1e-9

    def test_as_dict_round_trip_fields(self):
        b = L.LossBreakdown.from_components(1.0, 0.5, 0.25, L.LossWeights())
        d = b.as_dict()
        assert set(d) == {"l_sup", "l_lm", "l_ss", "l_unsup", "l_total",
                          "alpha", "beta", "gamma"}
