import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procqa import autodiff as ad
from procqa.autodiff import ContractError, DimensionError, NumericsError, Tape, Tensor


from oracles import central_diff, rel_err


class TestMatmul:
    def test_identity(self):
        b = Tensor([[2.0, -1.0], [0.5, 3.0]])
        out = ad.matmul(Tensor(np.eye(2)), b)
        assert np.array_equal(out.data, b.data)

    def test_hand_computed_product(self):
        out = ad.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[5.0], [6.0]]))
        assert np.array_equal(out.data, [[17.0], [39.0]])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        a = Tensor(rng.standard_normal((3, 3)), requires_grad=True)
        b = Tensor(rng.standard_normal((3, 3)))

        def loss_fn():
            return ad.sum_all(ad.matmul(a, b))

        with Tape() as tape:
            loss = loss_fn()
        tape.backward(loss)
        assert rel_err(a.grad, central_diff(loss_fn, a)) < 1e-6

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
            ad.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


class TestSoftmax:
    def test_uniform_on_equal_inputs(self):
        out = ad.softmax_row(Tensor([0.0, 0.0, 0.0]))
        assert np.allclose(out.data, [1 / 3] * 3, atol=1e-15)

    def test_single_entry(self):
        out = ad.softmax_row(Tensor([123.4]))
        assert out.data.tolist() == [1.0]

    def test_two_entry_value(self):
        out = ad.softmax_row(Tensor([1.0, 0.0]))
        assert np.allclose(out.data, [0.7310586, 0.2689414], atol=1e-6)

    def test_nonfinite_input_rejected(self):
        with pytest.raises(NumericsError):
            ad.softmax_row(Tensor([np.inf, 0.0]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(min_value=-60, max_value=60), min_size=1, max_size=8))
    def test_simplex_property(self, values):
        out = ad.softmax_row(Tensor(values)).data
        assert np.all(out >= 0)
        assert abs(out.sum() - 1.0) < 1e-12

    def test_large_values_are_stabilized(self):
        out = ad.softmax_row(Tensor([1000.0, 1000.0])).data
        assert np.allclose(out, [0.5, 0.5])


class TestElementwise:
    def test_relu(self):
        out = ad.relu(Tensor([-1.0, 0.0, 2.0]))
        assert out.data.tolist() == [0.0, 0.0, 2.0]

    def test_mean_pool_identical_rows(self):
        row = [1.5, -2.0, 0.25]
        out = ad.mean_pool(Tensor([row] * 4), axis=0)
        assert out.data.tolist() == row

    def test_cross_entropy_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        logits = Tensor(rng.standard_normal(5), requires_grad=True)

        def loss_fn():
            return ad.cross_entropy(logits, 3)

        with Tape() as tape:
            loss = loss_fn()
        tape.backward(loss)
        assert rel_err(logits.grad, central_diff(loss_fn, logits)) < 1e-6

    def test_cross_entropy_bad_target(self):
        with pytest.raises(IndexError):
            ad.cross_entropy(Tensor([0.0, 1.0]), 2)

    def test_embedding_lookup_and_range_error(self):
        table = Tensor(np.arange(12.0).reshape(4, 3))
        out = ad.embedding_lookup(table, [2, 0])
        assert out.data.tolist() == [[6.0, 7.0, 8.0], [0.0, 1.0, 2.0]]
        with pytest.raises(IndexError, match="out of range"):
            ad.embedding_lookup(table, [4])

    def test_add_shape_mismatch(self):
        with pytest.raises(DimensionError):
            ad.add(Tensor([1.0]), Tensor([1.0, 2.0]))

    def test_mul_dot_concat(self):
        a, b = Tensor([2.0, 3.0]), Tensor([4.0, 5.0])
        assert ad.mul(a, b).data.tolist() == [8.0, 15.0]
        assert float(ad.dot(a, b).data) == 23.0
        assert ad.concat([a, b]).data.tolist() == [2.0, 3.0, 4.0, 5.0]

    def test_sigmoid_tanh_values(self):
        assert float(ad.sigmoid(Tensor([0.0])).data[0]) == 0.5
        assert float(ad.tanh(Tensor([0.0])).data[0]) == 0.0


class TestBackward:
    def test_sum_gives_ones(self):
        p = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.sum_all(p)
        tape.backward(loss)
        assert p.grad.tolist() == [1.0, 1.0, 1.0]

    def test_dot_self_hand_derivative(self):
        p = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.dot(p, p)
        tape.backward(loss)
        assert p.grad.tolist() == [2.0, 4.0]

    def test_rerun_after_zeroing_is_identical(self):
        p = Tensor([0.3, -0.7, 1.1], requires_grad=True)

        def run():
            p.zero_grad()
            with Tape() as tape:
                loss = ad.sum_all(ad.mul(ad.tanh(p), p))
            tape.backward(loss)
            return p.grad.copy()

        g1, g2 = run(), run()
        assert np.array_equal(g1, g2)

    def test_accumulation_is_additive_across_backwards(self):
        p = Tensor([1.0, 1.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.sum_all(p)
        tape.backward(loss)
        tape.backward(loss)
        assert p.grad.tolist() == [2.0, 2.0]

    def test_non_scalar_loss_rejected(self):
        p = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            out = ad.relu(p)
        with pytest.raises(ContractError):
            tape.backward(out)

    def test_foreign_loss_rejected(self):
        p = Tensor([1.0], requires_grad=True)
        with Tape() as tape:
            ad.sum_all(p)
        other = ad.sum_all(p)  # built outside the tape
        with pytest.raises(ContractError):
            tape.backward(other)

    def test_unrelated_tensor_untouched(self):
        p = Tensor([1.0, 2.0], requires_grad=True)
        bystander = Tensor([5.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.sum_all(p)
        tape.backward(loss)
        assert bystander.grad is None

    def test_no_tape_records_nothing(self):
        p = Tensor([1.0], requires_grad=True)
        out = ad.relu(p)
        assert out.requires_grad is False

    def test_branching_graph_accumulates(self):
        p = Tensor([2.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.sum_all(ad.add(ad.mul(p, p), p))  # p^2 + p -> 2p + 1 = 5
        tape.backward(loss)
        assert p.grad.tolist() == [5.0]


class TestDeterminism:
    def test_forward_is_bitwise_deterministic(self):
        rng = np.random.default_rng(7)
        x = Tensor(rng.standard_normal((4, 4)))

        def run():
            return ad.softmax_row(ad.matmul(x, ad.transpose(x))).data.copy()

        assert np.array_equal(run(), run())

    def test_fused_ops_untaped_match_taped(self):
        rng = np.random.default_rng(8)
        xs = Tensor(rng.standard_normal((3, 4)))
        wx = Tensor(rng.standard_normal((8, 4)), requires_grad=True)
        wh = Tensor(rng.standard_normal((8, 2)), requires_grad=True)
        b = Tensor(np.zeros(8), requires_grad=True)
        plain = ad.lstm_sequence(xs, wx, wh, b).data
        with Tape():
            taped = ad.lstm_sequence(xs, wx, wh, b).data
        assert np.array_equal(plain, taped)
