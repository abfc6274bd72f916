import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procqa import autodiff as ad
from procqa import blocks
from procqa.autodiff import ContractError, DimensionError, Tape, Tensor
from procqa.blocks import EmbeddingTable, GatedRecurrentCell, MLPHead, encode_sequence, question_attend

from oracles import central_diff, rel_err


def zeroed(cell):
    for p in cell.params("c").values():
        p.data = np.zeros_like(p.data)
    return cell


class TestEncodeSequence:
    def test_zero_params_zero_inputs_give_zero_state(self):
        cell = zeroed(GatedRecurrentCell(3, 4, np.random.default_rng(0)))
        final, _ = encode_sequence(cell, Tensor(np.zeros((5, 3))))
        assert np.array_equal(final.data, np.zeros(4))

    def test_single_step_equals_one_cell_application(self):
        rng = np.random.default_rng(1)
        cell = GatedRecurrentCell(3, 4, rng)
        x = Tensor(rng.standard_normal(3))
        h0, c0 = cell.zero_state()
        h1, _ = cell.step(x, h0, c0)
        final, _ = encode_sequence(cell, [x])
        assert np.allclose(final.data, h1.data, atol=1e-15)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(2)
        cell = GatedRecurrentCell(4, 4, rng)
        xs = Tensor(rng.standard_normal((3, 4)))
        params = cell.params("cell")

        def loss_fn():
            final, _ = encode_sequence(cell, xs)
            return ad.sum_all(final)

        with Tape() as tape:
            loss = loss_fn()
        tape.backward(loss)
        for name, p in params.items():
            assert rel_err(p.grad, central_diff(loss_fn, p)) < 1e-4, name

    def test_empty_sequence_rejected(self):
        cell = GatedRecurrentCell(3, 4, np.random.default_rng(0))
        with pytest.raises(ContractError):
            encode_sequence(cell, [])

    def test_truncation_changes_result(self):
        rng = np.random.default_rng(3)
        cell = GatedRecurrentCell(3, 4, rng)
        xs = rng.standard_normal((6, 3))
        full, _ = encode_sequence(cell, Tensor(xs))
        trunc, _ = encode_sequence(cell, Tensor(xs[:4]))
        assert np.linalg.norm(full.data - trunc.data) > 1e-6

    def test_returns_all_hiddens(self):
        rng = np.random.default_rng(4)
        cell = GatedRecurrentCell(2, 3, rng)
        final, hs = encode_sequence(cell, Tensor(rng.standard_normal((5, 2))))
        assert hs.shape == (5, 3)
        assert np.array_equal(final.data, hs.data[-1])


class TestQuestionAttend:
    def test_equal_logits_give_uniform_weights(self):
        q = Tensor([1.0, 0.0])
        xs = Tensor([[0.0, 1.0], [0.0, 2.0], [0.0, -1.0]])  # all dot products 0
        weights, attended = question_attend(q, xs)
        assert np.allclose(weights.data, [1 / 3] * 3, atol=1e-15)
        assert np.allclose(attended.data, xs.data / 3, atol=1e-15)

    def test_single_segment(self):
        q = Tensor([0.3, 0.4])
        xs = Tensor([[5.0, -2.0]])
        weights, attended = question_attend(q, xs)
        assert weights.data.tolist() == [1.0]
        assert np.array_equal(attended.data, xs.data)

    def test_orthogonal_basis_weights(self):
        q = Tensor([1.0, 0.0])
        xs = Tensor([[1.0, 0.0], [0.0, 1.0]])
        weights, _ = question_attend(q, xs)
        assert np.allclose(weights.data, [0.7310586, 0.2689414], atol=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            question_attend(Tensor([1.0, 2.0, 3.0]), Tensor([[1.0, 2.0]]))

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=1, max_value=6),
        st.integers(min_value=1, max_value=5),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    def test_weights_on_simplex(self, n, d, seed):
        rng = np.random.default_rng(seed)
        weights, _ = question_attend(
            Tensor(rng.standard_normal(d)), Tensor(rng.standard_normal((n, d)))
        )
        assert abs(weights.data.sum() - 1.0) < 1e-12
        assert np.all(weights.data >= 0)


class TestInitialization:
    def test_same_seed_bitwise_identical(self):
        a = GatedRecurrentCell(5, 6, np.random.default_rng(42))
        b = GatedRecurrentCell(5, 6, np.random.default_rng(42))
        for (ka, pa), (kb, pb) in zip(a.params("x").items(), b.params("x").items()):
            assert ka == kb
            assert np.array_equal(pa.data, pb.data)

    def test_fan_in_bound(self):
        rng = np.random.default_rng(0)
        w = blocks.uniform_init(rng, (100, 4), fan_in=4)
        assert np.all(np.abs(w) <= 0.5)

    def test_different_seeds_differ(self):
        a = GatedRecurrentCell(5, 6, np.random.default_rng(1))
        b = GatedRecurrentCell(5, 6, np.random.default_rng(2))
        assert not np.array_equal(a.wx.data, b.wx.data)

    def test_biases_zero_except_forget_gate(self):
        cell = GatedRecurrentCell(3, 4, np.random.default_rng(0))
        b = cell.b.data
        assert np.array_equal(b[4:8], np.ones(4))
        assert np.array_equal(np.delete(b, slice(4, 8)), np.zeros(12))

    def test_embedding_padding_row_zero_and_frozen(self):
        table = EmbeddingTable(6, 3, np.random.default_rng(0))
        assert np.array_equal(table.weights.data[blocks.PAD_ID], np.zeros(3))
        with Tape() as tape:
            out = table.lookup(np.array([0, 2]))
            loss = ad.sum_all(out)
        tape.backward(loss)
        assert np.array_equal(table.weights.grad[blocks.PAD_ID], np.zeros(3))
        assert np.array_equal(table.weights.grad[2], np.ones(3))


class TestMLPHead:
    def test_output_dimension(self):
        mlp = MLPHead([4, 8, 3], np.random.default_rng(0))
        out = mlp(Tensor(np.ones(4)))
        assert out.shape == (3,)

    def test_hidden_relu_output_identity(self):
        mlp = MLPHead([2, 2, 1], np.random.default_rng(0))
        mlp.ws[0].data = -np.eye(2)  # force all hidden preactivations negative
        mlp.ws[1].data = np.ones((1, 2))
        mlp.bs[1].data = np.array([-3.0])
        out = mlp(Tensor([1.0, 2.0]))
        assert out.data.tolist() == [-3.0]  # relu clamped hidden to zero; output passes bias

    def test_gradients(self):
        rng = np.random.default_rng(5)
        mlp = MLPHead([3, 4, 2], rng)
        x = Tensor(rng.standard_normal(3))

        def loss_fn():
            return ad.sum_all(mlp(x))

        with Tape() as tape:
            loss = loss_fn()
        tape.backward(loss)
        for name, p in mlp.params("mlp").items():
            assert rel_err(
                p.grad if p.grad is not None else np.zeros(p.data.shape),
                central_diff(loss_fn, p),
            ) < 1e-4, name
