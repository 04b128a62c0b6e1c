import numpy as np
import pytest

from s2t import tensor as T
from s2t.model import (AttentionRecord, ModelConfig, count_params,
                       decoder_forward, encoder_checksum, encoder_forward,
                       freeze_encoder, greedy_decode, greedy_decode_batch,
                       init_params, load_checkpoint, multi_head_attention,
                       param_shapes, save_checkpoint, unfreeze_encoder)

RNG = np.random.default_rng(11)


def identity_attention_params(d):
    """Q/K/V/O projections as identity maps so attention math is inspectable."""
    p = {}
    for w in ("q", "k", "v", "o"):
        p[f"attn.w{w}"] = T.Tensor(np.eye(d))
        p[f"attn.b{w}"] = T.Tensor(np.zeros(d))
    return p


class TestAttention:
    def test_singleton_support_copies_value(self):
        cfg = ModelConfig(d_a=1, d_h=4, d_f=4, n=3, m=2, vocab_size=5)
        p = identity_attention_params(4)
        q = T.Tensor(RNG.normal(size=(1, 2, 4)))
        kv = T.Tensor(RNG.normal(size=(1, 3, 4)))
        mask = np.array([False, True, False])
        out, w = multi_head_attention(q, kv, kv, mask, p, "attn", cfg)
        np.testing.assert_allclose(out.data[0, 0], kv.data[0, 1], atol=1e-12)
        assert w[0, 0, 0, 1] == 1.0
        assert w[0, 0, 0, 0] == 0.0 and w[0, 0, 0, 2] == 0.0

    def test_uniform_queries_give_uniform_weights(self):
        cfg = ModelConfig(d_a=1, d_h=4, d_f=4, n=4, m=2, vocab_size=5)
        p = identity_attention_params(4)
        q = T.Tensor(np.ones((1, 1, 4)))
        kv = T.Tensor(np.ones((1, 4, 4)))
        mask = np.array([True, True, True, False])
        _, w = multi_head_attention(q, kv, kv, mask, p, "attn", cfg)
        np.testing.assert_allclose(w[0, 0, 0], [1 / 3, 1 / 3, 1 / 3, 0.0], atol=1e-12)

    def test_hand_computed_two_key_softmax(self):
        # single head, d_h=1: scores q.k/sqrt(1) of {0, ln 3} -> {0.25, 0.75}
        cfg = ModelConfig(d_a=1, d_h=1, d_f=1, n=2, m=2, vocab_size=5)
        p = identity_attention_params(1)
        q = T.Tensor(np.array([[[1.0]]]))
        kv = T.Tensor(np.array([[[0.0], [np.log(3.0)]]]))
        _, w = multi_head_attention(q, kv, kv, np.array([True, True]), p, "attn", cfg)
        np.testing.assert_allclose(w[0, 0, 0], [0.25, 0.75], rtol=1e-12)

    def test_all_masked_row_errors(self):
        cfg = ModelConfig(d_a=1, d_h=4, d_f=4, n=3, m=2, vocab_size=5)
        p = identity_attention_params(4)
        q = T.Tensor(RNG.normal(size=(1, 2, 4)))
        kv = T.Tensor(RNG.normal(size=(1, 3, 4)))
        with pytest.raises(ValueError, match="empty support"):
            multi_head_attention(q, kv, kv, np.zeros(3, dtype=bool), p, "attn", cfg)

    def test_weight_rows_sum_to_one_and_masked_zero(self, tiny_config, tiny_params):
        x = T.Tensor(RNG.normal(size=(3, 6, 8)), dtype=np.float64)
        mask = np.ones((3, 6), dtype=bool)
        mask[0, 4:] = False
        mask[2, 2:] = False
        z = encoder_forward(x, mask, tiny_params, tiny_config)
        ids = np.array([[2, 5], [2, 6], [2, 7]])
        _, recs = decoder_forward(ids, None, z, mask, tiny_params, tiny_config,
                                  record=True)
        for w in recs:
            np.testing.assert_allclose(w.sum(axis=-1), 1.0, atol=1e-6)
            assert np.all(w[0, :, :, 4:] == 0.0)
            assert np.all(w[2, :, :, 2:] == 0.0)


class TestCountParams:
    def test_v80_exact(self):
        cfg = ModelConfig(l_e=5, l_d=4, d_a=4, d_h=32, d_p=128, k=3, d_f=128,
                          n=200, m=100, vocab_size=2000)
        assert count_params(cfg) == (523520, 1453520)

    def test_zero_layer_encoder_is_positional_table(self):
        cfg = ModelConfig(l_e=0, l_d=1, d_a=2, d_h=4, d_p=8, d_f=8, n=6, m=4,
                          vocab_size=11)
        assert count_params(cfg)[0] == 6 * 8

    @pytest.mark.parametrize("kwargs", [
        dict(l_e=5, l_d=2, d_a=2, d_h=64, d_p=128, k=1, d_f=128, n=48, m=24,
             vocab_size=57),
        dict(l_e=5, l_d=2, d_a=4, d_h=32, d_p=128, k=1, d_f=128, n=48, m=24,
             vocab_size=57),
        dict(l_e=5, l_d=4, d_a=4, d_h=32, d_p=128, k=3, d_f=128, n=200, m=100,
             vocab_size=2000),
        dict(l_e=2, l_d=3, d_a=2, d_h=16, d_p=24, k=2, d_f=32, n=20, m=10,
             vocab_size=19),
    ])
    def test_closed_form_equals_runtime_tally(self, kwargs):
        cfg = ModelConfig(**kwargs)
        shapes = param_shapes(cfg)
        tally_e = sum(int(np.prod(s)) for n2, s in shapes.items()
                      if n2.startswith("enc."))
        tally_d = sum(int(np.prod(s)) for n2, s in shapes.items()
                      if n2.startswith("dec."))
        assert (tally_e, tally_d) == count_params(cfg)

    def test_d_f_must_match_width(self):
        with pytest.raises(ValueError, match="d_f"):
            ModelConfig(d_a=2, d_h=4, d_f=16).validate()


class TestEncoder:
    def test_zero_layers_is_blended_input(self):
        cfg = ModelConfig(l_e=0, l_d=1, d_a=2, d_h=4, d_p=8, d_f=8, n=6, m=4,
                          vocab_size=11, alpha=0.5)
        params = init_params(cfg, seed=0, dtype=np.float64)
        x = T.Tensor(RNG.normal(size=(2, 6, 8)), dtype=np.float64)
        z = encoder_forward(x, np.ones((2, 6), bool), params, cfg)
        expected = x.data + 0.5 * params["enc.pos"].data
        np.testing.assert_allclose(z.data, expected, atol=1e-12)

    def test_alpha_zero_ignores_positional_table(self, tiny_config):
        cfg = tiny_config
        cfg.alpha = 0.0
        params = init_params(cfg, seed=0, dtype=np.float64)
        x = T.Tensor(RNG.normal(size=(1, 5, 8)), dtype=np.float64)
        mask = np.ones((1, 5), bool)
        z1 = encoder_forward(x, mask, params, cfg).data
        params["enc.pos"].data = params["enc.pos"].data + 100.0
        z2 = encoder_forward(x, mask, params, cfg).data
        np.testing.assert_array_equal(z1, z2)

    def test_pad_mutation_leaves_valid_positions_exact(self, tiny_config, tiny_params):
        x_np = RNG.normal(size=(2, 6, 8))
        mask = np.ones((2, 6), bool)
        mask[0, 3:] = False
        z1 = encoder_forward(T.Tensor(x_np, dtype=np.float64), mask,
                             tiny_params, tiny_config).data
        x2 = x_np.copy()
        x2[0, 3:] = RNG.normal(size=(3, 8)) * 1e4
        z2 = encoder_forward(T.Tensor(x2, dtype=np.float64), mask,
                             tiny_params, tiny_config).data
        np.testing.assert_array_equal(z1[0, :3], z2[0, :3])
        np.testing.assert_array_equal(z1[1], z2[1])

    def test_permutation_sensitivity(self, tiny_config, tiny_params):
        x_np = RNG.normal(size=(1, 6, 8))
        mask = np.ones((1, 6), bool)
        z1 = encoder_forward(T.Tensor(x_np, dtype=np.float64), mask,
                             tiny_params, tiny_config).data
        swapped = x_np.copy()
        swapped[0, [1, 2]] = swapped[0, [2, 1]]
        z2 = encoder_forward(T.Tensor(swapped, dtype=np.float64), mask,
                             tiny_params, tiny_config).data
        assert not np.allclose(z1, z2)


class TestDecoder:
    def test_causality_exact(self, tiny_config, tiny_params):
        z = encoder_forward(T.Tensor(RNG.normal(size=(1, 6, 8)), dtype=np.float64),
                            np.ones((1, 6), bool), tiny_params, tiny_config)
        mask = np.ones((1, 6), bool)
        a = np.array([[2, 4, 5, 6]])
        b = np.array([[2, 4, 9, 10]])
        la_, _ = decoder_forward(a, None, z, mask, tiny_params, tiny_config)
        lb, _ = decoder_forward(b, None, z, mask, tiny_params, tiny_config)
        np.testing.assert_array_equal(la_.data[:, :2], lb.data[:, :2])

    def test_token_id_out_of_range(self, tiny_config, tiny_params):
        z = encoder_forward(T.Tensor(np.zeros((1, 3, 8)), dtype=np.float64),
                            np.ones((1, 3), bool), tiny_params, tiny_config)
        with pytest.raises(ValueError, match="out of range"):
            decoder_forward(np.array([[2, 99]]), None, z, np.ones((1, 3), bool),
                            tiny_params, tiny_config)

    def test_length_cap(self, tiny_config, tiny_params):
        z = encoder_forward(T.Tensor(np.zeros((1, 3, 8)), dtype=np.float64),
                            np.ones((1, 3), bool), tiny_params, tiny_config)
        with pytest.raises(ValueError, match="exceeds m"):
            decoder_forward(np.zeros((1, 9), dtype=int), None, z,
                            np.ones((1, 3), bool), tiny_params, tiny_config)


class TestGreedy:
    def test_single_token_when_m_is_one(self):
        cfg = ModelConfig(l_e=1, l_d=1, d_a=2, d_h=4, d_p=8, d_f=8, n=6, m=1,
                          vocab_size=11, dropout=0.0)
        params = init_params(cfg, seed=5, dtype=np.float64)
        z = encoder_forward(T.Tensor(RNG.normal(size=(1, 4, 8)), dtype=np.float64),
                            np.ones((1, 4), bool), params, cfg)
        ids, record = greedy_decode(z, np.ones((1, 4), bool), params, cfg)
        assert len(ids) == 1
        assert record.layers[0].shape[1] == 1

    def test_stepwise_equals_prefix_rescoring(self, tiny_config, tiny_params):
        z = encoder_forward(T.Tensor(RNG.normal(size=(1, 6, 8)), dtype=np.float64),
                            np.ones((1, 6), bool), tiny_params, tiny_config)
        mask = np.ones((1, 6), bool)
        ids, _ = greedy_decode(z, mask, tiny_params, tiny_config)
        prefix = [2]
        for tok in ids:
            logits, _ = decoder_forward(np.array([prefix]), None, z, mask,
                                        tiny_params, tiny_config)
            assert int(np.argmax(logits.data[0, -1])) == tok
            prefix.append(tok)

    def test_batch_equals_single(self, tiny_config, tiny_params):
        xs = RNG.normal(size=(3, 6, 8))
        mask = np.ones((3, 6), bool)
        mask[1, 4:] = False
        z = encoder_forward(T.Tensor(xs, dtype=np.float64), mask,
                            tiny_params, tiny_config)
        batch_ids, _ = greedy_decode_batch(z, mask, tiny_params, tiny_config)
        for i in range(3):
            zi = encoder_forward(T.Tensor(xs[i:i + 1], dtype=np.float64),
                                 mask[i:i + 1], tiny_params, tiny_config)
            one, _ = greedy_decode(zi, mask[i:i + 1], tiny_params, tiny_config)
            assert one == batch_ids[i]

    def test_deterministic(self, tiny_config, tiny_params):
        z = encoder_forward(T.Tensor(RNG.normal(size=(1, 5, 8)), dtype=np.float64),
                            np.ones((1, 5), bool), tiny_params, tiny_config)
        a, _ = greedy_decode(z, np.ones((1, 5), bool), tiny_params, tiny_config)
        b, _ = greedy_decode(z, np.ones((1, 5), bool), tiny_params, tiny_config)
        assert a == b


class TestFreeze:
    def test_freeze_marks_encoder_only(self, tiny_config):
        params = freeze_encoder(init_params(tiny_config, seed=1))
        for name, t in params.items():
            assert t.requires_grad == (not name.startswith("enc."))

    def test_unfreeze_restores(self, tiny_config):
        params = unfreeze_encoder(freeze_encoder(init_params(tiny_config, seed=1)))
        assert all(t.requires_grad for t in params.values())

    def test_checksum_tracks_encoder_bytes(self, tiny_config):
        params = init_params(tiny_config, seed=1)
        before = encoder_checksum(params)
        params["dec.embed"].data += 1.0
        assert encoder_checksum(params) == before
        params["enc.pos"].data += 1.0
        assert encoder_checksum(params) != before


class TestCheckpoint:
    def test_round_trip_preserves_forward(self, tmp_path, tiny_config):
        params = init_params(tiny_config, seed=8, dtype=np.float32)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, tiny_config, {"type": "symbol",
                                                    "punctuation": ""})
        loaded, cfg2, vocab_dump = load_checkpoint(path)
        assert cfg2 == tiny_config
        assert vocab_dump["type"] == "symbol"
        x = T.Tensor(RNG.normal(size=(1, 4, 8)).astype(np.float32))
        mask = np.ones((1, 4), bool)
        z1 = encoder_forward(x, mask, params, tiny_config).data
        z2 = encoder_forward(x, mask, loaded, tiny_config).data
        np.testing.assert_array_equal(z1, z2)

    def test_shape_validation(self, tmp_path, tiny_config):
        params = init_params(tiny_config, seed=8)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, tiny_config)
        blob = path.read_bytes()
        # corrupt the stored config: claim a different decoder depth
        bad = blob.replace(b'"l_d": 1', b'"l_d": 2')
        bad_path = tmp_path / "bad.ckpt"
        bad_path.write_bytes(bad)
        with pytest.raises(ValueError, match="missing parameters"):
            load_checkpoint(bad_path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError, match="bad magic"):
            load_checkpoint(path)


def test_attention_record_shape_contract():
    rec = AttentionRecord(layers=[np.full((2, 5, 11), 0.1)],
                          input_mask=np.array([True] * 9 + [False] * 2))
    assert rec.head_count() == 2
    kept = rec.layers[0][0][:, rec.input_mask]
    assert kept.shape == (5, 9)
