import json
from fractions import Fraction

import numpy as np
import pytest

import coopcast as cc
from coopcast import rng as rng_mod
from coopcast.exceptions import ModelError

import oracles
from conftest import base_model_doc, bsc, rng_for


class TestChannelJoint:
    def test_identity_uniform(self):
        p = cc.JointPmf(np.array([0.5, 0.5]))
        ch = cc.BroadcastChannel(np.eye(2))
        joint = cc.channel_joint(p, ch)
        assert np.allclose(joint.probs, np.diag([0.5, 0.5]))

    def test_point_mass_input(self):
        p = cc.JointPmf(np.array([1.0, 0.0]))
        ch = cc.BroadcastChannel(bsc(0.1))
        joint = cc.channel_joint(p, ch)
        assert joint.probs[1].sum() == 0.0

    def test_bsc_mutual_information(self):
        p = cc.JointPmf(np.array([0.5, 0.5]))
        joint = cc.channel_joint(p, cc.BroadcastChannel(bsc(0.1)))
        assert abs(cc.mutual_information(joint, [0], [1]) - oracles.I_BSC_01_UNIFORM) < 1e-12

    def test_marginal_recovery(self):
        gen = rng_for(5)
        for _ in range(20):
            pw = gen.random(3) + 0.01
            pw /= pw.sum()
            raw = gen.random((3, 2, 2)) + 0.05
            raw /= raw.reshape(3, -1).sum(axis=1)[:, None, None]
            joint = cc.channel_joint(cc.JointPmf(pw), cc.BroadcastChannel(raw))
            assert np.abs(joint.marginal([0]).probs - pw).max() < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ModelError):
            cc.channel_joint(cc.JointPmf(np.array([0.5, 0.5])),
                             cc.BroadcastChannel(np.full((3, 3), 1 / 3)))


class TestPushQuantizer:
    def test_identity_duplicates_w(self):
        p = cc.JointPmf(np.array([0.3, 0.7]))
        out = cc.push_quantizer(p, cc.Quantizer(np.array([0, 1])), w_axis=0)
        assert np.allclose(out.probs, np.diag([0.3, 0.7]))

    def test_constant_quantizer(self):
        p = cc.JointPmf(np.array([0.3, 0.7]))
        out = cc.push_quantizer(p, cc.Quantizer(np.array([0, 0])), w_axis=0)
        assert abs(cc.mutual_information(out, [0], [1])) < 1e-12

    def test_v_deterministic_given_w(self):
        joint = cc.channel_joint(cc.JointPmf(np.array([0.5, 0.5])), cc.BroadcastChannel(bsc(0.1)))
        out = cc.push_quantizer(joint, cc.Quantizer(np.array([0, 1])), w_axis=0)
        assert abs(cc.conditional_entropy(out.marginal([0, 2]), [0])) < 1e-12
        # H(V|U) under a BSC(0.1) with identity quantizer equals h(0.1)
        assert abs(cc.conditional_entropy(out.marginal([1, 2]), [0]) - oracles.H_BERN_01) < 1e-12

    def test_mass_and_marginal_preserved(self):
        gen = rng_for(9)
        raw = gen.random((3, 2)) + 0.02
        p = cc.JointPmf(raw / raw.sum())
        out = cc.push_quantizer(p, cc.Quantizer(np.array([1, 0, 1])), w_axis=0)
        assert abs(out.probs.sum() - 1.0) < 1e-12
        assert np.abs(out.marginal([0, 1]).probs - p.probs).max() < 1e-12


class TestAttachAuxiliary:
    def _src(self):
        gen = rng_for(13)
        raw = gen.random((2, 2, 2)) + 0.05
        return cc.SourceModel(joint=cc.JointPmf(raw / raw.sum()),
                              n_receivers=1, has_helper_side=True)

    def test_identity_aux(self):
        src = self._src()
        out = cc.attach_auxiliary(src, cc.AuxiliaryChannel(np.eye(2)), 0)
        # A == V, so I(V;A|Y) = H(V|Y)
        i_va_y = cc.mutual_information_given(out, [2], [3], [1])
        h_v_y = cc.conditional_entropy(out.marginal([1, 2]), [0])
        assert abs(i_va_y - h_v_y) < 1e-9

    def test_rank_one_aux(self):
        src = self._src()
        out = cc.attach_auxiliary(src, cc.AuxiliaryChannel(np.full((2, 2), 0.5)), 0)
        h_x_ay = cc.conditional_entropy(out.marginal([0, 1, 3]), [1, 2])
        h_x_y = cc.conditional_entropy(out.marginal([0, 1]), [1])
        assert abs(h_x_ay - h_x_y) < 1e-9

    def test_binary_example_values(self):
        from conftest import binary_example_source

        src = binary_example_source(0.1)
        alpha = 0.2
        out = cc.attach_auxiliary(src, cc.AuxiliaryChannel(bsc(alpha)), 0)
        i_va = cc.mutual_information(out, [2], [3])
        assert abs(i_va - (1.0 - oracles.H_02)) < 1e-9
        h_x_a = cc.conditional_entropy(out.marginal([0, 3]), [1])
        assert abs(h_x_a - oracles.H_026) < 1e-9

    def test_markov_factorization_literal(self):
        src = self._src()
        gen = rng_for(21)
        raw = gen.random((2, 2)) + 0.1
        aux = cc.AuxiliaryChannel(raw / raw.sum(axis=1, keepdims=True))
        out = cc.attach_auxiliary(src, aux, 0)
        p = out.probs
        pv = p.sum(axis=(0, 1, 3))
        for v in range(2):
            if pv[v] <= 0:
                continue
            cond_xya = p[:, :, v, :] / pv[v]
            cond_xy = p[:, :, v, :].sum(axis=2) / pv[v]
            cond_a = p[:, :, v, :].sum(axis=(0, 1)) / pv[v]
            assert np.abs(cond_xya - cond_xy[:, :, None] * cond_a[None, None, :]).max() < 1e-12

    def test_cardinality_guard(self):
        with pytest.raises(ModelError):
            cc.AuxiliaryChannel(np.full((2, 3), 1 / 3))


class TestMinSupport:
    def test_uniform(self):
        assert cc.min_support(cc.JointPmf(np.array([0.5, 0.5]))) == 0.5

    def test_point_mass(self):
        assert cc.min_support(cc.JointPmf(np.array([0.0, 1.0]))) == 1.0

    def test_excludes_zeros(self):
        assert cc.min_support(cc.JointPmf(np.array([0.7, 0.3, 0.0]))) == 0.3


class TestSampleIid:
    def test_point_mass_constant(self):
        p = cc.JointPmf(np.array([0.0, 1.0]))
        (seq,) = cc.sample_iid(p, 20, rng_mod.stream(1, 0, "source"))
        assert np.all(seq == 1)

    def test_seed_determinism(self):
        p = cc.JointPmf(0.5 * bsc(0.1))
        a = cc.sample_iid(p, 100, rng_mod.stream(9, 4, "source"))
        b = cc.sample_iid(p, 100, rng_mod.stream(9, 4, "source"))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        c = cc.sample_iid(p, 100, rng_mod.stream(9, 5, "source"))
        assert any(not np.array_equal(x, y) for x, y in zip(a, c))

    def test_bern_frequency(self):
        # Pr[|freq - 0.3| > 0.01] < 2 exp(-2e5 * 1e-4) ~ 4e-9 at n = 1e5
        p = cc.JointPmf(np.array([0.7, 0.3]))
        (seq,) = cc.sample_iid(p, 100_000, rng_mod.stream(3, 0, "source"))
        assert abs(seq.mean() - 0.3) < 0.01

    def test_joint_axes_count(self):
        p = cc.JointPmf(np.full((2, 3, 2), 1 / 12))
        seqs = cc.sample_iid(p, 10, rng_mod.stream(0, 0, "source"))
        assert len(seqs) == 3 and all(len(s) == 10 for s in seqs)


class TestBandwidthConfig:
    def test_exact_rational(self):
        bw = cc.BandwidthConfig.for_source_length(Fraction(3, 2), 4)
        assert bw.n_c == 6

    def test_incompatible_length(self):
        with pytest.raises(ModelError):
            cc.BandwidthConfig.for_source_length(Fraction(3, 2), 5)

    def test_mismatched_pair(self):
        with pytest.raises(ModelError):
            cc.BandwidthConfig(kappa=Fraction(2), n_s=4, n_c=9)


class TestModelJson:
    def test_roundtrip(self, tmp_path):
        doc = base_model_doc()
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        m = cc.load_model(str(path))
        assert m.source.n_receivers == 1
        assert m.kappa == Fraction(1)
        out = tmp_path / "m2.json"
        cc.save_model(m, str(out))
        m2 = cc.load_model(str(out))
        assert np.allclose(m2.source.joint.probs, m.source.joint.probs)
        assert np.allclose(m2.channel.law, m.channel.law)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ModelError):
            cc.load_model(str(path))

    def test_bad_mass(self, tmp_path):
        doc = base_model_doc()
        doc["source_pmf"] = [0.5, 0.5, 0.5, 0.5]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelError):
            cc.load_model(str(path))


class TestTransmit:
    def test_identity_channel(self):
        ch = cc.BroadcastChannel(np.eye(2))
        w = np.array([0, 1, 1, 0])
        (u,) = cc.transmit(w, ch, rng_mod.stream(0, 0, "channel"))
        assert np.array_equal(u, w)

    def test_deterministic_map(self):
        law = np.array([[0.0, 1.0], [0.0, 1.0]])
        ch = cc.BroadcastChannel(law)
        (u,) = cc.transmit(np.array([0, 1, 0]), ch, rng_mod.stream(0, 0, "channel"))
        assert np.all(u == 1)

    def test_bsc_flip_rate(self):
        ch = cc.BroadcastChannel(bsc(0.1))
        w = np.zeros(100_000, dtype=np.int64)
        (u,) = cc.transmit(w, ch, rng_mod.stream(8, 0, "channel"))
        assert abs(u.mean() - 0.1) < 0.005

    def test_receiver_correlation(self):
        # common randomness: both outputs equal the input exactly
        law = np.zeros((2, 2, 2))
        law[0, 0, 0] = law[1, 1, 1] = 1.0
        ch = cc.BroadcastChannel(law)
        w = np.array([0, 1, 1])
        u1, u2 = cc.transmit(w, ch, rng_mod.stream(0, 0, "channel"))
        assert np.array_equal(u1, w) and np.array_equal(u2, w)
