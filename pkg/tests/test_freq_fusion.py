"""Frequency branch training and the fused classifier."""

import numpy as np
import pytest

from brainvis_forge.autodiff import Tensor
from brainvis_forge.autodiff.nn import Linear, LstmEncoder
from brainvis_forge.autodiff.tensor import ShapeError
from brainvis_forge.data import SyntheticGenSpec, generate_synthetic, normalize_records, split_by_image
from brainvis_forge.freq import freq_classify_train
from brainvis_forge.fusion import MissingPretrainedError, classify, finetune_tfe, fuse, pool_time
from brainvis_forge.fusion.model import TfeModel
from brainvis_forge.lmm.model import UnitProjector, VisibleEncoder


def test_lstm_output_length_matches_hidden():
    enc = LstmEncoder(8, 128, np.random.default_rng(0))
    out = enc(Tensor(np.random.default_rng(1).standard_normal((2, 5, 8)).astype(np.float32)))
    assert out.shape == (2, 128)


def test_lstm_input_dim_mismatch_rejected_not_broadcast():
    enc = LstmEncoder(8, 16, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        enc(Tensor(np.zeros((2, 5, 7), dtype=np.float32)))


def test_freq_training_separable_classes_reach_full_train_accuracy():
    # noise-free, spectrally separable: must hit 1.0 within 50 epochs
    spec = SyntheticGenSpec(
        n_classes=4, records_per_class=10, c=4, l=40, noise_std=0.0,
        sample_rate=100.0, seed=3,
    )
    records = normalize_records(generate_synthetic(spec))
    split = split_by_image(records, seed=3)
    result = freq_classify_train(records, split, n_classes=4, hidden=16, epochs=50,
                                 batch_size=16, lr=3e-3, sample_rate=100.0, seed=4)
    assert max(h["train_acc"] for h in result.history) == 1.0


def test_freq_training_deterministic_same_seed():
    spec = SyntheticGenSpec(n_classes=3, records_per_class=6, c=4, l=40, seed=5, sample_rate=100.0)
    records = normalize_records(generate_synthetic(spec))
    split = split_by_image(records, seed=5)

    def curve():
        r = freq_classify_train(records, split, n_classes=3, hidden=8, epochs=5,
                                batch_size=8, sample_rate=100.0, seed=9)
        return [(h["loss"], h["train_acc"]) for h in r.history]

    assert curve() == curve()


# --- pooling and fusion -------------------------------------------------------


def test_pool_time_constant_rows():
    v = np.array([1.5, -2.0, 0.5])
    x = Tensor(np.tile(v, (6, 1)))
    np.testing.assert_allclose(pool_time(x).data, v, atol=1e-7)


def test_pool_time_row_permutation_invariant():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 4))
    a = pool_time(Tensor(x)).data
    b = pool_time(Tensor(x[::-1].copy())).data
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_pool_time_two_row_hand_case():
    out = pool_time(Tensor(np.array([[1.0, 3.0], [3.0, 5.0]])))
    np.testing.assert_array_equal(out.data, [2.0, 4.0])


def test_fuse_concatenates_losslessly():
    t = Tensor(np.arange(4.0))
    f = Tensor(np.arange(3.0) + 10)
    out = fuse(t, f)
    assert out.shape == (7,)
    np.testing.assert_array_equal(out.data[:4], t.data)
    np.testing.assert_array_equal(out.data[4:], f.data)


def test_fuse_reference_widths():
    out = fuse(Tensor(np.zeros(1024)), Tensor(np.zeros(128)))
    assert out.shape == (1152,)


def test_fuse_rejects_mismatched_leading_shapes():
    with pytest.raises(ShapeError):
        fuse(Tensor(np.zeros((2, 4))), Tensor(np.zeros((3, 2))))


def test_tfe_head_width_validated():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeError, match="head expects"):
        TfeModel(
            UnitProjector(8, 4, 5, rng), VisibleEncoder(4, 2, 8, 1, rng),
            LstmEncoder(2, 3, rng), Linear(99, 4, rng),
            d=4, h=3, n_classes=4,
        )


# --- staged fine-tuning --------------------------------------------------------


@pytest.fixture(scope="module")
def staged_setup():
    spec = SyntheticGenSpec(
        n_classes=4, records_per_class=10, c=8, l=40, noise_std=0.1,
        sample_rate=100.0, seed=21, phase_jitter=0.3,
    )
    records = normalize_records(generate_synthetic(spec))
    split = split_by_image(records, seed=21)
    from brainvis_forge.lmm import train_lmm

    lmm = train_lmm([records[i] for i in split.train], n_units=10, d=16, n_heads=2,
                    ffn_dim=32, sa_blocks=1, ca_blocks=1, n_codewords=16,
                    mask_ratio=0.75, steps=20, batch_size=32, seed=6)
    freq = freq_classify_train(records, split, n_classes=4, hidden=8, epochs=15,
                               batch_size=16, sample_rate=100.0, seed=6)
    return records, split, lmm, freq


def _finetune(records, split, lmm, freq, **kw):
    args = dict(
        n_units=10, d=16, n_heads=2, ffn_dim=32, sa_blocks=1, lstm_hidden=8,
        n_classes=4,
        pretrained_lmm=lmm.models if lmm is not None else None,
        pretrained_freq=freq.model if freq is not None else None,
        spectrum_scale=freq.spectrum_scale if freq is not None else 1.0,
        sample_rate=100.0,
        stage1_epochs=10, stage2_epochs=5, batch_size=16, seed=6,
    )
    args.update(kw)
    return finetune_tfe(records, split, **args)


def test_staged_overfit_small(staged_setup):
    records, split, lmm, freq = staged_setup
    result = _finetune(records, split, lmm, freq)
    assert result.stage1_done and result.stage2_done
    assert result.history[-1]["train_acc"] >= 0.95


def test_stage2_skippable_for_ablation(staged_setup):
    records, split, lmm, freq = staged_setup
    result = _finetune(records, split, lmm, freq, run_stage2=False)
    assert result.stage1_done and not result.stage2_done
    assert all(h["stage"] == 1 for h in result.history)


def test_stage2_without_stage1_requires_override(staged_setup):
    records, split, lmm, freq = staged_setup
    with pytest.raises(RuntimeError, match="stage 2 requires stage 1"):
        _finetune(records, split, lmm, freq, stage1_epochs=0)
    result = _finetune(records, split, lmm, freq, stage1_epochs=0, stage2_epochs=2,
                       force_stage2_without_stage1=True)
    assert result.stage2_done and not result.stage1_done


def test_cold_start_requires_explicit_flag(staged_setup):
    records, split, _, freq = staged_setup
    with pytest.raises(MissingPretrainedError):
        _finetune(records, split, None, freq, pretrained_lmm=None)
    result = _finetune(records, split, None, freq, pretrained_lmm=None,
                       allow_cold_start=True, stage1_epochs=2, stage2_epochs=0)
    assert result.stage1_done


def test_finetune_deterministic(staged_setup):
    records, split, lmm, freq = staged_setup
    import copy

    def run():
        lmm_copy = copy.deepcopy(lmm)
        freq_copy = copy.deepcopy(freq)
        r = _finetune(records, split, lmm_copy, freq_copy, stage1_epochs=3, stage2_epochs=2)
        return [(h["loss"], h["train_acc"], h["val_acc"]) for h in r.history]

    assert run() == run()


def test_classify_single_record_logits(staged_setup):
    records, split, lmm, freq = staged_setup
    result = _finetune(records, split, lmm, freq, stage1_epochs=3, stage2_epochs=0)
    logits = classify(result.model, records[0], n_units=10, sample_rate=100.0)
    assert logits.shape == (4,)
    # argmax invariant to constant shifts
    assert np.argmax(logits) == np.argmax(logits + 3.7)
