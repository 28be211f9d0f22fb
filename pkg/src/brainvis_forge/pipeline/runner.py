"""Stage implementations over a run directory.

Layout: {run_dir}/{stage}/ holding config.json (snapshot), metrics.jsonl
(per-epoch or per-step log lines), checkpoint.bvc (+ .meta.json sidecar),
and for generation an images/ directory plus provenance.jsonl.

Every stage validates its prerequisites against the stage graph before doing
any work; ablation modes prune the edges belonging to disabled components.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..align.fixtures import generate_fixtures, load_fixtures, lookup, write_fixtures
from ..align.model import AlignmentNet, align
from ..align.train import train_align
from ..autodiff.nn import Linear, LstmEncoder
from ..data.bvd import load_dataset, write_dataset
from ..data.images import make_image_set
from ..data.records import DatasetSplit, EegRecord
from ..data.split import split_by_image
from ..data.synthetic import SyntheticGenSpec, generate_synthetic
from ..diffusion.cascade import CascadeConfig, generate_samples
from ..diffusion.ddpm import train_denoiser
from ..diffusion.denoiser import DenoiserNet
from ..diffusion.ppm import read_ppm, sample_filename, write_ppm
from ..diffusion.schedule import NoiseSchedule
from ..freq.train import FreqClassifier, freq_classify_train, spectra_matrix
from ..fusion.model import TfeModel
from ..fusion.train import classify_batch, finetune_tfe
from ..lmm.model import UnitProjector, VisibleEncoder
from ..lmm.tokenizer import Codebook
from ..lmm.train import build_lmm_models, prepare_units, train_lmm
from ..metrics.classification import GaConfig
from ..metrics.report import MetricsReport, classification_block, evaluate_generation
from ..metrics.surrogate import train_surrogate
from .checkpoint import (
    CheckpointArchive,
    StageError,
    check_prerequisites,
    load_checkpoint,
    require_stage,
    save_checkpoint,
)
from .config import PipelineConfig

STAGE_MARKERS = {
    "data": "data/dataset.bvd",
    "lmm": "lmm/checkpoint.bvc",
    "freq": "freq/checkpoint.bvc",
    "tfe": "tfe/checkpoint.bvc",
    "align": "align/checkpoint.bvc",
    "diffusion": "diffusion/checkpoint.bvc",
    "generate": "generate/provenance.jsonl",
    "evaluate": "evaluate/report.json",
}


@dataclass
class RunPaths:
    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    def stage_dir(self, stage: str) -> Path:
        d = self.root / stage
        d.mkdir(parents=True, exist_ok=True)
        return d

    def checkpoint(self, stage: str) -> Path:
        return self.stage_dir(stage) / "checkpoint.bvc"

    def available_stages(self) -> set[str]:
        return {stage for stage, marker in STAGE_MARKERS.items() if (self.root / marker).exists()}


def _ablation_skips(cfg: PipelineConfig) -> set[str]:
    return {
        None: set(),
        "no-time": {"lmm"},
        "no-pretrain": {"lmm"},
        "no-freq": {"freq"},
        "no-finetune": set(),
        "no-refine": set(),
        "no-semantic": {"align"},
    }[cfg.ablate]


def _enter_stage(cfg: PipelineConfig, paths: RunPaths, stage: str) -> Path:
    check_prerequisites(stage, paths.available_stages(), skip=_ablation_skips(cfg))
    d = paths.stage_dir(stage)
    (d / "config.json").write_text(cfg.to_json())
    return d


def _write_metrics(stage_dir: Path, rows: list[dict]) -> None:
    with open(stage_dir / "metrics.jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _synthetic_spec(cfg: PipelineConfig) -> SyntheticGenSpec:
    return SyntheticGenSpec(
        n_classes=cfg.n_classes,
        records_per_class=cfg.records_per_class,
        c=cfg.c,
        l=cfg.l,
        noise_std=cfg.noise_std,
        sample_rate=cfg.sample_rate,
        seed=cfg.seed,
        sinusoids_per_class=cfg.sinusoids_per_class,
        records_per_image=cfg.records_per_image,
        subjects=cfg.subjects,
    )


def load_run_data(cfg: PipelineConfig, paths: RunPaths) -> tuple[list[EegRecord], DatasetSplit]:
    records, _ = load_dataset(paths.root / "data" / "dataset.bvd", normalize=True)
    split = split_by_image(records, seed=cfg.seed)
    return records, split


# ---------------------------------------------------------------------------
# stages


def run_gen_data(cfg: PipelineConfig, paths: RunPaths) -> dict:
    stage_dir = _enter_stage(cfg, paths, "data")
    records = generate_synthetic(_synthetic_spec(cfg))
    write_dataset(stage_dir / "dataset.bvd", records, n_classes=cfg.n_classes, normalized=False)
    fixtures = generate_fixtures(
        cfg.n_classes, cfg.records_per_class, e=cfg.e, seed=cfg.seed, caption_offset=cfg.caption_offset
    )
    write_fixtures(stage_dir / "fixtures.bve", fixtures, e=cfg.e)
    summary = {"records": len(records), "images": cfg.n_classes * cfg.records_per_class, "fixtures": len(fixtures)}
    _write_metrics(stage_dir, [summary])
    return summary


def run_train_lmm(cfg: PipelineConfig, paths: RunPaths) -> dict:
    stage_dir = _enter_stage(cfg, paths, "lmm")
    records, split = load_run_data(cfg, paths)
    train_records = [records[i] for i in split.train]
    batch = min(cfg.batch, len(train_records))
    steps_per_epoch = max(1, (len(train_records) + batch - 1) // batch)
    result = train_lmm(
        train_records,
        n_units=cfg.n,
        d=cfg.d,
        n_heads=cfg.heads,
        ffn_dim=cfg.ffn,
        sa_blocks=cfg.sa_blocks,
        ca_blocks=cfg.ca_blocks,
        n_codewords=cfg.n_t,
        mask_ratio=cfg.r_m,
        teacher_momentum=cfg.teacher_momentum,
        lr=cfg.lr,
        steps=cfg.epochs["lmm"] * steps_per_epoch,
        batch_size=batch,
        seed=cfg.seed,
    )
    tensors = {
        **{f"opt/{k}": v for k, v in result.store.state().items()},
        **result.models.teacher.state(),
        **result.models.codebook.state(),
    }
    save_checkpoint(paths.checkpoint("lmm"), CheckpointArchive(tensors, "lmm", cfg.to_dict()))
    _write_metrics(stage_dir, result.history)
    return {"steps": len(result.history), "final_l_lmm": result.history[-1]["l_lmm"] if result.history else None}


def _rebuild_lmm(cfg: PipelineConfig, paths: RunPaths):
    ckpt = require_stage(load_checkpoint(paths.checkpoint("lmm")), "lmm")
    models = build_lmm_models(
        unit_dim=cfg.unit_dim,
        n_units=cfg.n,
        d=cfg.d,
        n_heads=cfg.heads,
        ffn_dim=cfg.ffn,
        sa_blocks=cfg.sa_blocks,
        ca_blocks=cfg.ca_blocks,
        n_codewords=cfg.n_t,
        teacher_momentum=cfg.teacher_momentum,
        seed=cfg.seed,
    )
    store = models.student_store()
    store.load_state({k[len("opt/") :]: v for k, v in ckpt.tensors.items() if k.startswith("opt/")})
    models.teacher.load_state(ckpt.tensors)
    models.codebook = Codebook.from_state(ckpt.tensors)
    return models


def run_train_freq(cfg: PipelineConfig, paths: RunPaths) -> dict:
    stage_dir = _enter_stage(cfg, paths, "freq")
    records, split = load_run_data(cfg, paths)
    result = freq_classify_train(
        records,
        split,
        n_classes=cfg.n_classes,
        hidden=cfg.lstm_hidden,
        epochs=cfg.epochs["freq"],
        batch_size=min(cfg.batch, max(1, len(split.train))),
        lr=cfg.lr,
        sample_rate=cfg.sample_rate,
        seed=cfg.seed,
    )
    tensors = {
        **{f"opt/{k}": v for k, v in result.store.state().items()},
        "spectrum_scale": np.asarray([result.spectrum_scale], dtype=np.float32),
    }
    save_checkpoint(paths.checkpoint("freq"), CheckpointArchive(tensors, "freq", cfg.to_dict()))
    _write_metrics(stage_dir, result.history)
    last = result.history[-1] if result.history else {}
    return {"epochs": len(result.history), "val_acc": last.get("val_acc")}


def _rebuild_freq(cfg: PipelineConfig, paths: RunPaths) -> tuple[FreqClassifier, float]:
    ckpt = require_stage(load_checkpoint(paths.checkpoint("freq")), "freq")
    model = FreqClassifier(cfg.c, cfg.lstm_hidden, cfg.n_classes, np.random.default_rng(0))
    model.load_state(
        {k[len("opt/param/freq.") :]: v for k, v in ckpt.tensors.items() if k.startswith("opt/param/freq.")}
    )
    return model, float(ckpt.tensors["spectrum_scale"][0])


def run_finetune_tfe(cfg: PipelineConfig, paths: RunPaths) -> dict:
    stage_dir = _enter_stage(cfg, paths, "tfe")
    records, split = load_run_data(cfg, paths)
    use_time = cfg.ablate != "no-time"
    use_freq = cfg.ablate != "no-freq"
    cold_start = cfg.ablate == "no-pretrain"

    pretrained_lmm = None
    if use_time and not cold_start:
        pretrained_lmm = _rebuild_lmm(cfg, paths)
    pretrained_freq, scale = (None, 1.0)
    if use_freq:
        pretrained_freq, scale = _rebuild_freq(cfg, paths)

    result = finetune_tfe(
        records,
        split,
        n_units=cfg.n,
        d=cfg.d,
        n_heads=cfg.heads,
        ffn_dim=cfg.ffn,
        sa_blocks=cfg.sa_blocks,
        lstm_hidden=cfg.lstm_hidden,
        n_classes=cfg.n_classes,
        pretrained_lmm=pretrained_lmm,
        pretrained_freq=pretrained_freq,
        spectrum_scale=scale,
        sample_rate=cfg.sample_rate,
        stage1_epochs=cfg.epochs["time_ft"],
        stage2_epochs=cfg.epochs["joint_ft"],
        batch_size=min(cfg.batch, max(1, len(split.train))),
        lr=cfg.lr,
        seed=cfg.seed,
        use_time=use_time,
        use_freq=use_freq,
        run_stage2=cfg.ablate != "no-finetune",
        allow_cold_start=cold_start,
    )
    tensors = {
        **{f"model/{k}": v for k, v in result.model.state().items()},
        **{f"opt/{k}": v for k, v in result.store.state().items()},
        "spectrum_scale": np.asarray([scale], dtype=np.float32),
    }
    meta = {**cfg.to_dict(), "use_time": use_time, "use_freq": use_freq,
            "stage1_done": result.stage1_done, "stage2_done": result.stage2_done}
    save_checkpoint(paths.checkpoint("tfe"), CheckpointArchive(tensors, "tfe", meta))
    _write_metrics(stage_dir, result.history)
    last = result.history[-1] if result.history else {}
    return {"epochs": len(result.history), "train_acc": last.get("train_acc"), "val_acc": last.get("val_acc")}


def _rebuild_tfe(cfg: PipelineConfig, paths: RunPaths) -> TfeModel:
    ckpt = require_stage(load_checkpoint(paths.checkpoint("tfe")), "tfe")
    use_time = bool(ckpt.config.get("use_time", True))
    use_freq = bool(ckpt.config.get("use_freq", True))
    rng = np.random.default_rng(0)
    projector = UnitProjector(cfg.unit_dim, cfg.d, cfg.n, rng)
    encoder = VisibleEncoder(cfg.d, cfg.heads, cfg.ffn, cfg.sa_blocks, rng)
    freq_encoder = LstmEncoder(cfg.c, cfg.lstm_hidden, rng) if use_freq else None
    head = Linear(cfg.d + cfg.lstm_hidden, cfg.n_classes, rng)
    model = TfeModel(
        projector, encoder, freq_encoder, head,
        d=cfg.d, h=cfg.lstm_hidden, n_classes=cfg.n_classes,
        spectrum_scale=float(ckpt.tensors["spectrum_scale"][0]),
        use_time=use_time, use_freq=use_freq,
    )
    model.load_state({k[len("model/") :]: v for k, v in ckpt.tensors.items() if k.startswith("model/")})
    return model


def _aligned_embeddings(cfg, model: TfeModel, records, indices, net: AlignmentNet) -> np.ndarray:
    subset = [records[i] for i in indices]
    units = prepare_units(subset, cfg.n)
    spectra = spectra_matrix(subset, cfg.sample_rate, model.spectrum_scale) if model.use_freq else None
    fused = model.tfe_embedding(units, spectra)
    return align(net, fused)


def run_train_align(cfg: PipelineConfig, paths: RunPaths) -> dict:
    stage_dir = _enter_stage(cfg, paths, "align")
    records, split = load_run_data(cfg, paths)
    model = _rebuild_tfe(cfg, paths)
    fixtures, e = load_fixtures(paths.root / "data" / "fixtures.bve")
    if e != cfg.e:
        raise ValueError(f"run_train_align: fixture dim {e} differs from config e={cfg.e}")

    train_records = [records[i] for i in split.train]
    units = prepare_units(train_records, cfg.n)
    spectra = spectra_matrix(train_records, cfg.sample_rate, model.spectrum_scale) if model.use_freq else None
    embeddings = model.tfe_embedding(units, spectra)
    labels = np.array([r.class_label for r in train_records])
    image_ids = np.array([r.image_id for r in train_records])

    result = train_align(
        embeddings, labels, image_ids, fixtures,
        e=cfg.e,
        epochs=cfg.epochs["align"],
        batch_size=min(cfg.batch, max(1, len(train_records))),
        lr=cfg.lr,
        seed=cfg.seed,
        label_weight=cfg.label_weight,
        net=AlignmentNet(embeddings.shape[1], cfg.e, np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xA11])), n_blocks=cfg.align_blocks),
    )
    tensors = {
        **{f"model/{k}": v for k, v in result.net.state().items()},
        **{f"opt/{k}": v for k, v in result.store.state().items()},
    }
    save_checkpoint(paths.checkpoint("align"), CheckpointArchive(tensors, "align", cfg.to_dict()))
    _write_metrics(stage_dir, result.history)
    return {"epochs": len(result.history), "final_si_loss": result.history[-1]["si_loss"] if result.history else None}


def _rebuild_align(cfg: PipelineConfig, paths: RunPaths) -> AlignmentNet:
    ckpt = require_stage(load_checkpoint(paths.checkpoint("align")), "align")
    net = AlignmentNet(cfg.d + cfg.lstm_hidden, cfg.e, np.random.default_rng(0), n_blocks=cfg.align_blocks)
    net.load_state({k[len("model/") :]: v for k, v in ckpt.tensors.items() if k.startswith("model/")})
    return net


def run_train_diffusion(cfg: PipelineConfig, paths: RunPaths) -> dict:
    stage_dir = _enter_stage(cfg, paths, "diffusion")
    records, split = load_run_data(cfg, paths)
    model = _rebuild_tfe(cfg, paths)
    image_set = make_image_set(cfg.n_classes, cfg.records_per_class, size=cfg.latent_size,
                               channels=cfg.latent_channels, seed=cfg.seed)

    train_records = [records[i] for i in split.train]
    images = np.stack([image_set[r.image_id][0] for r in train_records])
    labels = np.array([r.class_label for r in train_records])

    eeg_conditions = None
    if cfg.ablate != "no-semantic":
        align_net = _rebuild_align(cfg, paths)
        eeg_conditions = _aligned_embeddings(cfg, model, records, split.train, align_net)

    schedule = NoiseSchedule.linear(T=cfg.T)
    net = DenoiserNet(
        cfg.latent_shape, cfg.e, cfg.n_classes, cfg.denoiser_hidden,
        np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xD1F])),
    )
    result = train_denoiser(
        net, schedule, images, labels, eeg_conditions,
        steps=cfg.diffusion_steps,
        batch_size=cfg.diffusion_batch,
        lr=cfg.lr,
        seed=cfg.seed,
        class_condition_prob=1.0 if cfg.ablate == "no-semantic" else 0.5,
    )
    tensors = {
        **{f"model/{k}": v for k, v in net.state().items()},
        **{f"opt/{k}": v for k, v in result.store.state().items()},
    }
    save_checkpoint(paths.checkpoint("diffusion"), CheckpointArchive(tensors, "diffusion", cfg.to_dict()))
    _write_metrics(stage_dir, result.history)
    return {"steps": len(result.history), "final_loss": result.history[-1]["loss"] if result.history else None}


def _rebuild_denoiser(cfg: PipelineConfig, paths: RunPaths) -> DenoiserNet:
    ckpt = require_stage(load_checkpoint(paths.checkpoint("diffusion")), "diffusion")
    net = DenoiserNet(cfg.latent_shape, cfg.e, cfg.n_classes, cfg.denoiser_hidden, np.random.default_rng(0))
    net.load_state({k[len("model/") :]: v for k, v in ckpt.tensors.items() if k.startswith("model/")})
    return net


def run_generate(cfg: PipelineConfig, paths: RunPaths) -> dict:
    stage_dir = _enter_stage(cfg, paths, "generate")
    records, split = load_run_data(cfg, paths)
    model = _rebuild_tfe(cfg, paths)
    denoiser = _rebuild_denoiser(cfg, paths)
    schedule = NoiseSchedule.linear(T=cfg.T)
    cascade = CascadeConfig(rho=cfg.rho, condition_source=cfg.stage2_condition)
    mode = {"no-refine": "no-refine", "no-semantic": "no-semantic"}.get(cfg.ablate, "cascade")

    align_net = None
    if mode != "no-semantic":
        align_net = _rebuild_align(cfg, paths)
    fixtures, _ = load_fixtures(paths.root / "data" / "fixtures.bve")

    test_records = [records[i] for i in split.test]
    logits = classify_batch(model, test_records, cfg.n, cfg.sample_rate)
    predicted = np.argmax(logits, axis=1)

    images_dir = stage_dir / "images"
    images_dir.mkdir(exist_ok=True)
    provenance_rows = []
    for row, dataset_index in enumerate(split.test):
        record = records[dataset_index]
        label = int(predicted[row])
        if align_net is not None:
            c_eeg = _aligned_embeddings(cfg, model, records, [dataset_index], align_net)[0]
        else:
            c_eeg = np.zeros(cfg.e)
        if cfg.stage2_condition == "fixture":
            class_cond = lookup(fixtures, label, label * cfg.records_per_class).c_label.astype(np.float64)
        else:
            class_cond = denoiser.class_condition(np.array([label])).data[0].astype(np.float64)
        samples = generate_samples(
            schedule, denoiser,
            record_index=dataset_index,
            c_eeg=c_eeg,
            predicted_label=label,
            class_cond=class_cond,
            cascade=cascade,
            n_samples=cfg.samples_per_record,
            master_seed=cfg.seed,
            mode=mode,
        )
        for latent, prov in samples:
            write_ppm(images_dir / sample_filename(dataset_index, prov.sample_index), latent)
            row_dict = prov.to_dict()
            row_dict["true_label"] = record.class_label
            row_dict["image_id"] = record.image_id
            provenance_rows.append(row_dict)

    with open(stage_dir / "provenance.jsonl", "w") as fh:
        for row_dict in provenance_rows:
            fh.write(json.dumps(row_dict, sort_keys=True) + "\n")
    _write_metrics(stage_dir, [{"samples": len(provenance_rows), "records": len(test_records), "mode": mode}])
    return {"samples": len(provenance_rows), "records": len(test_records), "mode": mode}


def run_evaluate(cfg: PipelineConfig, paths: RunPaths) -> MetricsReport:
    stage_dir = _enter_stage(cfg, paths, "evaluate")
    records, split = load_run_data(cfg, paths)
    model = _rebuild_tfe(cfg, paths)

    test_records = [records[i] for i in split.test]
    logits = classify_batch(model, test_records, cfg.n, cfg.sample_rate)
    labels = np.array([r.class_label for r in test_records])
    cls_block = classification_block(logits, labels, cfg.n_classes)

    image_set = make_image_set(cfg.n_classes, cfg.records_per_class, size=cfg.latent_size,
                               channels=cfg.latent_channels, seed=cfg.seed)
    all_images = np.stack([img for img, _ in image_set.values()])
    all_labels = np.array([lab for _, lab in image_set.values()])
    surrogate = train_surrogate(
        all_images, all_labels, cfg.n_classes,
        hidden=cfg.surrogate_hidden, epochs=cfg.surrogate_epochs, lr=3e-3, seed=cfg.seed,
    )

    generated, gen_labels, gt_pairs = [], [], []
    images_dir = paths.root / "generate" / "images"
    for dataset_index in split.test:
        record = records[dataset_index]
        for s in range(cfg.samples_per_record):
            ppm_path = images_dir / sample_filename(dataset_index, s)
            if not ppm_path.exists():
                raise StageError(f"evaluate: missing generated image {ppm_path.name}; run generate first")
            rgb = read_ppm(ppm_path).astype(np.float64) / 255.0 * 2.0 - 1.0
            generated.append(np.transpose(rgb, (2, 0, 1)))
            gen_labels.append(record.class_label)
            gt_pairs.append(image_set[record.image_id][0])
    generated = np.stack(generated)
    gt_pairs = np.stack(gt_pairs)
    gt_pool = np.stack([image_set[records[i].image_id][0] for i in split.test])

    ga_cfg = GaConfig(n_way=cfg.ga_n, top_k=cfg.ga_k, n_trials=cfg.ga_trials, seed=cfg.seed)
    gen_block = evaluate_generation(
        generated, np.array(gen_labels), gt_pool, gt_pairs, surrogate.model, ga_cfg, is_splits=cfg.is_splits
    )

    report = MetricsReport(
        top1_ca=cls_block["top1_ca"],
        top3_ca=cls_block["top3_ca"],
        top5_ca=cls_block["top5_ca"],
        f1_macro=cls_block["f1_macro"],
        ga=gen_block["ga"],
        is_mean=gen_block["is_mean"],
        is_std=gen_block["is_std"],
        fid=gen_block["fid"],
        ssim_mean=gen_block["ssim_mean"],
        per_class=cls_block["per_class"],
        config={**cfg.to_dict(), "surrogate_train_acc": surrogate.train_accuracy},
    )
    report.validate_ranges()
    (stage_dir / "report.json").write_text(report.to_json())
    _write_metrics(stage_dir, [json.loads(report.to_json())])
    return report


def run_grad_check(probes: int = 10, seed: int = 2024, tol: float = 1e-4) -> tuple[dict[str, float], bool]:
    from ..autodiff.gradcheck import run_catalog_suite

    worst = run_catalog_suite(probes=probes, seed=seed, tol=tol)
    return worst, all(v < tol for v in worst.values())


def run_full_chain(cfg: PipelineConfig, paths: RunPaths) -> MetricsReport:
    """gen-data through evaluate, honoring the config's ablation switch."""
    run_gen_data(cfg, paths)
    if cfg.ablate not in ("no-time", "no-pretrain"):
        run_train_lmm(cfg, paths)
    if cfg.ablate != "no-freq":
        run_train_freq(cfg, paths)
    run_finetune_tfe(cfg, paths)
    if cfg.ablate != "no-semantic":
        run_train_align(cfg, paths)
    run_train_diffusion(cfg, paths)
    run_generate(cfg, paths)
    return run_evaluate(cfg, paths)
