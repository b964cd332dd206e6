import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings
from django.utils.text import slugify

from fusionlab.curriculum.loss import total_loss
from fusionlab.curriculum.training import Evaluation, TrainingResult, evaluate_model, train
from fusionlab.diffcore.gradcheck import GradCheckReport, grad_check
from fusionlab.encoders.nbemb import load_embeddings
from fusionlab.encoders.records import EmbeddingArrays, validate_records
from fusionlab.metrics.report import RECORD_KEYS
from fusionlab.prmf.model import FusionModel, ModelConfig, build_embedding_model, build_toy_model
from fusionlab.synthdata.generator import NUM_CLASSES, generate, pre_corrupt, pre_corrupt_records
from fusionlab.synthdata.raw import RawConfig, generate_raw
from fusionlab.synthdata.services import TRAIN_FILE, VAL_FILE, write_dataset
from fusionlab.utils.config_file import write_config_file
from fusionlab.utils.errors import ConfigurationError, FormatError, LabelIndexError
from .checkpoints import load_checkpoint, save_checkpoint
from .config import CONFIG_FILE, RunConfig

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = 'model.nbck'
LOG_FILE = 'log.txt'
METRICS_FILE = 'metrics.txt'
ABLATION_FILE = 'ablation.txt'
ROBUSTNESS_FILE = 'robustness.txt'

ABLATION_FLAGS = ('disable_text_branch', 'disable_visual_branch', 'disable_prmf', 'disable_curriculum',
                  'disable_confidence')
ABLATION_VARIANTS = (
    ('w/o Textual Branch', {'disable_text_branch': True}),
    ('w/o Visual Branch', {'disable_visual_branch': True}),
    ('w/o Fine-Tuning VLM', {'pre_corrupt_text': 0.3}),
    ('w/o PRMF Block', {'disable_prmf': True, 'disable_curriculum': True}),
    ('w/o Curriculum Learning', {'disable_curriculum': True}),
    ('w/o Noise Robust', {'disable_confidence': True}),
    ('Full model', {}),
)


@dataclass(frozen=True)
class RunOutcome:
    config: RunConfig
    model: FusionModel
    training: TrainingResult
    evaluation: Evaluation

    def summary(self) -> dict[str, float]:
        """JSON-friendly metrics of the final model on the validation split."""
        return {
            **self.evaluation.report.as_dict(),
            'alpha_clean': self.evaluation.alpha_clean,
            'alpha_noisy': self.evaluation.alpha_noisy,
            'final_train_loss': self.training.log[-1].train_loss,
        }


def write_run_config(*, config: RunConfig, out_dir) -> Path:
    return write_config_file(Path(out_dir) / CONFIG_FILE, config.values(), header='resolved run configuration')


def generate_data(*, config: RunConfig, out_dir, calibrate_probes: bool = True) -> dict[str, Path]:
    dataset = generate(config.synth_config())
    paths = write_dataset(dataset=dataset, out_dir=out_dir, calibrate_probes=calibrate_probes)
    paths['config'] = write_run_config(config=config, out_dir=out_dir)
    return paths


def load_data(*, config: RunConfig, data_dir) -> tuple[EmbeddingArrays, EmbeddingArrays]:
    """Reads both NBEMB splits at the configured dims, then applies ``pre_corrupt_text``."""
    data_dir = Path(data_dir)
    splits = []
    for offset, name in enumerate((TRAIN_FILE, VAL_FILE)):
        records = load_embeddings(data_dir / name, config.image_dim, config.text_dim)
        try:
            validate_records(records, image_dim=config.image_dim, text_dim=config.text_dim, num_classes=NUM_CLASSES)
        except LabelIndexError as e:
            raise FormatError(f'{data_dir / name}: {e}') from e
        if config.pre_corrupt_text > 0:
            records = pre_corrupt_records(records, config.pre_corrupt_text, seed=config.seed + 1 + offset)
        splits.append(EmbeddingArrays.from_records(records))
    return splits[0], splits[1]


def synthesize_data(*, config: RunConfig) -> tuple[EmbeddingArrays, EmbeddingArrays]:
    """In-memory dataset from the run's generator settings."""
    dataset = generate(config.synth_config())
    if config.pre_corrupt_text > 0:
        dataset = pre_corrupt(dataset, config.pre_corrupt_text, seed=config.seed + 1)
    return dataset.train_arrays(), dataset.val_arrays()


def train_run(*, config: RunConfig, train_data, val_data, out_dir=None, save_model: bool = True) -> RunOutcome:
    """Fits the embedding model; with ``out_dir`` writes checkpoint, epoch log, metrics and config."""
    model = build_embedding_model(config.model_config())
    logger.info('training %s model with %d parameters on %d samples', config.fusion_mode(),
                model.parameter_count(), len(train_data))
    result = train(config.train_config(), config.schedule(), model, train_data, val_data)
    evaluation = evaluate_model(model, val_data, precision=config.precision)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if save_model:
            save_checkpoint(out_dir / CHECKPOINT_FILE, model, config)
        (out_dir / LOG_FILE).write_text(result.log_text(), encoding='utf-8')
        (out_dir / METRICS_FILE).write_text(evaluation.report.to_record(), encoding='utf-8')
        write_run_config(config=config, out_dir=out_dir)
    return RunOutcome(config, model, result, evaluation)


def run_variant(*, config: RunConfig, data_dir=None, out_dir=None) -> dict[str, float]:
    """
    One training run on the given data (or freshly synthesized data), summarized for a table.\n
    With ``out_dir`` the resolved config, epoch log and metrics are kept; the checkpoint is not.
    """
    if data_dir:
        train_data, val_data = load_data(config=config, data_dir=data_dir)
    else:
        train_data, val_data = synthesize_data(config=config)
    outcome = train_run(config=config, train_data=train_data, val_data=val_data, out_dir=out_dir, save_model=False)
    return outcome.summary()


def evaluate_checkpoint(*, checkpoint_path, data_dir, split: str = 'val', out_path=None) -> Evaluation:
    config, model = load_checkpoint(checkpoint_path)
    train_data, val_data = load_data(config=config, data_dir=data_dir)
    data = val_data if split == 'val' else train_data
    evaluation = evaluate_model(model, data, precision=config.precision)
    if out_path is not None:
        Path(out_path).write_text(evaluation.report.to_record(), encoding='utf-8')
    logger.info('evaluated %s on %d %s samples: acc=%.4f', checkpoint_path, len(data), split, evaluation.report.acc)
    return evaluation


def run_gradcheck(*, seed: int = 0, eps: float | None = None, tolerance: float | None = None,
                  max_coords: int | None = None) -> GradCheckReport:
    """
    Central-difference check of every parameter of the raw-input model: conv encoder,
    LoRA attention text encoder and the fusion head, under the curriculum loss at λ = 0.6.
    LoRA ``B`` factors and the confidence layer are moved off their zero initialization so
    every path carries gradient. Every coordinate is perturbed unless ``max_coords`` caps it.
    """
    defaults = settings.FUSIONLAB
    eps = defaults['GRADCHECK_EPS'] if eps is None else eps
    tolerance = defaults['GRADCHECK_TOLERANCE'] if tolerance is None else tolerance

    model = build_toy_model(ModelConfig(image_dim=6, text_dim=5, lora_rank=2, seed=seed), channels=(2, 3),
                            vocab_size=16, d_model=4, max_len=8)
    rng = np.random.default_rng(seed)
    params = model.named_parameters()
    for name, value in params.items():
        if name.endswith('.B') or name.startswith('confidence.'):
            value[...] = rng.normal(scale=0.5, size=value.shape)
    data = generate_raw(RawConfig(samples_per_class=2, image_size=8, vocab_size=16, token_length=5,
                                  val_fraction=0.5, seed=seed)).train_arrays()

    def loss(tape):
        output = model.forward(tape, data.images, data.texts)
        return total_loss(output.fused_logits, output.image_logits, data.labels, 0.6)

    report = grad_check(loss, params, eps=eps, tolerance=tolerance, max_coords=max_coords, seed=seed)
    log = logger.info if report.passed else logger.error
    log('gradient check over %d parameters: max relative error %.3e', len(params), report.max_error)
    return report


def _mean(values) -> float:
    finite = [value for value in values if not math.isnan(value)]
    return float(np.mean(finite)) if finite else math.nan


@dataclass
class AblationRow:
    name: str
    runs: list[dict[str, float]] = field(default_factory=list)

    def mean(self, key: str) -> float:
        return _mean(run[key] for run in self.runs)


@dataclass
class AblationTable:
    rows: list[AblationRow]

    def to_text(self) -> str:
        """One row per variant, metric means over seeds in percent."""
        width = max(len(row.name) for row in self.rows)
        header = f'{"variant":<{width}}  ' + '  '.join(f'{key:>7}' for key in RECORD_KEYS)
        lines = [f'# seeds = {len(self.rows[0].runs) if self.rows else 0}', header]
        for row in self.rows:
            cells = '  '.join(f'{100 * row.mean(key):7.2f}' for key in RECORD_KEYS)
            lines.append(f'{row.name:<{width}}  {cells}')
        return '\n'.join(lines) + '\n'


def _base_config(config: RunConfig) -> RunConfig:
    return config.with_overrides(pre_corrupt_text=0.0, **{flag: False for flag in ABLATION_FLAGS})


def run_dir(out_dir, name: str, seed: int) -> Path:
    """Per-run output directory: ``<out_dir>/<variant slug>/seed-<seed>``."""
    return Path(out_dir) / slugify(name) / f'seed-{seed}'


def _dispatch(jobs: list[tuple[str, RunConfig]], data_dir, out_dir=None) -> dict[str, AblationRow]:
    from .tasks import train_ablation_variant

    pending = [
        (name, train_ablation_variant.delay(
            config.values(),
            str(data_dir) if data_dir else None,
            str(run_dir(out_dir, name, config.seed)) if out_dir else None,
        ))
        for name, config in jobs
    ]
    rows: dict[str, AblationRow] = {}
    for name, result in pending:
        rows.setdefault(name, AblationRow(name)).runs.append(result.get())
    return rows


def run_ablation_suite(*, config: RunConfig, seeds: int | None = None, data_dir=None, out_dir=None) -> AblationTable:
    """
    Trains and evaluates the seven table rows with identical seeds and averages each row
    over ``seeds`` runs. Without ``data_dir`` every seed also regenerates the data.\n
    With ``out_dir`` the table goes to ``ablation.txt`` there and each run keeps its resolved
    config, log and metrics under ``run_dir(out_dir, variant, seed)``.
    """
    seeds = settings.FUSIONLAB['ABLATION_SEEDS'] if seeds is None else seeds
    base = _base_config(config)
    jobs = [
        (name, base.with_overrides(seed=base.seed + offset, **overrides))
        for name, overrides in ABLATION_VARIANTS
        for offset in range(seeds)
    ]
    logger.info('ablation suite: %d variants x %d seeds', len(ABLATION_VARIANTS), seeds)
    rows = _dispatch(jobs, data_dir, out_dir)
    table = AblationTable([rows[name] for name, _ in ABLATION_VARIANTS])
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / ABLATION_FILE).write_text(table.to_text(), encoding='utf-8')
    return table


ROBUSTNESS_VARIANTS = (('prmf', {}), ('fixed_alpha', {'disable_confidence': True}))


def robustness_run_name(name: str, rho: float) -> str:
    return f'{name} rho {rho:g}'


@dataclass
class RobustnessReport:
    noise_rate: float
    rows: dict[tuple[str, float], AblationRow]

    def drop(self, name: str) -> float:
        """Mean accuracy lost by ``name`` when ``noise_rate`` of the texts are corrupted."""
        return self.rows[(name, 0.0)].mean('acc') - self.rows[(name, self.noise_rate)].mean('acc')

    def alpha_gap(self, name: str) -> float:
        """Mean α on clean minus mean α on corrupted samples, under corruption."""
        row = self.rows[(name, self.noise_rate)]
        return row.mean('alpha_clean') - row.mean('alpha_noisy')

    def to_text(self) -> str:
        lines = [
            f'# noise_rate = {self.noise_rate:g}',
            f'{"variant":<12} {"rho":>5} {"acc":>7} {"alpha_clean":>12} {"alpha_noisy":>12}',
        ]
        for (name, rho), row in self.rows.items():
            lines.append(f'{name:<12} {rho:5.2f} {100 * row.mean("acc"):7.2f} '
                         f'{row.mean("alpha_clean"):12.4f} {row.mean("alpha_noisy"):12.4f}')
        for name, _ in ROBUSTNESS_VARIANTS:
            lines.append(f'{name}_drop = {100 * self.drop(name):.2f}')
        prmf = self.rows[('prmf', self.noise_rate)]
        lines.append(f'prmf_alpha_clean = {prmf.mean("alpha_clean"):.4f}')
        lines.append(f'prmf_alpha_noisy = {prmf.mean("alpha_noisy"):.4f}')
        lines.append(f'gate_more_robust = {str(self.drop("prmf") < self.drop("fixed_alpha")).lower()}')
        lines.append(f'alpha_noisy_below_clean = {str(self.alpha_gap("prmf") > 0).lower()}')
        return '\n'.join(lines) + '\n'


def run_noise_robustness(*, config: RunConfig, seeds: int | None = None, noise_rate: float = 0.5,
                         out_dir=None) -> RobustnessReport:
    """
    Learned confidence against a fixed α = 0.5 on clean data and with ``noise_rate`` of the
    texts corrupted; reports accuracy, the accuracy drop of each variant and mean α on clean
    and on corrupted samples.
    """
    if not 0.0 < noise_rate <= 1.0:
        raise ConfigurationError(f'noise rate must lie in (0, 1], got {noise_rate}')
    seeds = settings.FUSIONLAB['ABLATION_SEEDS'] if seeds is None else seeds
    base = _base_config(config)
    jobs = []
    for rho in (0.0, noise_rate):
        for name, overrides in ROBUSTNESS_VARIANTS:
            for offset in range(seeds):
                jobs.append((robustness_run_name(name, rho),
                             base.with_overrides(seed=base.seed + offset, text_noise_rate=rho, **overrides)))
    rows = _dispatch(jobs, None, out_dir)
    report = RobustnessReport(noise_rate, {
        (name, rho): rows[robustness_run_name(name, rho)] for rho in (0.0, noise_rate) for name, _ in ROBUSTNESS_VARIANTS
    })
    logger.info('robustness at noise rate %g: prmf drop %.4f, fixed alpha drop %.4f', noise_rate,
                report.drop('prmf'), report.drop('fixed_alpha'))
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / ROBUSTNESS_FILE).write_text(report.to_text(), encoding='utf-8')
    return report
