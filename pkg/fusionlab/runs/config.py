import hashlib
from dataclasses import asdict, dataclass, fields, replace

from fusionlab.curriculum.schedule import CurriculumSchedule
from fusionlab.curriculum.training import TrainConfig
from fusionlab.prmf.model import ModelConfig
from fusionlab.synthdata.generator import SynthConfig
from fusionlab.utils.config_file import format_config

CONFIG_FILE = 'config.txt'


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a run, flat, as read from a ``key = value`` file with defaults expanded."""
    # run and training
    seed: int
    precision: str
    batch_size: int
    learning_rate: float
    epochs: int
    adam_beta1: float
    adam_beta2: float
    adam_eps: float
    # curriculum
    lambda_start: float
    lambda_end: float
    lambda_shape: str
    phase1_end: int | None
    phase2_end: int | None
    # synthetic data
    samples_per_class: int
    image_dim: int
    text_dim: int
    image_separation: float
    image_ambiguity: float
    text_separation: float
    text_offset: float
    within_class_std: float
    text_noise_rate: float
    text_noise_level: float
    val_fraction: float
    pre_corrupt_text: float
    # model
    lora_rank: int
    separate_image_head: bool
    # ablations
    disable_text_branch: bool
    disable_visual_branch: bool
    disable_prmf: bool
    disable_curriculum: bool
    disable_confidence: bool

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            seed=self.seed,
            precision=self.precision,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            use_curriculum=not self.disable_curriculum,
        )

    def schedule(self) -> CurriculumSchedule:
        return CurriculumSchedule(
            total_epochs=self.epochs,
            lambda_start=self.lambda_start,
            lambda_end=self.lambda_end,
            shape=self.lambda_shape,
            phase1_end=self.phase1_end,
            phase2_end=self.phase2_end,
        )

    def synth_config(self) -> SynthConfig:
        names = {f.name for f in fields(SynthConfig)}
        return SynthConfig(**{key: value for key, value in self.values().items() if key in names})

    def fusion_mode(self) -> str:
        if self.disable_visual_branch:
            return 'text_only'
        if self.disable_text_branch:
            return 'image_only'
        if self.disable_prmf:
            return 'concat'
        return 'prmf'

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            image_dim=self.image_dim,
            text_dim=self.text_dim,
            lora_rank=self.lora_rank,
            fusion=self.fusion_mode(),
            fixed_alpha=0.5 if self.disable_confidence else None,
            separate_image_head=self.separate_image_head,
            seed=self.seed,
        )

    def values(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return format_config(self.values(), header='resolved run configuration')

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode('utf-8')).hexdigest()

    def with_overrides(self, **overrides) -> 'RunConfig':
        return replace(self, **overrides)
