from dataclasses import dataclass, field

from fusionlab.utils.errors import ConfigurationError, EpochRangeError

LAMBDA_SHAPES = ('linear',)


@dataclass(frozen=True)
class CurriculumSchedule:
    """
    Epoch-indexed loss weight and the three training phases.\n
    Phase boundaries default to ``max(1, E // 3)`` and ``max(p1 + 1, 2E // 3)``.
    """
    total_epochs: int = 150
    lambda_start: float = 0.3
    lambda_end: float = 1.0
    shape: str = 'linear'
    phase1_end: int | None = None
    phase2_end: int | None = None

    def __post_init__(self):
        if self.total_epochs < 2:
            raise ConfigurationError(f'a schedule needs at least 2 epochs, got {self.total_epochs}')
        if self.shape not in LAMBDA_SHAPES:
            raise ConfigurationError(f'unknown lambda shape {self.shape!r}, expected one of {LAMBDA_SHAPES}')
        if not 0.0 <= self.lambda_start <= self.lambda_end <= 1.0:
            raise ConfigurationError(
                f'need 0 <= lambda_start <= lambda_end <= 1, got {self.lambda_start} and {self.lambda_end}'
            )
        phase1_end = self.phase1_end if self.phase1_end is not None else max(1, self.total_epochs // 3)
        phase2_end = self.phase2_end if self.phase2_end is not None else max(phase1_end + 1,
                                                                            2 * self.total_epochs // 3)
        if not 0 < phase1_end < phase2_end <= self.total_epochs:
            raise ConfigurationError(
                f'need 0 < phase1_end < phase2_end <= {self.total_epochs}, got {phase1_end} and {phase2_end}'
            )
        object.__setattr__(self, 'phase1_end', phase1_end)
        object.__setattr__(self, 'phase2_end', phase2_end)

    def check_epoch(self, epoch: int):
        if not 0 <= epoch < self.total_epochs:
            raise EpochRangeError(f'epoch {epoch} outside [0, {self.total_epochs})')

    def phase(self, epoch: int) -> int:
        self.check_epoch(epoch)
        if epoch < self.phase1_end:
            return 1
        if epoch < self.phase2_end:
            return 2
        return 3


def lambda_at(schedule: CurriculumSchedule, epoch: int) -> float:
    """Linear from ``lambda_start`` at epoch 0 to ``lambda_end`` at epoch E - 1, endpoints exact."""
    schedule.check_epoch(epoch)
    if epoch == 0:
        return schedule.lambda_start
    if epoch == schedule.total_epochs - 1:
        return schedule.lambda_end
    span = schedule.lambda_end - schedule.lambda_start
    value = schedule.lambda_start + span * epoch / (schedule.total_epochs - 1)
    return min(max(value, schedule.lambda_start), schedule.lambda_end)


@dataclass(frozen=True)
class FreezeMask:
    phase: int
    visual_encoder: bool = True
    text_encoder: bool = True
    projection: bool = True
    confidence: bool = True
    classifier: bool = True
    groups: tuple[str, ...] = field(
        default=('visual_encoder', 'text_encoder', 'projection', 'confidence', 'classifier'), repr=False,
    )

    def trainable_groups(self) -> frozenset[str]:
        return frozenset(group for group in self.groups if getattr(self, group))

    def frozen_groups(self) -> frozenset[str]:
        return frozenset(group for group in self.groups if not getattr(self, group))


def stage_for_epoch(schedule: CurriculumSchedule, epoch: int) -> FreezeMask:
    """
    Phase 1 freezes the text encoder, phase 2 trains everything, and phase 3 refreezes
    both encoders so only projection, confidence and classifier keep training.
    """
    phase = schedule.phase(epoch)
    if phase == 1:
        return FreezeMask(phase=1, text_encoder=False)
    if phase == 2:
        return FreezeMask(phase=2)
    return FreezeMask(phase=3, visual_encoder=False, text_encoder=False)
