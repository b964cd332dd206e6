import math
from dataclasses import dataclass

import numpy as np

from fusionlab.utils.config_file import parse_config_text
from fusionlab.utils.errors import FormatError, UndefinedAurocError
from .classification import ConfusionMatrix, compute_metrics, confusion
from .ranking import auroc_by_class

RECORD_KEYS = ('acc', 'bacc', 'kappa', 'f1', 'prec', 'rec', 'auroc')


@dataclass(frozen=True)
class MetricsReport:
    confusion: ConfusionMatrix
    acc: float
    bacc: float
    kappa: float
    f1: float
    prec: float
    rec: float
    auroc: float
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return {key: getattr(self, key) for key in RECORD_KEYS}

    def to_record(self) -> str:
        """Flat ``key = value`` lines with six decimals, in a fixed key order."""
        lines = [f'{key} = {value:.6f}' for key, value in self.as_dict().items()]
        return '\n'.join(lines) + '\n'


def parse_record(text: str) -> dict[str, float]:
    values = parse_config_text(text)
    if set(values) != set(RECORD_KEYS):
        raise FormatError(f'metrics record keys {sorted(values)} differ from {list(RECORD_KEYS)}')
    return {key: float(values[key] or 'nan') for key in RECORD_KEYS}


def build_report(labels, predictions, scores, num_classes: int) -> MetricsReport:
    """
    Full report from labels, predicted classes and per-class scores [N×K].\n
    If no class admits an AUROC the value is NaN and ``auroc_undefined`` is flagged.
    """
    cm = confusion(predictions, labels, num_classes)
    metrics = compute_metrics(cm)
    flags = [f'zero_division:{flag}' for flag in metrics.zero_division]
    try:
        ranking = auroc_by_class(np.asarray(scores), labels)
        value = ranking.value
        flags.extend(f'auroc_skipped:{cls}' for cls in ranking.skipped)
    except UndefinedAurocError:
        value = math.nan
        flags.append('auroc_undefined')
    return MetricsReport(
        confusion=cm,
        acc=metrics.acc,
        bacc=metrics.bacc,
        kappa=metrics.kappa,
        f1=metrics.f1_weighted,
        prec=metrics.prec_weighted,
        rec=metrics.rec_weighted,
        auroc=value,
        flags=tuple(flags),
    )
