from celery import shared_task

from .serializers import load_run_config
from .services import run_variant


@shared_task
def train_ablation_variant(config_values: dict, data_dir: str | None = None,
                           out_dir: str | None = None) -> dict[str, float]:
    return run_variant(config=load_run_config(config_values), data_dir=data_dir, out_dir=out_dir)
