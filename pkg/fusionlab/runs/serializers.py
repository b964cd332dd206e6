from django.conf import settings
from rest_framework import serializers

from fusionlab.curriculum.schedule import LAMBDA_SHAPES
from fusionlab.diffcore.tape import PRECISIONS
from fusionlab.synthdata.generator import SynthConfig
from fusionlab.utils.config_file import read_config_file
from fusionlab.utils.errors import ConfigurationError
from .config import RunConfig

SYNTH_DEFAULTS = SynthConfig()


def setting(key: str):
    """Default read from ``settings.FUSIONLAB`` when the serializer runs, not at import."""
    return lambda: settings.FUSIONLAB[key]


class RunConfigSerializer(serializers.Serializer):
    seed = serializers.IntegerField(min_value=0, default=setting('SEED'))
    precision = serializers.ChoiceField(choices=sorted(PRECISIONS), default=setting('PRECISION'))
    batch_size = serializers.IntegerField(min_value=1, default=setting('BATCH_SIZE'))
    learning_rate = serializers.FloatField(min_value=0.0, default=setting('LEARNING_RATE'))
    epochs = serializers.IntegerField(min_value=2, default=setting('EPOCHS'))
    adam_beta1 = serializers.FloatField(min_value=0.0, max_value=0.999999, default=setting('ADAM_BETA1'))
    adam_beta2 = serializers.FloatField(min_value=0.0, max_value=0.999999, default=setting('ADAM_BETA2'))
    adam_eps = serializers.FloatField(min_value=0.0, default=setting('ADAM_EPS'))

    lambda_start = serializers.FloatField(min_value=0.0, max_value=1.0, default=setting('LAMBDA_START'))
    lambda_end = serializers.FloatField(min_value=0.0, max_value=1.0, default=setting('LAMBDA_END'))
    lambda_shape = serializers.ChoiceField(choices=LAMBDA_SHAPES, default=setting('LAMBDA_SHAPE'))
    phase1_end = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    phase2_end = serializers.IntegerField(min_value=2, allow_null=True, default=None)

    samples_per_class = serializers.IntegerField(min_value=2, default=SYNTH_DEFAULTS.samples_per_class)
    image_dim = serializers.IntegerField(min_value=2, default=setting('IMAGE_DIM'))
    text_dim = serializers.IntegerField(min_value=4, default=setting('TEXT_DIM'))
    image_separation = serializers.FloatField(min_value=0.0, default=SYNTH_DEFAULTS.image_separation)
    image_ambiguity = serializers.FloatField(min_value=0.0, default=SYNTH_DEFAULTS.image_ambiguity)
    text_separation = serializers.FloatField(min_value=0.0, default=SYNTH_DEFAULTS.text_separation)
    text_offset = serializers.FloatField(min_value=0.0, default=SYNTH_DEFAULTS.text_offset)
    within_class_std = serializers.FloatField(min_value=1e-12, default=SYNTH_DEFAULTS.within_class_std)
    text_noise_rate = serializers.FloatField(min_value=0.0, max_value=1.0, default=SYNTH_DEFAULTS.text_noise_rate)
    text_noise_level = serializers.FloatField(min_value=0.0, max_value=1.0,
                                              default=SYNTH_DEFAULTS.text_noise_level)
    val_fraction = serializers.FloatField(min_value=0.01, max_value=0.99, default=SYNTH_DEFAULTS.val_fraction)
    pre_corrupt_text = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)

    lora_rank = serializers.IntegerField(min_value=0, default=setting('LORA_RANK'))
    separate_image_head = serializers.BooleanField(default=False)

    disable_text_branch = serializers.BooleanField(default=False)
    disable_visual_branch = serializers.BooleanField(default=False)
    disable_prmf = serializers.BooleanField(default=False)
    disable_curriculum = serializers.BooleanField(default=False)
    disable_confidence = serializers.BooleanField(default=False)

    def to_internal_value(self, data):
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: 'unknown configuration key.' for key in unknown})
        return super().to_internal_value(data)

    def validate(self, attrs):
        if attrs['disable_text_branch'] and attrs['disable_visual_branch']:
            raise serializers.ValidationError('at most one of disable_text_branch and disable_visual_branch may be set.')
        if attrs['disable_confidence'] and (
                attrs['disable_prmf'] or attrs['disable_text_branch'] or attrs['disable_visual_branch']):
            raise serializers.ValidationError('disable_confidence needs the fusion block with both branches.')
        if attrs['lambda_start'] > attrs['lambda_end']:
            raise serializers.ValidationError({'lambda_end': 'must not be below lambda_start.'})
        if attrs['lora_rank'] > min(attrs['image_dim'], attrs['text_dim']):
            raise serializers.ValidationError({'lora_rank': 'must not exceed the embedding dimensions.'})
        config = RunConfig(**attrs)
        try:
            config.train_config()
            config.schedule()
            config.synth_config()
        except ConfigurationError as e:
            raise serializers.ValidationError(str(e))
        return attrs


def _flatten(errors, prefix: str = '') -> list[str]:
    if isinstance(errors, dict):
        return [message for key, value in errors.items()
                for message in _flatten(value, f'{key}: ' if key != 'non_field_errors' else '')]
    if isinstance(errors, list):
        return [message for value in errors for message in _flatten(value, prefix)]
    return [f'{prefix}{errors}']


def load_run_config(values: dict | None = None) -> RunConfig:
    """Validates raw ``key -> str`` values; missing keys take their defaults."""
    serializer = RunConfigSerializer(data=values or {})
    if not serializer.is_valid():
        raise ConfigurationError('; '.join(_flatten(serializer.errors)))
    return RunConfig(**serializer.validated_data)


def read_run_config(path=None, **overrides) -> RunConfig:
    """Reads a run configuration file (or nothing) and applies command-line overrides."""
    values = read_config_file(path) if path else {}
    values.update({key: value for key, value in overrides.items() if value is not None})
    return load_run_config(values)
