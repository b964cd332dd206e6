from decouple import config

FUSIONLAB = {
    'PRECISION': config('FUSIONLAB_PRECISION', default='float64'),
    'SEED': config('FUSIONLAB_SEED', default=42, cast=int),
    # optimizer and loop
    'BATCH_SIZE': config('FUSIONLAB_BATCH_SIZE', default=32, cast=int),
    'LEARNING_RATE': config('FUSIONLAB_LEARNING_RATE', default=1e-4, cast=float),
    'EPOCHS': config('FUSIONLAB_EPOCHS', default=150, cast=int),
    'ADAM_BETA1': 0.9,
    'ADAM_BETA2': 0.999,
    'ADAM_EPS': 1e-8,
    # curriculum
    'LAMBDA_START': 0.3,
    'LAMBDA_END': 1.0,
    'LAMBDA_SHAPE': 'linear',
    # model
    'LORA_RANK': config('FUSIONLAB_LORA_RANK', default=8, cast=int),
    'IMAGE_DIM': 512,
    'TEXT_DIM': 768,
    'NUM_CLASSES': 3,
    # verification
    'GRADCHECK_EPS': 1e-5,
    'GRADCHECK_TOLERANCE': 1e-4,
    'ABLATION_SEEDS': config('FUSIONLAB_ABLATION_SEEDS', default=5, cast=int),
    # long default-scale experiment tests
    'SLOW_TESTS': config('FUSIONLAB_SLOW_TESTS', default=False, cast=bool),
}
