from decouple import config

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'fusionlab': {
            'handlers': ['console'],
            'level': config('FUSIONLAB_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}
