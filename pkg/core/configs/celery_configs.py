from decouple import config

broker_connection_retry_on_startup = True

# eager by default: ablation variants run inline unless a broker is configured.
broker_url = config('CELERY_BROKER_URL', default='memory://')
result_backend = config('CELERY_RESULT_BACKEND', default='cache+memory://')
task_always_eager = config('CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)
task_eager_propagates = True

worker_prefetch_multiplier = 1

timezone = config('TIME_ZONE', default='UTC')

task_serializer = 'json'
result_serializer = 'json'
accept_content = ['json']
