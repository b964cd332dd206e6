from django.apps import AppConfig


class RunsConfig(AppConfig):
    name = 'fusionlab.runs'
    label = 'runs'
