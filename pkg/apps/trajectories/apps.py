from django.apps import AppConfig


class TrajectoriesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.trajectories'
    verbose_name = 'Trajectory data'
