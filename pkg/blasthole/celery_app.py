from celery import Celery

from blasthole.config import Config


def make_celery(config=Config):
    """
    Create the Celery instance that runs batch sweeps.

    Tasks execute in-process (eager) unless CELERY_TASK_ALWAYS_EAGER is
    switched off and a real broker is configured.
    """
    celery = Celery(
        "blasthole",
        broker=config.CELERY_BROKER_URL,
        backend=config.CELERY_RESULT_BACKEND,
        include=["blasthole.tasks.sweeps"],
    )

    # Configure Celery
    celery.conf.update(
        task_serializer="json",
        accept_content=["json"],
        result_serializer="json",
        timezone="UTC",
        task_track_started=True,
        task_always_eager=config.CELERY_TASK_ALWAYS_EAGER,
        task_eager_propagates=True,
        worker_max_tasks_per_child=1000,
        task_acks_late=True,
    )
    return celery


# Create a celery instance for task definitions
celery = make_celery()
