from blasthole.celery_app import celery  # noqa: F401
import blasthole.tasks.sweeps  # noqa: F401
