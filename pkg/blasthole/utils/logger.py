import logging
import os

from blasthole.config import Config

# Create logs directory if it doesn't exist
LOG_DIR = Config.LOG_DIR
if not os.path.exists(LOG_DIR):
    os.makedirs(LOG_DIR)

# Keep third-party chatter out of the console
logging.getLogger("celery").setLevel(logging.WARNING)

logging.basicConfig(
    level=getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s - %(levelname)s - %(message)s",
    handlers=[
        logging.StreamHandler(),
        logging.FileHandler(os.path.join(LOG_DIR, "blasthole.log")),
    ],
)

logger = logging.getLogger("blasthole")
