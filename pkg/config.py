import logging
import os

from dotenv import load_dotenv
from dynaconf import Dynaconf

load_dotenv()

LOG_FORMAT = "[%(asctime)s %(levelname)s %(name)s] %(message)s"

# DON'T MOVE: only the first `basicConfig` call counts, and it has to run before Dynaconf logs anything
_requested_level = os.getenv("LOG_LEVEL", "INFO").strip().upper()
_level = logging.getLevelName(_requested_level)
logging.basicConfig(level=_level if isinstance(_level, int) else logging.INFO, format=LOG_FORMAT)
if not isinstance(_level, int):
    logging.getLogger(__name__).warning(f"LOG_LEVEL={_requested_level!r} is not a logging level; using INFO")

# Process settings from the environment and `.env`, read as `config.SEED` / `config.THREADS`:
#   QSDC_SEED     base seed when neither the experiment file nor --seed sets one
#   QSDC_THREADS  worker cap when neither the experiment file nor --threads sets one
config = Dynaconf(
    load_dotenv=True,
    environment=False,  # no [default]/[development] layering
    envvar_prefix="QSDC",
)
