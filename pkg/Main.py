
# Main.py
# ────────────────────────────────────────────────────────────────────────────────

import os
import sys
import logging

from dotenv import load_dotenv

# ─── (1) Import the command-line front end ───────────────────────────────────────
from src.cli import run
from src.setup_logger import setup_logging

# ─── (2) Load environment & configure logging ────────────────────────────────────
# BILLIARD_* defaults (tolerances, node counts, K_max, jobs) come from .env
load_dotenv()
setup_logging(
    level=os.getenv("BILLIARD_LOG_LEVEL", "INFO"),
    log_file=os.getenv("BILLIARD_LOG_FILE"),
)
logger = logging.getLogger(__name__)

# ─── (3) Run ─────────────────────────────────────────────────────────────────────
if __name__ == "__main__":
    status = run()
    logger.debug(f"Exiting with status {status}")
    sys.exit(status)
