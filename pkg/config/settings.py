"""Environment-backed defaults"""
import logging
import os

from dotenv import load_dotenv

load_dotenv()

VERSION = "1.0.0"

DEFAULT_OUTPUT_DIR = os.getenv("PC_OUTPUT_DIR", "outputs")
DEFAULT_LOG_LEVEL = os.getenv("PC_LOG_LEVEL", "INFO").upper()
DEFAULT_SEED = int(os.getenv("PC_SEED", "0"))


def configure_logging(level: str = DEFAULT_LOG_LEVEL):
    """Root logging setup for command-line runs"""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
