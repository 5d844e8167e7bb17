# services/logging/logging_config.py

import logging
import os
import sys

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(console_level=logging.WARNING, log_dir=None):
    """
    Sets up the logging configuration.

    Everything from DEBUG up goes to logs/application.log; the console handler
    writes to stderr so stdout stays free for command summaries.
    """
    logger = logging.getLogger()  # Get the root logger
    logger.setLevel(logging.DEBUG)

    # Create logs directory if it doesn't exist
    log_dir = log_dir or os.path.join(os.getcwd(), 'logs')
    os.makedirs(log_dir, exist_ok=True)

    # Clear existing handlers to prevent duplicate logs
    if logger.hasHandlers():
        logger.handlers.clear()

    formatter = logging.Formatter(LOG_FORMAT)

    # File Handler
    log_file = os.path.join(log_dir, 'application.log')
    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    # Console Handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    logger.info(f"Logging is set up. Console level: {logging.getLevelName(console_level)}, Log file: {log_file}")
    return log_file
