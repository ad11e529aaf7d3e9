import logging
import os


def setup_logging(level="INFO", log_file=None):
    """
    Sets up logging for the lab.
    Logs to console and, when `log_file` is given, to that file as well.
    """
    handlers = [logging.StreamHandler()]  # Log to console
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )
    logging.debug("Logging setup complete.")


if __name__ == "__main__":
    setup_logging()
    logging.info("Test message from setup_logger.py")
