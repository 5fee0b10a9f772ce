import logging

LOG_FORMAT = '[%(asctime)s] %(levelname)s %(name)s: %(message)s'


def setup_logging(level: str='INFO'):
    logging.basicConfig(level=getattr(logging, level.upper()), format=LOG_FORMAT)
