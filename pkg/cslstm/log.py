"""
The logging options for cslstm. Library modules log through ``logging.getLogger(__name__)``,
which puts them under the ``cslstm`` logger; only the command line installs handlers.

The default is to log info and above to the console. If wanted, it is possible to log to a file:

log = get_logger(logging.DEBUG, "run.log")

or to silence everything with a log_level of None.
"""

import logging

DEFAULT_FORMAT = "%(asctime)s [cslstm] [%(levelname)s] : %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def get_logger(log_level=logging.INFO, file_path_name=None, name="cslstm", fmt=DEFAULT_FORMAT):

    # create logger
    logger = logging.getLogger(name)

    logger.setLevel(logging.DEBUG)

    # create console handler and set level
    if file_path_name:
        ch = logging.FileHandler(file_path_name, mode="a", encoding="utf-8")
    elif log_level is None:
        logger.handlers = [logging.NullHandler()]
        return logger
    else:
        ch = logging.StreamHandler()

    ch.setLevel(log_level)

    # create formatter
    formatter = logging.Formatter(fmt, DATE_FORMAT)

    # add formatter to ch
    ch.setFormatter(formatter)

    # add ch to logger
    logger.handlers = [ch]

    return logger


def get_training_log(file_path_name=None):
    """
    The append-only training log, one bare line per epoch:
    ``epoch=<i> train_loss=<v> val_loss=<v> secs=<v>``.
    Without a path the lines go to the console.
    """
    logger = get_logger(logging.INFO, file_path_name, name="cslstm.training", fmt="%(message)s")
    # the console handler of the parent would print every line twice
    logger.propagate = False
    return logger
