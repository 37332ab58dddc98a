"""
Logging utilities.

Long-running operations (greedy ranking, hyperparameter search, model
training) accept an ``options`` dict whose ``"logger"`` entry can be any
object with the usual ``debug/info/warning/error`` methods, such as a
``logging.Logger``. When no logger is given the NoopLogger below is used and
nothing is printed.
"""

from typing import Any, Dict, Optional, Union


class NoopLogger:
    """
    A logger that does nothing.
    """

    def debug(self, msg: object, *args: Any, **kwargs: Any) -> None:
        """
        Drop a debug message.
        """

    def error(self, msg: object, *args: Any, **kwargs: Any) -> None:
        """
        Drop an error message.
        """

    def info(self, msg: object, *args: Any, **kwargs: Any) -> None:
        """
        Drop an info message.
        """

    def warning(self, msg: object, *args: Any, **kwargs: Any) -> None:
        """
        Drop a warning message.
        """


def get_logger(options: Optional[Dict[str, Any]]) -> Union[NoopLogger, Any]:
    """
    Return the logger carried by an options dict, or a NoopLogger
    """
    return (options or {}).get("logger") or NoopLogger()
