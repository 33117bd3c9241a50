# utils/log.py

import logging
import sys

__all__ = ["logger", "setup_logging"]

LOGGER_NAME = "esg_merton"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

# 全包共用的日志对象，各模块通过 from ..utils.log import logger 引用
logger = logging.getLogger(LOGGER_NAME)
logger.addHandler(logging.NullHandler())


def setup_logging(level: str = "WARNING") -> logging.Logger:
    """为命令行入口安装stderr日志输出

    Args:
        level: 日志级别名称，如 "INFO"、"WARNING"

    Returns:
        配置后的包日志对象
    """
    numeric_level = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric_level, int):
        numeric_level = logging.WARNING
        logger.warning(f"[log] 未知日志级别 {level}，使用 WARNING")

    # 重复调用时替换已有的stderr处理器，避免重复输出
    for handler in list(logger.handlers):
        if getattr(handler, "_esg_merton_stderr", False):
            logger.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._esg_merton_stderr = True
    logger.addHandler(handler)
    logger.setLevel(numeric_level)
    return logger
