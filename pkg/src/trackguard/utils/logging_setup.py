"""日誌設定

統一的 logging 初始化。日誌一律輸出到 stderr，stdout 保留給 predict 的機器可讀輸出。
"""

import logging
import sys
from typing import Optional

DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str = "INFO", log_format: Optional[str] = None) -> None:
    """
    設置日誌配置

    Args:
        level: 日誌等級名稱（DEBUG/INFO/WARNING/ERROR/CRITICAL）
        log_format: logging 格式字串，未提供時使用預設格式
    """
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=log_format or DEFAULT_LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def status(message: str) -> None:
    """輸出給操作人員看的狀態行（stderr）"""
    print(message, file=sys.stderr, flush=True)
