#!/usr/bin/env python3
"""
trackguard 主入口
軌道電路訊號合成 → 分類器訓練 → 共形校準 → 早期偵測評估
"""

import os
import sys

# 添加根目錄到 Python 路徑
root_dir = os.path.abspath(os.path.dirname(__file__))
sys.path.insert(0, root_dir)


def log_startup_info(command: str) -> None:
    """顯示啟動資訊（stderr，stdout 保留給 predict 輸出）"""
    print("=" * 60, file=sys.stderr)
    print(f"🚦 trackguard {command}", file=sys.stderr)
    print("=" * 60, file=sys.stderr)


def main() -> None:
    """主函數"""
    argv = sys.argv[1:]
    if argv and not argv[0].startswith("-"):
        log_startup_info(argv[0])

    try:
        from src.trackguard.api.cli.main import main as cli_main
    except ImportError as e:
        print(f"❌ 模組導入失敗: {e}", file=sys.stderr)
        print("💡 執行 pip install -r requirements.txt", file=sys.stderr)
        sys.exit(1)

    sys.exit(cli_main(argv))


if __name__ == "__main__":
    main()
