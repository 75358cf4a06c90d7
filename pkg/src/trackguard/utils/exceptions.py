"""trackguard 例外階層

所有模組共用的錯誤類型。CLI 依例外類型決定結束碼。
"""

from typing import Optional


class TrackguardError(Exception):
    """trackguard 所有錯誤的基礎類"""

    pass


class ConfigurationError(TrackguardError):
    """配置錯誤異常"""

    pass


class DomainError(TrackguardError, ValueError):
    """純運算的參數不合法（t 超出範圍、維度不符、標籤越界等）"""

    pass


class DataFormatError(TrackguardError):
    """檔案格式錯誤，訊息中會帶出路徑、行號或欄位"""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ):
        self.path = path
        self.line = line
        self.field = field

        location = []
        if path is not None:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")

        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class ModelVersionError(DataFormatError):
    """模型或校準檔的版本標記不符"""

    pass


class ArtifactIOError(TrackguardError):
    """讀寫產物檔案失敗（附帶路徑）"""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"{path}: {reason}")
