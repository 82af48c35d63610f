"""Cross-platform console glyphs, project paths and JSON file helpers."""

import os
import platform
import sys
from pathlib import Path
from typing import Any, Optional, Union

import orjson

IS_WINDOWS = platform.system() == "Windows"


class CrossPlatformEmoji:
    """Handle status glyphs across different platforms and terminals."""

    EMOJI_MAP = {
        "🚀": {"utf8": "🚀", "fallback": "[START]"},
        "✅": {"utf8": "✅", "fallback": "[OK]"},
        "❌": {"utf8": "❌", "fallback": "[ERROR]"},
        "⚠️": {"utf8": "⚠️", "fallback": "[WARN]"},
        "🔄": {"utf8": "🔄", "fallback": "[ITER]"},
        "📊": {"utf8": "📊", "fallback": "[STATS]"},
        "⏱️": {"utf8": "⏱️", "fallback": "[TIME]"},
        "💾": {"utf8": "💾", "fallback": "[SAVE]"},
        "⚡": {"utf8": "⚡", "fallback": "[PF]"},
        "🪟": {"utf8": "🪟", "fallback": "[WIN]"},
        "🎉": {"utf8": "🎉", "fallback": "[DONE]"},
    }

    @classmethod
    def _supports_utf8(cls) -> bool:
        if os.environ.get("PYTHONUTF8") == "1":
            return True
        encoding = getattr(sys.stdout, "encoding", None) or ""
        if "utf-8" in encoding.lower() or "utf8" in encoding.lower():
            return True
        if IS_WINDOWS:
            return os.environ.get("ENABLE_EMOJIS", "").lower() in ["1", "true", "yes"]
        return True

    @classmethod
    def get(cls, emoji: str) -> str:
        """Get emoji or fallback based on platform support."""
        if emoji not in cls.EMOJI_MAP:
            return emoji
        if cls._supports_utf8():
            return cls.EMOJI_MAP[emoji]["utf8"]
        return cls.EMOJI_MAP[emoji]["fallback"]


class CrossPlatformPaths:
    """Handle path operations across platforms."""

    @staticmethod
    def resolve(path: Union[str, Path], base: Optional[Path] = None) -> Path:
        """Resolve a relative path against base (or the working directory)."""
        path = Path(path)
        if path.is_absolute():
            return path
        if base is not None and (base / path).exists():
            return base / path
        return path

    @staticmethod
    def ensure_dir(path: Union[str, Path]) -> Path:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        return path


class CrossPlatformFileOperations:
    """JSON reads and writes with consistent encoding."""

    @staticmethod
    def read_json(file_path: Union[str, Path]) -> Any:
        with open(file_path, "rb") as f:
            return orjson.loads(f.read())

    @staticmethod
    def write_json(file_path: Union[str, Path], data: Any) -> Path:
        file_path = Path(file_path)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        payload = orjson.dumps(data, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY)
        with open(file_path, "wb") as f:
            f.write(payload)
        return file_path


def status(emoji: str, message: str) -> None:
    """Print one console status line."""
    print(f"{CrossPlatformEmoji.get(emoji)} {message}")
