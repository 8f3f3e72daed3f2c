"""
File-based result storage: every output is written atomically (temp + rename)
"""
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd
import tomli_w

logger = logging.getLogger(__name__)


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    """Write payload next to path, then rename over it"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ResultStorage:
    """CSV / text / TOML outputs of one experiment directory"""

    def __init__(self, out_dir: Union[str, Path] = "results"):
        self.out_dir = Path(out_dir)

        # Create output directory if it doesn't exist
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        """Write a DataFrame as CSV without the index"""
        text = frame.to_csv(index=False, lineterminator="\n")
        return self.write_text(name, text)

    def write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        try:
            atomic_write_bytes(target, text.encode("utf-8"))
        except OSError as e:
            logger.error(f"❌ Error writing {target}: {e}")
            raise
        logger.debug(f"wrote {target}")
        return target

    def write_toml(self, name: str, document: Dict[str, Any]) -> Path:
        return self.write_text(name, tomli_w.dumps(document))

    def read_frame(self, name: str) -> pd.DataFrame:
        return pd.read_csv(self.path(name))
