import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from config.settings import Config


class FileManager:
    """Writes run artifacts (CSV tables, JSON documents) under one output directory."""

    def __init__(self, output_dir: Optional[Path] = None):
        self.output_dir = Path(output_dir) if output_dir else Config.DATA_DIR / "outputs"

    def resolve(self, path) -> Path:
        """Relative names land in the output directory; absolute paths are kept."""
        path = Path(path)
        if not path.is_absolute() and path.parent == Path('.'):
            path = self.output_dir / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_csv(self, path, rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> Path:
        """Fixed column order, '\\n' line endings so identical runs give identical bytes."""
        path = self.resolve(path)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator='\n', extrasaction='ignore')
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _format_cell(row.get(k)) for k in columns})
        logging.info(f"💾 CSV written: {path}")
        return path

    def write_json(self, path, document: Any) -> Path:
        path = self.resolve(path)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=4)
            f.write("\n")
        logging.info(f"💾 JSON written: {path}")
        return path

    def read_csv(self, path) -> List[Dict[str, str]]:
        with open(Path(path), 'r', encoding='utf-8', newline='') as f:
            return list(csv.DictReader(f))


def _format_cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value) if value == value else "nan"
    return "" if value is None else value


file_manager = FileManager()
