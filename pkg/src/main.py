import logging
import sys
from pathlib import Path
from typing import List, Optional

from cli.commands import main as cli_main
from config.settings import Config


class SafeConsoleFilter(logging.Filter):
    """Sanitize log records."""
    def __init__(self, encoding: str | None = None):
        super().__init__()
        self.encoding = encoding or getattr(sys.stdout, 'encoding', None) or 'cp1252'

    def filter(self, record: logging.LogRecord) -> bool:
        msg = record.getMessage()
        try:
            msg.encode(self.encoding, errors='strict')
        except Exception:
            try:
                safe = msg.encode(self.encoding, errors='replace').decode(self.encoding, errors='replace')
                record.msg = safe
                record.args = ()
            except Exception:
                record.msg = ''.join(ch if ord(ch) < 128 else '?' for ch in msg)
                record.args = ()
        return True


def setup_logging(level: Optional[str] = None, log_dir: Optional[Path] = None) -> None:
    """Root logger: file handler under the log directory plus a sanitised console handler."""
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.INFO))
    formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')

    root_logger.handlers.clear()
    if Config.LOG_TO_FILE:
        log_dir = Path(log_dir or Config.LOG_DIR)
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_dir / 'centdian.log', encoding='utf-8')
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    console_handler.addFilter(SafeConsoleFilter())
    root_logger.addHandler(console_handler)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point: configure logging, then hand over to the command line."""
    setup_logging()
    try:
        Config.validate()
    except ValueError as e:
        logging.error(f"❌ Configuration validation failed: {e}")
        return 2
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
