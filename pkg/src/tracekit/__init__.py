from dotenv import load_dotenv

# Load environment variables from .env file automatically
load_dotenv()

from tracekit.cli import main  # noqa: E402

__all__ = ["main"]
