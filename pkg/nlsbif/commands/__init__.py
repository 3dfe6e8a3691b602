from nlsbif.commands.config import load_config, parse_config, RunConfig  # noqa: F401
from nlsbif.commands.run import main  # noqa: F401
