"""
Resolution of command options from defaults, an optional JSON config file and
explicit flags.
"""
import logging
from dataclasses import dataclass, field

from ..data.json_handler import JsonHandler
from ..utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

# keys that describe the invocation rather than the run
_NON_CONFIG_KEYS = {"command", "config", "verbose", "handler"}


@dataclass
class RunConfig:
    """
    Fully resolved options of one command.

    Attributes:
        command (str): Subcommand name
        values (dict): Option name to resolved value
        config_file (str): Config file the values were read from, if any
    """
    command: str
    values: dict = field(default_factory=dict)
    config_file: str = None

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        value = self.values.get(key)
        return default if value is None else value

    def require(self, *keys):
        """
        Raise ConfigurationError naming every key that is still unset.
        """
        missing = [key for key in keys if self.values.get(key) is None]
        if missing:
            flags = ", ".join("--" + key.replace("_", "-") for key in missing)
            raise ConfigurationError(f"{self.command}: missing required option(s) {flags}")

    def echo(self):
        """Plain dict for the audit trail of reports and metadata."""
        echo = {"command": self.command, **self.values}
        if self.config_file:
            echo["config_file"] = self.config_file
        return echo


def load_config_file(path):
    """
    Read a JSON object of option values keyed by option name.

    Dashes in keys are accepted and mapped to underscores.
    """
    document = JsonHandler(path).load_data()
    if not isinstance(document, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    return {key.replace("-", "_"): value for key, value in document.items()}


def resolve(args, defaults):
    """
    Merge documented defaults, the config file and explicit flags, in that
    order of increasing precedence.

    Options left at ``None`` by argparse count as not given on the command line.

    Args:
        args (argparse.Namespace): Parsed command line
        defaults (dict): Documented defaults of the command

    Returns:
        RunConfig: The resolved configuration
    """
    flags = {key: value for key, value in vars(args).items() if key not in _NON_CONFIG_KEYS}
    values = dict(defaults)

    config_file = getattr(args, "config", None)
    if config_file:
        from_file = load_config_file(config_file)
        unknown = sorted(set(from_file) - set(flags) - set(defaults))
        if unknown:
            raise ConfigurationError(f"config file {config_file} sets unknown option(s) {', '.join(unknown)}")
        values.update(from_file)
        logger.debug("read %d option(s) from %s", len(from_file), config_file)

    values.update({key: value for key, value in flags.items() if value is not None})
    for key in flags:
        values.setdefault(key, None)
    return RunConfig(command=args.command, values=values, config_file=config_file)
