"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or parameter combination."""


class ContractError(ConfigError):
    """A call violated an operation's preconditions (e.g. terminal in a continuing task)."""


class NotReadyError(RuntimeError):
    """Replay buffer holds too few transitions to sample."""
