"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DependencyError and
CheckpointError -> 3, TrainingError -> 4, any other ModhallError -> 2.
"""


class ModhallError(Exception):
    pass


class ConfigError(ModhallError):
    """Invalid configuration. May carry a list of individual problems."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DataError(ModhallError):
    pass


class ShapeError(ModhallError):
    pass


class LabelError(ModhallError):
    pass


class CheckpointError(ModhallError):
    pass


class DependencyError(ModhallError):
    pass


class TrainingError(ModhallError):
    def __init__(self, msg, last_good=None):
        super().__init__(msg)
        self.last_good = last_good
