# services/errors.py


class ScwQkdError(Exception):
    """
    Base class for every error raised by the simulator and the distillation pipeline.
    """


class ConfigError(ScwQkdError):
    """
    Raised when a configuration value is missing, unknown or out of range.
    """
    def __init__(self, field, message, line=None):
        self.field = field
        self.line = line
        location = f"line {line}: " if line is not None else ""
        super().__init__(f"{location}{field}: {message}")


class LinkModelError(ScwQkdError):
    pass


class ProtocolError(ScwQkdError):
    pass


class DistillError(ScwQkdError):
    pass


class QberAbortError(DistillError):
    """
    Raised when the sampled QBER exceeds the abort threshold.
    """
    def __init__(self, q_est, threshold):
        self.q_est = q_est
        self.threshold = threshold
        super().__init__(f"Estimated QBER {q_est:.4f} exceeds abort threshold {threshold:.4f}")


class MalformedLogError(ScwQkdError):
    """
    Raised by the detection-log reader; line_number is 1-based.
    """
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class ChannelError(ScwQkdError):
    pass
