class AiryEngineError(Exception):
    """Base class for every domain error raised by the engine.

    The CLI maps these to exit code 1; anything else is a bug.
    """

    def __init__(self, message: str, position: int = None):
        super().__init__(message)
        self.message = message
        self.position = position

    @property
    def error_type(self) -> str:
        return type(self).__name__
