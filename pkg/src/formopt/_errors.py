class FormoptError(ValueError):
    """Error carrying a stable machine-readable ``code``.

    Codes used across the package: ``DIMENSION_MISMATCH``,
    ``FORM_NOT_HOMOGENEOUS``, ``INVALID_FORM``, ``INVALID_POINT``,
    ``NOT_NORMALIZED``, ``EMPTY_TANGENT``, ``PRECONDITION_NOT_FONC``,
    ``UNSUPPORTED_DIMENSION``, ``EMPTY_INPUT``, ``INVALID_CONFIG``.
    """

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


# Codes the CLI maps to exit status 3 rather than 2.
UNSUPPORTED_CODES = frozenset({"UNSUPPORTED_DIMENSION", "EMPTY_TANGENT"})
