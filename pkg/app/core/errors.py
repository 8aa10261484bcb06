from typing import Any, Optional


class LabError(Exception):
    """Base error for every failure raised by the lab.

    ``exit_code`` plays the role a status code plays for an HTTP error: the CLI
    maps it straight onto the process exit status.
    """

    exit_code = 1

    def __init__(self, detail: str, witness: Optional[Any] = None):
        super().__init__(detail)
        self.detail = detail
        self.witness = witness

    def to_witness(self) -> dict:
        payload = {"error": type(self).__name__, "detail": self.detail}
        if self.witness is not None:
            payload["witness"] = self.witness
        return payload


class DimensionMismatchError(LabError):
    pass


class PreconditionError(LabError):
    pass


class DegenerateConeError(PreconditionError):
    pass


class ConvergenceError(LabError):
    def __init__(self, detail: str, best_value: Optional[float] = None,
                 diagnostics: Optional[list] = None, witness: Optional[Any] = None):
        super().__init__(detail, witness=witness)
        self.best_value = best_value
        self.diagnostics = diagnostics or []

    def to_witness(self) -> dict:
        payload = super().to_witness()
        payload["best_value"] = self.best_value
        payload["diagnostics"] = self.diagnostics[-8:]
        return payload


class ChartContainmentError(LabError):
    def __init__(self, detail: str, offending: Optional[list] = None):
        super().__init__(detail, witness=offending)
        self.offending = offending or []


class ChartCoverError(LabError):
    pass


class SingularSystemError(LabError):
    pass


class PositivityError(LabError):
    pass


class LinearProgramError(LabError):
    pass


class ReportFormatError(LabError):
    def __init__(self, detail: str, path: str, line: int):
        super().__init__(f"{path}:{line}: {detail}", witness={"path": path, "line": line})
        self.path = path
        self.line = line


class UsageError(LabError):
    exit_code = 2

    def __init__(self, detail: str, fields: Optional[dict] = None):
        super().__init__(detail, witness=fields)
        self.fields = fields or {}
