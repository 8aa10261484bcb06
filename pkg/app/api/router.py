import logging
from typing import Callable, Dict, List

from app.api.schemas.experiment_schemas import CaseResult, ExperimentConfig
from app.core.errors import LabError, UsageError

Handler = Callable[[ExperimentConfig], List[CaseResult]]


class ExperimentRouter:
    """Registry of experiment handlers keyed by experiment id."""

    def __init__(self):
        self.routes: Dict[str, Handler] = {}

    def experiment(self, name: str):
        def decorator(handler: Handler) -> Handler:
            self.routes[name] = handler
            return handler
        return decorator

    def include_router(self, router: "ExperimentRouter"):
        for name, handler in router.routes.items():
            if name in self.routes:
                raise ValueError(f"experiment {name} registered twice")
            self.routes[name] = handler

    def dispatch(self, config: ExperimentConfig) -> List[CaseResult]:
        handler = self.routes.get(config.experiment)
        if handler is None:
            raise UsageError(f"no handler for experiment {config.experiment}",
                             fields={"experiment": config.experiment})
        try:
            return handler(config)
        except UsageError:
            raise
        except LabError as e:
            logging.error(f"Experiment {config.experiment} stopped: {e}")
            return [CaseResult(case="setup", passed=False, witness=e.to_witness())]


def run_case(case: str, parameters: dict, check: Callable[[], CaseResult]) -> CaseResult:
    """Runs one case; a LabError becomes a FAIL result carrying the error as witness."""
    try:
        return check()
    except LabError as e:
        logging.error(f"Case {case} failed: {e}")
        return CaseResult(case=case, parameters=parameters, passed=False, witness=e.to_witness())
