import pytest

from app.api.router import ExperimentRouter, run_case
from app.api.schemas.experiment_schemas import CaseResult, ExperimentConfig
from app.core.errors import PreconditionError, UsageError


@pytest.fixture
def router():
    router = ExperimentRouter()

    @router.experiment("sup-construct")
    def passing(config):
        return [CaseResult(case="ok", passed=True, measured=config.seed)]

    @router.experiment("renorm-audit")
    def failing(config):
        raise PreconditionError("renorm needs an interval", witness={"kind": "torus"})

    return router


def test_dispatch_calls_registered_handler(router):
    (result,) = router.dispatch(ExperimentConfig(experiment="sup-construct", seed=3))

    assert result.case == "ok"
    assert result.passed
    assert result.measured == 3.0


def test_dispatch_turns_lab_error_into_setup_row(router):
    # Act
    (result,) = router.dispatch(ExperimentConfig(experiment="renorm-audit"))

    # Assert
    assert result.case == "setup"
    assert not result.passed
    assert result.witness == {"error": "PreconditionError", "detail": "renorm needs an interval",
                              "witness": {"kind": "torus"}}


def test_dispatch_unknown_experiment(router):
    with pytest.raises(UsageError) as error:
        router.dispatch(ExperimentConfig(experiment="pushin-audit"))

    assert error.value.fields == {"experiment": "pushin-audit"}


def test_dispatch_reraises_usage_errors():
    router = ExperimentRouter()

    @router.experiment("sup-construct")
    def misuse(config):
        raise UsageError("bad params", fields={"params.samples": "must be positive"})

    with pytest.raises(UsageError):
        router.dispatch(ExperimentConfig(experiment="sup-construct"))


def test_include_router_merges_routes(router):
    combined = ExperimentRouter()

    combined.include_router(router)

    assert set(combined.routes) == {"sup-construct", "renorm-audit"}


def test_include_router_rejects_duplicates(router):
    with pytest.raises(ValueError):
        router.include_router(router)


def test_run_case_returns_check_result():
    result = run_case("case", {}, lambda: CaseResult(case="case", passed=True))

    assert result.passed


def test_run_case_turns_lab_error_into_fail():
    def check():
        raise PreconditionError("grid too coarse", witness={"n": 32})

    result = run_case("boundary convergence", {"n": 32}, check)

    assert not result.passed
    assert result.parameters == {"n": 32}
    assert result.witness["witness"] == {"n": 32}
