import logging
from typing import List

import numpy as np

from app.api.router import ExperimentRouter, run_case
from app.api.schemas.experiment_schemas import CaseResult, ExperimentConfig
from app.core.errors import PreconditionError
from app.services.sobolev_grid import (
    CHART_CHECKS,
    CHART_SAMPLES,
    GridDomain,
    GridFunction,
    approx_identity_with_boundary,
    chart_cover,
    containment_violations,
    mollify,
    partition_of_unity,
    positive_dominant_w0,
    pushin_operator,
    sobolev_norm,
)
from app.services.span_lattice import mollifier_scheme

CONVERGENCE_INDICES = (2, 4, 8, 16, 32)
EXACT_TOL = 1e-10


def lp_distance(domain: GridDomain, difference: np.ndarray, p: float) -> float:
    return sobolev_norm(GridFunction(domain, difference), 0, p)


def strictly_decreasing(values: list) -> bool:
    return all(later < earlier for earlier, later in zip(values, values[1:]))


def smooth_samples(domain: GridDomain, rng: np.random.Generator, count: int, periodic: bool) -> list:
    """Low-frequency trigonometric data with sup norm at most 5/4."""
    x = domain.nodes[:, 0]
    samples = []
    for _ in range(count):
        a1, a2 = rng.uniform(-1.0, 1.0), rng.uniform(-0.25, 0.25)
        phase = rng.uniform(0.0, 2.0 * np.pi, 2)
        if periodic:
            samples.append(a1 * np.sin(2 * np.pi * x + phase[0]) + a2 * np.sin(4 * np.pi * x + phase[1]))
        else:
            samples.append(a1 * np.cos(np.pi * x + phase[0]) + a2 * np.cos(2 * np.pi * x + phase[1]))
    return samples


class SobolevRoutes:
    def __init__(self):
        self.router = ExperimentRouter()

        @self.router.experiment("mollifier-rate")
        def mollifier_rate(config: ExperimentConfig) -> List[CaseResult]:
            domain = config.domain_or("torus", 1024).to_domain()
            if not domain.periodic:
                raise PreconditionError("the mollifier rate is measured on a torus")
            f = GridFunction.from_callable(domain, lambda x, *rest: np.sin(2 * np.pi * x))
            lipschitz = 2 * np.pi
            deltas = [float(d) for d in config.params.get("deltas", [0.1, 0.05, 0.025])]
            errors, results = {}, []
            for delta in deltas:
                parameters = {"delta": delta, "n": domain.n}

                def check():
                    smoothed = mollify(f, delta)
                    error = float(np.max(np.abs(smoothed.values - f.values)))
                    errors[delta] = error
                    bound = lipschitz * delta
                    passed = error <= bound
                    worst_node = int(np.argmax(np.abs(smoothed.values - f.values)))
                    witness = None if passed else {"delta": delta, "node": domain.nodes[worst_node].tolist()}
                    return CaseResult(case=f"lipschitz delta={delta:g}", parameters=parameters,
                                      measured=error, gap=error - bound, passed=passed, witness=witness,
                                      artifacts={f"mollified-delta{delta:g}": smoothed})

                results.append(run_case(f"lipschitz delta={delta:g}", parameters, check))
            if len(errors) >= 2:
                slope = float(np.polyfit(np.log(list(errors)), np.log(list(errors.values())), 1)[0])
                passed = slope >= 1.8
                witness = None if passed else {"deltas": list(errors), "errors": list(errors.values())}
                results.append(CaseResult(case="order", parameters={"deltas": list(errors)},
                                          measured=slope, gap=1.8 - slope, passed=passed, witness=witness))
            else:
                results.append(CaseResult(case="order", parameters={"deltas": deltas}, passed=False,
                                          witness={"reason": "fewer than two resolved scales"}))
            results.append(run_case("scheme convergence", {}, lambda: self.scheme_convergence(domain, config)))
            return results

        @self.router.experiment("boundary-chart-audit")
        def boundary_chart_audit(config: ExperimentConfig) -> List[CaseResult]:
            domain = config.domain_or("rectangle", 65).to_domain()
            samples = int(config.params.get("samples", CHART_SAMPLES))
            charts = chart_cover(domain)
            results = []
            for index, chart in enumerate(charts):
                case = f"chart {index}"
                parameters = {"center": chart.center.tolist(), "radius": chart.radius,
                              "kind": "interior" if chart.interior else chart.graph}

                def check():
                    offending = [containment_violations(chart, domain, n, samples, config.seed) for n in CHART_CHECKS]
                    count = sum(points.shape[0] for points in offending)
                    determinant = min(abs(np.linalg.det(chart.affine_parts(n)[0])) for n in CHART_CHECKS)
                    passed = bool(count == 0 and determinant > 0.0)
                    witness = None if passed else {"offending": [p.tolist() for p in offending if p.size][:1],
                                                     "determinant": determinant}
                    return CaseResult(case=case, parameters=parameters, measured=float(count),
                                      gap=determinant, passed=passed, witness=witness)

                results.append(run_case(case, parameters, check))

            def partition_check():
                pou = partition_of_unity(domain, charts, samples=samples, seed=config.seed)
                rng = np.random.default_rng(config.seed)
                points = domain.lows + rng.uniform(0.0, 1.0, (samples, domain.dim)) * domain.extent
                weights = pou.weights(points)
                gap = float(np.max(np.abs(weights.sum(axis=0) - 1.0)))
                passed = gap <= 1e-12 and float(weights.min()) >= 0.0
                worst = int(np.argmax(np.abs(weights.sum(axis=0) - 1.0) - np.minimum(weights.min(axis=0), 0.0)))
                return CaseResult(case="partition of unity", parameters={"charts": len(charts)},
                                  measured=float(weights.min()), gap=gap, passed=passed,
                                  witness=None if passed else points[worst].tolist())

            results.append(run_case("partition of unity", {"charts": len(charts)}, partition_check))
            return results

        @self.router.experiment("pushin-audit")
        def pushin_audit(config: ExperimentConfig) -> List[CaseResult]:
            domain = config.domain_or("interval", 1025).to_domain()
            rng = np.random.default_rng(config.seed)
            samples = [rng.standard_normal(domain.size) for _ in range(int(config.params.get("samples", 20)))]
            results = []
            for n in config.params.get("indices", [2, 4, 8, 16]):
                operator = pushin_operator(domain, int(n))
                outside = ~operator.support_mask
                leak = max(float(np.max(np.abs(operator.matrix @ f)[outside], initial=0.0)) for f in samples)
                results.append(CaseResult(case=f"support n={n}", parameters={"n": n}, measured=leak,
                                          passed=leak == 0.0,
                                          witness=None if leak == 0.0 else {"n": n, "leak": leak}))
                lowest = float(operator.matrix.min()) if operator.matrix.nnz else 0.0
                witness = None
                if lowest < 0.0:
                    entries = operator.matrix.tocoo()
                    entry = int(np.argmin(entries.data))
                    witness = {"n": n, "entry": [int(entries.row[entry]), int(entries.col[entry])], "value": lowest}
                results.append(CaseResult(case=f"positivity n={n}", parameters={"n": n}, measured=lowest,
                                          passed=lowest >= 0.0, witness=witness))
            results.append(run_case("boundary convergence", {"indices": list(CONVERGENCE_INDICES)},
                                    lambda: self.boundary_convergence(domain, config)))
            return results

        @self.router.experiment("prop35-demo")
        def dominant_demo(config: ExperimentConfig) -> List[CaseResult]:
            domain = config.domain_or("interval", 129).to_domain()
            if domain.kind != "interval":
                raise PreconditionError(f"positive dominants are built on an interval, not a {domain.kind}")
            rng = np.random.default_rng(config.seed)
            results = []
            for k in config.params.get("orders", [1, 2]):
                k = int(k)
                parameters = {"k": k, "p": config.order.p, "n": domain.n}

                def check():
                    lowest, edge, witness, artifacts = np.inf, 0.0, None, {}
                    for _ in range(int(config.params.get("samples", 20))):
                        values = rng.standard_normal(domain.size)
                        values[:k] = 0.0
                        values[-k:] = 0.0
                        f = GridFunction(domain, values)
                        dominant = positive_dominant_w0(f, k, config.order.p)
                        g = dominant.values
                        if not artifacts:
                            artifacts = {f"f-k{k}": f, f"g-k{k}": dominant}
                        margin = float(min(np.min(g), np.min(g - values)))
                        edge = max(edge, float(np.max(np.abs(np.concatenate([g[:k], g[-k:]])))))
                        if margin < lowest:
                            lowest, witness = margin, values.tolist()
                    passed = lowest >= -EXACT_TOL and edge <= EXACT_TOL
                    return CaseResult(case=f"dominant k={k}", parameters=parameters, measured=lowest,
                                      gap=edge, passed=passed, witness=None if passed else witness,
                                      artifacts=artifacts)

                results.append(run_case(f"dominant k={k}", parameters, check))
            return results

    @staticmethod
    def scheme_convergence(domain: GridDomain, config: ExperimentConfig) -> CaseResult:
        """||J R_n f - f||_p along the mollifier scheme for smooth periodic data."""
        scheme = mollifier_scheme(domain, n_min=CONVERGENCE_INDICES[0], n_max=CONVERGENCE_INDICES[-1])
        rng = np.random.default_rng(config.seed)
        worst_final, monotone, witness = 0.0, True, None
        for f in smooth_samples(domain, rng, 10, periodic=True):
            history = [lp_distance(domain, scheme.embedding @ (scheme.operator(n) @ f) - f, config.order.p)
                       for n in CONVERGENCE_INDICES]
            logging.debug(f"mollifier scheme errors {history}")
            if not strictly_decreasing(history) or history[-1] > worst_final:
                witness = {"errors": history}
            monotone = monotone and strictly_decreasing(history)
            worst_final = max(worst_final, history[-1])
        passed = monotone and worst_final <= 1e-2
        return CaseResult(case="scheme convergence", parameters={"indices": list(CONVERGENCE_INDICES)},
                          measured=worst_final, passed=passed, witness=None if passed else witness)

    @staticmethod
    def boundary_convergence(domain: GridDomain, config: ExperimentConfig) -> CaseResult:
        """||R_n f - f||_p strictly decreasing for the boundary construction."""
        rng = np.random.default_rng(config.seed)
        operators = [approx_identity_with_boundary(domain, n) for n in CONVERGENCE_INDICES]
        worst_final, witness = 0.0, None
        for f in smooth_samples(domain, rng, 10, periodic=False):
            history = [lp_distance(domain, op.matrix @ f - f, config.order.p) for op in operators]
            if not strictly_decreasing(history):
                witness = {"errors": history}
            worst_final = max(worst_final, history[-1])
        return CaseResult(case="boundary convergence", parameters={"indices": list(CONVERGENCE_INDICES)},
                          measured=worst_final, passed=witness is None, witness=witness)
