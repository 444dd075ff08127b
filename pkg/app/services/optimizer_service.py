"""
Operator-allocation search and parameter calibration.

Every candidate is simulated with the same seed, so candidates differ only
in structure and not in their random numbers.
"""
import logging
import math
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import (
    BudgetExhaustedError, InfeasibleBoundsError, InfeasibleTotalError, LineSimError,
    UnknownTargetError,
)
from app.schemas.line import LineModel, PoolKind
from app.schemas.report import METRIC_UNITS, SummaryReport
from app.schemas.scenario import (
    AllocationResult, CalibrationResult, CalibrationStep, CalibrationTarget,
    CandidateEvaluation, FreeParameter, Objective, SetOperatorCount, TargetResidual,
)
from app.services.line_service import apply_parameters, get_parameter
from app.services.replication_service import replication_service
from app.services.scenario_service import scenario_service

logger = logging.getLogger(__name__)

MAX_FREE_PARAMETERS = 8
GRID_POINTS = 5
BRACKET_TOLERANCE = 1e-3

Allocation = Tuple[int, ...]


def pool_minimums(model: LineModel) -> Dict[str, int]:
    """Smallest capacity each operator pool needs to keep the model valid."""
    minimums = {p.id: 0 for p in model.pools if p.kind == PoolKind.OPERATOR}
    for station in model.stations:
        if station.operator_pool in minimums:
            minimums[station.operator_pool] = max(minimums[station.operator_pool],
                                                  station.operators_required)
    for route in model.routes:
        for branch in route.branches:
            if branch.handler_pool in minimums:
                minimums[branch.handler_pool] = max(minimums[branch.handler_pool], branch.handlers)
    return minimums


def _allocations(minimums: Sequence[int], total: int, exact: bool) -> Iterator[Allocation]:
    """Integer allocations >= minimums, in lexicographic order."""
    if len(minimums) == 1:
        low = minimums[0]
        if exact:
            if total >= low:
                yield (total,)
            return
        for value in range(low, total + 1):
            yield (value,)
        return
    rest = sum(minimums[1:])
    for value in range(minimums[0], total - rest + 1):
        for tail in _allocations(minimums[1:], total - value, exact):
            yield (value,) + tail


def allocation_space_size(minimums: Sequence[int], total: int, exact: bool) -> int:
    free = total - sum(minimums)
    if free < 0:
        return 0
    k = len(minimums)
    return math.comb(free + k - 1, k - 1) if exact else math.comb(free + k, k)


class OptimizerService:

    # operator allocation

    def optimize_operators(self, model: LineModel, total: int, objective: Objective,
                           replications: Optional[int] = None, seed: Optional[int] = None,
                           pools: Optional[Sequence[str]] = None,
                           workers: Optional[int] = None) -> AllocationResult:
        """
        Search operator counts of ``pools`` (every operator pool by default).

        MaxThroughput places exactly ``total`` operators; MinCostPerUnit may
        leave some unassigned, which removes them from the payroll.
        """
        objective = Objective(objective)
        minimums_by_pool = pool_minimums(model)
        names = list(pools) if pools else list(minimums_by_pool)
        for name in names:
            if name not in minimums_by_pool:
                raise UnknownTargetError(f"Unknown operator pool {name}")
        minimums = [minimums_by_pool[n] for n in names]
        if total < sum(minimums):
            raise InfeasibleTotalError(
                f"Total {total} is below the {sum(minimums)} operators the pools require"
            )
        exact = objective == Objective.MAX_THROUGHPUT

        cache: Dict[Allocation, Tuple[float, SummaryReport]] = {}
        trace: List[CandidateEvaluation] = []

        def evaluate(allocation: Allocation) -> float:
            if allocation not in cache:
                candidate = self._with_allocation(model, names, allocation)
                summary = replication_service.simulate(candidate, replications, seed, workers=workers)
                score = self._score(summary, objective)
                cache[allocation] = (score, summary)
                trace.append(CandidateEvaluation(
                    allocation=dict(zip(names, allocation)),
                    outputs=summary.metrics["average_outputs"].mean,
                    cost_per_unit=summary.metrics["cost_per_unit"].mean,
                    objective_value=None if math.isinf(score) else self._report_value(score, objective),
                ))
                logger.debug("Allocation %s -> %s", dict(zip(names, allocation)), score)
            return cache[allocation][0]

        size = allocation_space_size(minimums, total, exact)
        if size <= settings.OPTIMIZER_EXHAUSTIVE_LIMIT:
            mode = "exhaustive"
            best = None
            for allocation in _allocations(minimums, total, exact):
                if best is None or evaluate(allocation) < evaluate(best):
                    best = allocation
        else:
            mode = "greedy"
            logger.warning("Allocation space has %d candidates; using greedy reallocation", size)
            best = self._greedy(minimums, total, exact, evaluate)

        logger.info("Best allocation (%s, %s): %s", objective.value, mode, dict(zip(names, best)))
        return AllocationResult(
            objective=objective,
            total=total,
            mode=mode,
            allocation=dict(zip(names, best)),
            summary=cache[best][1],
            trace=trace,
        )

    def _greedy(self, minimums: Sequence[int], total: int, exact: bool, evaluate) -> Allocation:
        current = list(minimums)
        remaining = total - sum(minimums)
        index = 0
        while remaining > 0:
            current[index % len(current)] += 1
            remaining -= 1
            index += 1
        best = tuple(current)
        best_score = evaluate(best)
        while True:
            moves: List[Allocation] = []
            for i in range(len(best)):
                for j in range(len(best)):
                    if i != j and best[i] > minimums[i]:
                        move = list(best)
                        move[i] -= 1
                        move[j] += 1
                        moves.append(tuple(move))
                if not exact:
                    if best[i] > minimums[i]:
                        moves.append(best[:i] + (best[i] - 1,) + best[i + 1:])
                    if sum(best) < total:
                        moves.append(best[:i] + (best[i] + 1,) + best[i + 1:])
            improved = None
            for move in sorted(set(moves)):
                score = evaluate(move)
                if score < best_score:
                    improved, best_score = move, score
            if improved is None:
                return best
            best = improved

    def _with_allocation(self, model: LineModel, names: Sequence[str], allocation: Allocation) -> LineModel:
        for name, count in zip(names, allocation):
            if model.pool(name).capacity != count:
                model = scenario_service.apply_intervention(
                    model, SetOperatorCount(pool=name, count=count, adjust_headcount=True)
                )
        return model

    @staticmethod
    def _score(summary: SummaryReport, objective: Objective) -> float:
        """Lower is better."""
        if objective == Objective.MAX_THROUGHPUT:
            return -(summary.metrics["average_outputs"].mean or 0.0)
        cost = summary.metrics["cost_per_unit"].mean
        return math.inf if cost is None else cost

    @staticmethod
    def _report_value(score: float, objective: Objective) -> float:
        return -score if objective == Objective.MAX_THROUGHPUT else score

    # calibration

    def calibrate(self, template: LineModel, targets: Sequence[CalibrationTarget],
                  free: Sequence[FreeParameter], budget: int, seed: Optional[int] = None,
                  replications: Optional[int] = None, starts: Optional[int] = None) -> CalibrationResult:
        """
        Fit free parameters so the report metrics hit their targets.

        Minimizes the sum of squared relative residuals with a bracketed grid
        line search per coordinate. Equal objective values resolve to the
        larger parameter value. Raises BudgetExhaustedError carrying the best
        point found when some target is still outside its tolerance.
        """
        seed = settings.DEFAULT_SEED if seed is None else seed
        replications = settings.CALIBRATION_REPLICATIONS if replications is None else replications
        starts = settings.CALIBRATION_STARTS if starts is None else starts
        self._check_inputs(template, targets, free, budget)

        lows = np.array([p.lo for p in free], dtype=float)
        highs = np.array([p.hi for p in free], dtype=float)
        cache: Dict[Tuple[float, ...], Tuple[float, Optional[SummaryReport]]] = {}
        trace: List[CalibrationStep] = []
        evaluations = 0

        def evaluate(point: Sequence[float]) -> float:
            nonlocal evaluations
            key = tuple(self._snap(free, point))
            if key not in cache:
                if evaluations >= budget:
                    return math.inf
                evaluations += 1
                cache[key] = self._objective(template, targets, free, key, replications, seed)
            return cache[key][0]

        start_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xCA1,)))
        best_point: Optional[Tuple[float, ...]] = None
        best_value = math.inf
        for start in range(starts):
            if start == 0:
                point = (lows + highs) / 2.0
            else:
                point = lows + start_rng.random(len(free)) * (highs - lows)
            point = np.array(self._snap(free, point))
            value = evaluate(point)
            half = (highs - lows) / 2.0
            sweep = 0
            while evaluations < budget and np.any(half > BRACKET_TOLERANCE * (highs - lows)):
                for k in range(len(free)):
                    a = max(lows[k], point[k] - half[k])
                    b = min(highs[k], point[k] + half[k])
                    for x in np.linspace(a, b, GRID_POINTS):
                        trial = point.copy()
                        trial[k] = x
                        trial = np.array(self._snap(free, trial))
                        score = evaluate(trial)
                        # ties go to the upper end of the bracket
                        if score < value or (score == value and trial[k] > point[k]):
                            point, value = trial, score
                half = half / 2.0
                sweep += 1
                trace.append(CalibrationStep(
                    start=start, sweep=sweep,
                    parameters={p.path: float(v) for p, v in zip(free, point)},
                    objective=value,
                ))
            logger.info("Calibration start %d: objective %.6g after %d sweep(s)", start, value, sweep)
            if value < best_value:
                best_point, best_value = tuple(point), value

        if best_point is None:
            best_point = tuple(self._snap(free, (lows + highs) / 2.0))
        key = tuple(self._snap(free, best_point))
        summary = cache[key][1] if key in cache else None
        residuals = self._residuals(targets, summary)
        result = CalibrationResult(
            parameters={p.path: (int(v) if p.integer else float(v)) for p, v in zip(free, key)},
            objective=best_value,
            evaluations=evaluations,
            residuals=residuals,
            trace=trace,
        )
        if not result.converged:
            missed = [r.metric for r in residuals if not r.within_tolerance]
            logger.warning("Calibration left %s outside tolerance", ", ".join(missed))
            raise BudgetExhaustedError(
                f"Targets not met after {evaluations} evaluation(s): {', '.join(missed)}", best=result
            )
        return result

    def _check_inputs(self, template: LineModel, targets: Sequence[CalibrationTarget],
                      free: Sequence[FreeParameter], budget: int) -> None:
        if not free:
            raise InfeasibleBoundsError("No free parameters to calibrate")
        if len(free) > MAX_FREE_PARAMETERS:
            raise InfeasibleBoundsError(f"At most {MAX_FREE_PARAMETERS} free parameters are supported")
        if budget < 1:
            raise InfeasibleBoundsError("Budget must allow at least one evaluation")
        for p in free:
            if not (math.isfinite(p.lo) and math.isfinite(p.hi)) or p.lo > p.hi:
                raise InfeasibleBoundsError(f"Bounds of {p.path} are not a finite interval")
            if p.integer and math.ceil(p.lo) > math.floor(p.hi):
                raise InfeasibleBoundsError(f"Bounds of {p.path} contain no integer")
            get_parameter(template, p.path)
        for target in targets:
            if target.metric not in METRIC_UNITS:
                raise UnknownTargetError(f"Unknown report metric {target.metric}")

    @staticmethod
    def _snap(free: Sequence[FreeParameter], point: Sequence[float]) -> List[float]:
        snapped = []
        for p, v in zip(free, point):
            v = min(max(float(v), p.lo), p.hi)
            snapped.append(float(min(max(round(v), math.ceil(p.lo)), math.floor(p.hi))) if p.integer else v)
        return snapped

    def _objective(self, template: LineModel, targets: Sequence[CalibrationTarget],
                   free: Sequence[FreeParameter], point: Tuple[float, ...],
                   replications: int, seed: int) -> Tuple[float, Optional[SummaryReport]]:
        values: Mapping[str, float] = {
            p.path: (int(v) if p.integer else v) for p, v in zip(free, point)
        }
        try:
            model = apply_parameters(template, values)
            summary = replication_service.simulate(model, replications, seed)
        except LineSimError as e:
            logger.debug("Point %s rejected: %s", values, e)
            return math.inf, None
        total = 0.0
        for target in targets:
            achieved = summary.metrics[target.metric].mean
            if achieved is None:
                return math.inf, summary
            total += ((achieved - target.target) / target.target) ** 2
        logger.debug("Point %s -> %.6g", values, total)
        return total, summary

    @staticmethod
    def _residuals(targets: Sequence[CalibrationTarget], summary: Optional[SummaryReport]) -> List[TargetResidual]:
        residuals = []
        for target in targets:
            achieved = summary.metrics[target.metric].mean if summary else None
            residual = None if achieved is None else achieved - target.target
            residuals.append(TargetResidual(
                metric=target.metric,
                target=target.target,
                achieved=achieved,
                residual=residual,
                within_tolerance=residual is not None and abs(residual) <= target.tolerance,
            ))
        return residuals


optimizer_service = OptimizerService()
