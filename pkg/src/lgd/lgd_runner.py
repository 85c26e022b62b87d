"""
Run many independent simulated missions, optionally in parallel.
"""
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .lgd_exception import LgdValueError
from .lgd_logging import lgd_logger
from .lgd_mission import Mission
from .lgd_paramspec import Configuration, ParameterTable
from .lgd_simkernel import DEFAULT_DT, DEFAULT_DURATION_CAP, FlightTrace, Injection, run_mission
from .progress import LgdNoProgress, LgdProgress


@dataclass(frozen=True)
class MissionJob:
    """Everything one mission run needs.  Seeds are fixed before the job is queued."""
    index: int
    config: Configuration
    mission: Mission
    seed: int
    table: ParameterTable
    injection: Injection | None = None
    dt: float = DEFAULT_DT
    duration_cap: float = DEFAULT_DURATION_CAP


def fly(job: MissionJob) -> FlightTrace:
    return run_mission(job.config, job.mission, injection=job.injection, seed=job.seed,
                       dt=job.dt, duration_cap=job.duration_cap, table=job.table)


class LgdMissionPool:
    """
    Execute a list of MissionJob with a task function and return the task results
    ordered by job index.

    With one job slot everything runs in the calling process.  Otherwise a process
    pool with `jobs` workers is used.  Since every job carries its own seed the
    results are identical either way.

    Example:
        pool = LgdMissionPool(jobs=4)
        verdicts = pool.run(job_list, task=fly_and_classify)
    """

    def __init__(self, jobs: int = 1, progress: LgdProgress | None = None):
        if jobs < 1:
            raise LgdValueError(f"jobs must be at least 1, got {jobs}")
        self.jobs = jobs
        self.progress = progress or LgdNoProgress()

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}(jobs={self.jobs})>"

    def run(self, jobs: Sequence[MissionJob], task: Callable[[MissionJob], Any] = fly,
            label: str = "mission", describe: Callable[[Any], Any] | None = None) -> list[Any]:
        """
        Args:
            jobs: the missions to fly.
            task: a module level callable (it must pickle) taking a MissionJob.
            label: used in progress messages.
            describe: turns a task result into the progress `result` (the result itself when None).

        Returns:
            Task results in ascending job index order.
        """
        total = len(jobs)
        describe = describe or (lambda r: r)
        results: dict[int, Any] = {}
        if total == 0:
            return []

        if self.jobs == 1 or total == 1:
            for n, job in enumerate(jobs, start=1):
                results[job.index] = task(job)
                self.progress.result_msg(n, total, msg=f"{label} {job.index}", result=describe(results[job.index]))
        else:
            lgd_logger.debug("Running %d %s jobs on %d processes", total, label, self.jobs)
            with ProcessPoolExecutor(max_workers=self.jobs) as executor:
                futures = {executor.submit(task, job): job.index for job in jobs}
                for n, future in enumerate(as_completed(futures), start=1):
                    index = futures[future]
                    results[index] = future.result()
                    self.progress.result_msg(n, total, msg=f"{label} {index}", result=describe(results[index]))

        return [results[index] for index in sorted(results)]
