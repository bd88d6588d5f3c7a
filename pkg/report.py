"""
Run reports - the presentation of a RunState for the console or as JSON
"""
from typing import List, Optional

from pydantic import BaseModel, Field

from models import RunState


class GenerationRow(BaseModel):
    generation: int
    fitness: float
    sigma_fitness: float
    best_query: str


class ResourceRow(BaseModel):
    location: str
    title: str
    w: float
    p_bar: float
    r: int
    s: float


class RunReport(BaseModel):
    """Everything shown to the user about a run"""
    seed: int
    stop_reason: str
    error_text: Optional[str] = None
    generations: List[GenerationRow] = Field(default_factory=list)
    top_resources: List[ResourceRow] = Field(default_factory=list)
    duration_seconds: Optional[float] = Field(None, description="Wall-clock time of this invocation")


def build_report(state: RunState, top: int = 10, duration: Optional[float] = None) -> RunReport:
    """
    Summarize a run

    Args:
        state: Run state
        top: Number of best resources listed
        duration: Wall-clock seconds, when the run was executed now

    Returns:
        RunReport with one row per history entry
    """
    return RunReport(
        seed=state.config.rng_seed,
        stop_reason=state.stop_reason.value,
        error_text=state.error_text,
        generations=[
            GenerationRow(
                generation=row.generation_number,
                fitness=row.fitness,
                sigma_fitness=row.sigma_fitness,
                best_query=row.best_query_text,
            )
            for row in state.history
        ],
        top_resources=[
            ResourceRow(
                location=r.location,
                title=r.title,
                w=r.fitness_attrs.w,
                p_bar=r.fitness_attrs.p_bar,
                r=r.fitness_attrs.r,
                s=r.fitness_attrs.s,
            )
            for r in state.all_resources[: max(top, 0)]
        ],
        duration_seconds=duration,
    )


def render_report(report: RunReport) -> str:
    """Plain-text rendering of a report"""
    lines = [
        "=" * 60,
        f"Query evolution run (seed {report.seed})",
        "=" * 60,
        f"Stop reason: {report.stop_reason}",
    ]
    if report.error_text:
        lines.append(f"Error: {report.error_text}")
    if report.duration_seconds is not None:
        lines.append(f"Duration: {report.duration_seconds:.2f}s")

    lines += ["", f"{'gen':>4}  {'fitness':>10}  {'sigma':>10}  best query"]
    for row in report.generations:
        lines.append(f"{row.generation:>4}  {row.fitness:>10.6f}  {row.sigma_fitness:>10.6f}  {row.best_query}")

    lines += ["", f"Top {len(report.top_resources)} resources:"]
    lines.append(f"{'w':>8}  {'p_bar':>6}  {'r':>3}  {'s':>6}  location | title")
    for row in report.top_resources:
        lines.append(f"{row.w:>8.4f}  {row.p_bar:>6.2f}  {row.r:>3}  {row.s:>6.4f}  {row.location} | {row.title}")
    return "\n".join(lines)
