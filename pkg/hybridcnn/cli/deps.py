"""Shared service instances for the command handlers."""

from functools import lru_cache

from hybridcnn.services.pipeline_service import PipelineService


@lru_cache()
def get_pipeline_service() -> PipelineService:
    """
    Get the pipeline service instance (singleton).

    Returns:
        PipelineService instance
    """
    return PipelineService()
