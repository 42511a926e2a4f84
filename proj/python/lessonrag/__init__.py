"""Retrieval-grounded lesson plan generation and rubric scoring."""

import json

from . import _core
from ._core import (
    LessonRagError,
    VectorStore,
    classify_band,
    cohen_kappa,
    embed,
    ingest,
    percent_agreement,
    score_percentage,
    spearman,
    wilcoxon,
)

__all__ = [
    "LessonRagError",
    "MockService",
    "VectorStore",
    "chunk_text",
    "classify_band",
    "cohen_kappa",
    "default_rubric",
    "embed",
    "ingest",
    "parse_plan",
    "percent_agreement",
    "score_percentage",
    "spearman",
    "validate_plan",
    "wilcoxon",
]


def chunk_text(corpus_text, subject, chunk_size=1200, overlap=200):
    return json.loads(_core.chunk_text(corpus_text, subject, chunk_size, overlap))


def parse_plan(markup):
    return json.loads(_core.parse_plan(markup))


def validate_plan(markup):
    return json.loads(_core.validate_plan(markup))


def default_rubric():
    return json.loads(_core.default_rubric())


class MockService:
    """Generation service backed by the offline embedder and template generator."""

    def __init__(self, stores, dim=256, min_sim=0.0):
        self._svc = _core.MockService(str(stores), dim, min_sim)

    def generate(self, request):
        body = request if isinstance(request, str) else json.dumps(request)
        status, payload = self._svc.generate(body)
        return status, json.loads(payload)

    def subjects(self):
        return json.loads(self._svc.subjects())
