"""HTTP layer over an annotation project, plus static hosting for the UI."""

import csv
import io
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import (AnnotationProject, UnknownAnnotatorError, UnknownCommentError,
               ZeroOverlapError, EXPORT_STRATEGIES)

STATIC_DIR = Path(__file__).parent / "static"


class LabelIn(BaseModel):
    comment_id: str
    annotator_id: str
    label: Literal["hate", "not_hate"]
    language: Literal["english", "hindi", "hinglish"]


def create_app(project: AnnotationProject) -> FastAPI:
    app = FastAPI(title="annotation service")

    @app.exception_handler(UnknownAnnotatorError)
    async def _unknown_annotator(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/api/tasks/next")
    def tasks_next(annotator: str = Query(...)):
        task = project.next_task(annotator)
        if task is None:
            return Response(status_code=204)
        return task.as_dict()

    @app.post("/api/labels")
    def post_label(body: LabelIn):
        try:
            labeled_count, revision = project.submit(
                body.comment_id, body.annotator_id, body.label, body.language)
        except UnknownCommentError as e:
            raise HTTPException(status_code=404, detail=str(e))
        return {"labeled_count": labeled_count, "revision": revision}

    @app.get("/api/agreement")
    def agreement(a: str = Query(...), b: str = Query(...)):
        try:
            report = project.agreement(a, b)
        except ZeroOverlapError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return report.as_dict()

    @app.get("/api/export")
    def export(strategy: str = Query(...)):
        if strategy not in EXPORT_STRATEGIES:
            raise HTTPException(
                status_code=400,
                detail=f"invalid strategy {strategy!r}; expected one of {EXPORT_STRATEGIES}")
        result = project.export_labeled(strategy)
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["id", "platform", "text", "language", "label"])
        for c in result.dataset.comments:
            writer.writerow([c.id, c.platform, c.raw_text, c.language, c.gold_label])
        return Response(content=buf.getvalue(), media_type="text/csv",
                        headers={"X-Excluded-Count": str(result.excluded)})

    @app.get("/api/stats")
    def stats():
        return project.stats()

    if STATIC_DIR.is_dir():
        app.mount("/", StaticFiles(directory=STATIC_DIR, html=True), name="ui")
    return app


def serve(project_path, host: str = "127.0.0.1", port: int = 8000, roster=None):
    """Run the service; blocks until interrupted."""
    import uvicorn
    project = AnnotationProject(project_path, roster=roster)
    uvicorn.run(create_app(project), host=host, port=port, log_level="warning")
