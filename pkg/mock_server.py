"""
Mock search engine - FastAPI app answering the HTTP adapter contract from a local index
"""
import logging

from fastapi import FastAPI, HTTPException, Query, status

from config import settings
from lexicon import Lexicon
from search import LocalIndex, rank_local

logger = logging.getLogger(__name__)


def create_app(index: LocalIndex, lexicon: Lexicon) -> FastAPI:
    """
    Build the mock engine application

    Args:
        index: Corpus served by the engine
        lexicon: Lexicon used to lemmatize incoming queries

    Returns:
        FastAPI app with /search and /health routes
    """
    app = FastAPI(
        title="Mock Search Engine",
        description="Local corpus search speaking the generic JSON result contract",
        version="1.0.0",
    )

    @app.get("/health", tags=["Health"])
    async def health_check():
        """Index size and status"""
        return {"status": "healthy", "documents": len(index), "lemmas": len(index.postings)}

    @app.get("/search", tags=["Search"])
    async def search(
        q: str = Query(..., description="Query text"),
        n: int = Query(10, description="Maximum number of results"),
    ):
        """Ranked results as a JSON array of {location, title, snippet}"""
        if n < 1:
            raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="n must be ≥ 1")

        hits = rank_local(lexicon.lemmatize_text(q), index, n)
        logger.info(f"Mock search '{q}': {len(hits)} results")
        return [{"location": h.location, "title": h.title, "snippet": h.snippet} for h in hits]

    return app


def serve(index: LocalIndex, lexicon: Lexicon, host: str = None, port: int = None) -> None:
    """Run the mock engine with uvicorn until interrupted"""
    import uvicorn

    host = host or settings.MOCK_HOST
    port = port or settings.MOCK_PORT
    logger.info(f"Serving {len(index)} documents on http://{host}:{port}/search")
    uvicorn.run(create_app(index, lexicon), host=host, port=port, log_level=settings.LOG_LEVEL.lower())
