"""
HTTP search adapter - fetch result lists from a remote engine

Wire contract: ``GET <base_url>?q=<query>&n=<limit>`` answers 200 with a JSON
array of ``{"location": ..., "title": ..., "snippet": ...}`` objects.
"""
import json
import asyncio
import logging
from typing import Any, List, Optional

import aiohttp

from config import settings
from exceptions import EngineResponseError, EngineTransportError
from models import SearchHit
from search import SearchEngine

logger = logging.getLogger(__name__)


def parse_hits(payload: Any, limit: int, engine: str, query_text: Optional[str] = None) -> List[SearchHit]:
    """
    Convert a decoded response body into ranked hits

    Args:
        payload: Decoded JSON body
        limit: Maximum number of hits kept
        engine: Engine name recorded on every hit

    Returns:
        Hits ranked 1..k in response order
    """
    if not isinstance(payload, list):
        raise EngineResponseError("Engine response is not a JSON array", query_text)

    hits = []
    for position, item in enumerate(payload[:limit], start=1):
        if not isinstance(item, dict):
            raise EngineResponseError(f"Result {position} is not an object", query_text)
        location = item.get("location")
        title = item.get("title") or ""
        snippet = item.get("snippet") or ""
        if not isinstance(location, str) or not location:
            raise EngineResponseError(f"Result {position} has no location", query_text)
        if not isinstance(title, str) or not isinstance(snippet, str):
            raise EngineResponseError(f"Result {position} has non-text title or snippet", query_text)
        hits.append(SearchHit(location=location, title=title, snippet=snippet, engine=engine, rank=position))
    return hits


class HttpAdapterEngine(SearchEngine):
    """Remote engine speaking the generic JSON contract"""

    name = "http"

    def __init__(
        self,
        base_url: str,
        timeout: float = None,
        attempts: int = None,
        backoff: float = None,
    ):
        """
        Initialize the adapter

        Args:
            base_url: Search endpoint
            timeout: Per-request timeout in seconds
            attempts: Requests tried before giving up
            backoff: First retry delay in seconds, doubled after every failure
        """
        self.base_url = base_url
        self.timeout = timeout if timeout is not None else settings.HTTP_TIMEOUT
        self.attempts = attempts if attempts is not None else settings.HTTP_ATTEMPTS
        self.backoff = backoff if backoff is not None else settings.HTTP_BACKOFF

    async def search(self, query_text: str, limit: int) -> List[SearchHit]:
        reason = "no attempt made"
        for attempt in range(self.attempts):
            if attempt:
                delay = self.backoff * 2 ** (attempt - 1)
                logger.warning(f"Retrying '{query_text}' in {delay:.2f}s ({reason})")
                await asyncio.sleep(delay)
            try:
                async with aiohttp.ClientSession(
                    timeout=aiohttp.ClientTimeout(total=self.timeout)
                ) as session:
                    async with session.get(
                        self.base_url, params={"q": query_text, "n": str(limit)}
                    ) as response:
                        if response.status != 200:
                            reason = f"HTTP {response.status}"
                            continue
                        body = await response.text()
            except (aiohttp.ClientError, asyncio.TimeoutError) as e:
                reason = str(e) or type(e).__name__
                continue

            try:
                payload = json.loads(body)
            except ValueError as e:
                raise EngineResponseError(f"Engine returned invalid JSON: {str(e)}", query_text)
            hits = parse_hits(payload, limit, self.name, query_text)
            logger.debug(f"'{query_text}': {len(hits)} hits from {self.base_url}")
            return hits

        logger.error(f"Giving up on '{query_text}' after {self.attempts} attempts: {reason}")
        raise EngineTransportError(query_text, reason)
