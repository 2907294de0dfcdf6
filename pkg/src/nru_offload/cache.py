"""In-memory cache of contention fixed points."""

import logging
import threading
from typing import Any, Dict, Hashable, Optional

logger = logging.getLogger(__name__)


class ContentionCache:
    """Thread-safe, size-bounded cache with least-recently-used eviction.

    Keys are hashable tuples such as ``(n_nru, n_wigig, contention_config)``.
    """

    def __init__(self, max_size: int = 50_000):
        """Initialize the cache.

        Args:
            max_size: Maximum number of entries to keep
        """
        if max_size < 1:
            raise ValueError("max_size must be >= 1")
        self.max_size = max_size
        self.cache: Dict[Hashable, Any] = {}
        self.access_times: Dict[Hashable, int] = {}
        self.hits = 0
        self.misses = 0
        self._clock = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self.cache)

    def _touch(self, key: Hashable) -> None:
        self._clock += 1
        self.access_times[key] = self._clock

    def get(self, key: Hashable) -> Optional[Any]:
        """Get a value from the cache, or None when absent."""
        with self._lock:
            if key not in self.cache:
                self.misses += 1
                return None
            self.hits += 1
            self._touch(key)
            return self.cache[key]

    def set(self, key: Hashable, value: Any) -> None:
        """Store a value, evicting the least recently used entry when full."""
        with self._lock:
            if key not in self.cache and len(self.cache) >= self.max_size:
                oldest_key = min(self.access_times, key=self.access_times.__getitem__)
                del self.cache[oldest_key]
                del self.access_times[oldest_key]
                logger.debug(f"Evicted contention point {oldest_key!r}")
            self.cache[key] = value
            self._touch(key)

    def clear(self) -> None:
        """Clear all cache entries and statistics."""
        with self._lock:
            self.cache.clear()
            self.access_times.clear()
            self.hits = 0
            self.misses = 0

    def get_stats(self) -> Dict[str, int]:
        with self._lock:
            return {
                "entries": len(self.cache),
                "hits": self.hits,
                "misses": self.misses,
                "max_size": self.max_size,
            }
