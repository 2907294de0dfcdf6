"""Tests for the contention cache."""

import pytest

from nru_offload.cache import ContentionCache


@pytest.fixture
def cache():
    """Create a small cache."""
    return ContentionCache(max_size=2)


class TestContentionCache:
    """Tests for the ContentionCache class."""

    def test_invalid_size(self):
        """Test that a zero size is rejected."""
        with pytest.raises(ValueError):
            ContentionCache(max_size=0)

    def test_get_not_found(self, cache):
        """Test get method when key not found."""
        assert cache.get((1, 2)) is None
        assert cache.get_stats()["misses"] == 1

    def test_set_and_get(self, cache):
        """Test set and get methods."""
        cache.set((1, 2), "point")
        assert cache.get((1, 2)) == "point"
        assert len(cache) == 1
        assert cache.get_stats()["hits"] == 1

    def test_eviction_least_recently_used(self, cache):
        """Test that the least recently used entry is evicted."""
        cache.set("a", 1)
        cache.set("b", 2)
        cache.get("a")
        cache.set("c", 3)

        assert cache.get("b") is None
        assert cache.get("a") == 1
        assert cache.get("c") == 3
        assert len(cache) == 2

    def test_overwrite_does_not_evict(self, cache):
        """Test that replacing an existing key keeps the other entries."""
        cache.set("a", 1)
        cache.set("b", 2)
        cache.set("a", 10)
        assert cache.get("a") == 10
        assert cache.get("b") == 2

    def test_clear(self, cache):
        """Test clear resets entries and statistics."""
        cache.set("a", 1)
        cache.get("a")
        cache.clear()
        stats = cache.get_stats()
        assert stats == {"entries": 0, "hits": 0, "misses": 0, "max_size": 2}
