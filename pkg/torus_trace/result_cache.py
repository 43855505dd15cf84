"""
Two-level result cache for expensive numerical results.

Level 1 is an in-process dict with LRU eviction, level 2 the Django cache
framework (locmem by default, anything CACHES configures otherwise). Keys are
``namespace:sha256(json)[:16]``.
"""
import hashlib
import json
import logging
import pickle
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from functools import wraps
from typing import Any, Callable, Dict, Optional

from django.core.cache import cache

logger = logging.getLogger(__name__)

# ttl None means the entry never expires
NAMESPACES: Dict[str, Dict[str, Any]] = {
    'mc_calibration': {'ttl': None},
}

_MISSING = object()


@dataclass
class CacheEntry:
    data: Any
    created_at: datetime
    accessed_at: datetime
    ttl: Optional[int] = None
    size_bytes: int = 0
    access_count: int = 0

    def is_expired(self) -> bool:
        if self.ttl is None:
            return False
        return datetime.now() > self.created_at + timedelta(seconds=self.ttl)

    def touch(self):
        self.accessed_at = datetime.now()
        self.access_count += 1


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    memory_hits: int = 0
    django_hits: int = 0
    evictions: int = 0

    def as_dict(self) -> Dict[str, Any]:
        total = self.hits + self.misses
        return {
            'hits': self.hits,
            'misses': self.misses,
            'memory_hits': self.memory_hits,
            'django_hits': self.django_hits,
            'evictions': self.evictions,
            'hit_rate_percent': round(100.0 * self.hits / total, 2) if total else 0.0,
        }


class ResultCache:
    """Memory dict in front of django.core.cache"""

    def __init__(self, max_memory_size: int = 64 * 1024 * 1024):
        self.memory: Dict[str, CacheEntry] = {}
        self.stats = CacheStats()
        self.max_memory_size = max_memory_size
        self.current_memory_size = 0
        self._lock = threading.RLock()

    @staticmethod
    def make_key(namespace: str, key_data: Any) -> str:
        key_string = key_data if isinstance(key_data, str) else json.dumps(key_data, sort_keys=True, default=str)
        return f"{namespace}:{hashlib.sha256(key_string.encode()).hexdigest()[:16]}"

    @staticmethod
    def _size(data: Any) -> int:
        try:
            return len(pickle.dumps(data))
        except (pickle.PicklingError, TypeError, AttributeError):
            return len(repr(data).encode('utf-8'))

    def _evict(self, required: int):
        with self._lock:
            for key, entry in sorted(self.memory.items(), key=lambda item: item[1].accessed_at):
                if self.current_memory_size + required <= self.max_memory_size:
                    break
                self.current_memory_size -= entry.size_bytes
                del self.memory[key]
                self.stats.evictions += 1
                logger.debug(f"Evicted cache entry: {key}, size: {entry.size_bytes}")

    def _remember(self, key: str, data: Any, ttl: Optional[int]) -> bool:
        size = self._size(data)
        if size > self.max_memory_size:
            logger.warning(f"Result too large for memory cache: {size} bytes", extra={'cache_key': key})
            return False
        with self._lock:
            if key in self.memory:
                self.current_memory_size -= self.memory[key].size_bytes
            self._evict(size)
            now = datetime.now()
            self.memory[key] = CacheEntry(data=data, created_at=now, accessed_at=now, ttl=ttl, size_bytes=size)
            self.current_memory_size += size
        return True

    def get(self, namespace: str, key_data: Any, default: Any = None) -> Any:
        key = self.make_key(namespace, key_data)

        with self._lock:
            entry = self.memory.get(key)
            if entry is not None:
                if not entry.is_expired():
                    entry.touch()
                    self.stats.hits += 1
                    self.stats.memory_hits += 1
                    logger.debug(f"Memory cache hit: {key}")
                    return entry.data
                self.current_memory_size -= entry.size_bytes
                del self.memory[key]

        try:
            data = cache.get(key, _MISSING)
        except Exception as e:
            logger.warning(f"Django cache error: {e}", extra={'cache_key': key})
            data = _MISSING
        if data is not _MISSING:
            self._remember(key, data, NAMESPACES.get(namespace, {}).get('ttl'))
            self.stats.hits += 1
            self.stats.django_hits += 1
            logger.debug(f"Django cache hit: {key}")
            return data

        self.stats.misses += 1
        logger.debug(f"Cache miss: {key}")
        return default

    def set(self, namespace: str, key_data: Any, data: Any, ttl: Optional[int] = _MISSING) -> bool:
        key = self.make_key(namespace, key_data)
        if ttl is _MISSING:
            ttl = NAMESPACES.get(namespace, {}).get('ttl', 3600)
        stored = self._remember(key, data, ttl)
        try:
            cache.set(key, data, ttl)
        except Exception as e:
            logger.error(f"Django cache set error: {e}", extra={'cache_key': key})
            stored = False
        return stored

    def delete(self, namespace: str, key_data: Any):
        key = self.make_key(namespace, key_data)
        with self._lock:
            entry = self.memory.pop(key, None)
            if entry is not None:
                self.current_memory_size -= entry.size_bytes
        cache.delete(key)

    def clear(self):
        with self._lock:
            self.memory.clear()
            self.current_memory_size = 0
            self.stats = CacheStats()
        cache.clear()

    def get_stats(self) -> Dict[str, Any]:
        return {
            **self.stats.as_dict(),
            'memory_cache_size': self.current_memory_size,
            'memory_cache_entries': len(self.memory),
        }


result_cache = ResultCache()


def cached(namespace: str, ttl: Optional[int] = _MISSING, key_func: Optional[Callable] = None):
    """Cache a function's result under ``namespace``; None results are not stored"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            if key_func:
                key_data = key_func(*args, **kwargs)
            else:
                key_data = {'func': func.__name__, 'args': repr(args), 'kwargs': repr(sorted(kwargs.items()))}

            hit = result_cache.get(namespace, key_data, _MISSING)
            if hit is not _MISSING:
                return hit
            result = func(*args, **kwargs)
            if result is not None:
                result_cache.set(namespace, key_data, result, ttl)
            return result
        return wrapper
    return decorator
