from datetime import datetime, timedelta

from django.core.cache import cache
from django.test import SimpleTestCase

from torus_trace.result_cache import CacheEntry, ResultCache, cached, result_cache


class ResultCacheTests(SimpleTestCase):

    def setUp(self):
        self.cache = ResultCache()
        self.cache.clear()

    def tearDown(self):
        self.cache.clear()

    def test_key_is_stable_and_namespaced(self):
        key = ResultCache.make_key('mc_calibration', {'b': 1, 'a': 2})
        self.assertEqual(key, ResultCache.make_key('mc_calibration', {'a': 2, 'b': 1}))
        self.assertTrue(key.startswith('mc_calibration:'))
        self.assertEqual(len(key.split(':')[1]), 16)

    def test_memory_then_django_level(self):
        self.cache.set('mc_calibration', {'seed': 1}, 0.25)
        self.assertEqual(self.cache.get('mc_calibration', {'seed': 1}), 0.25)
        self.assertEqual(self.cache.get_stats()['memory_hits'], 1)

        fresh = ResultCache()
        self.assertEqual(fresh.get('mc_calibration', {'seed': 1}), 0.25)
        self.assertEqual(fresh.get_stats()['django_hits'], 1)

    def test_miss_returns_default(self):
        self.assertIsNone(self.cache.get('mc_calibration', {'seed': 2}))
        self.assertEqual(self.cache.get_stats()['misses'], 1)

    def test_delete(self):
        self.cache.set('mc_calibration', 'key', 1.0)
        self.cache.delete('mc_calibration', 'key')
        self.assertIsNone(self.cache.get('mc_calibration', 'key'))
        self.assertIsNone(cache.get(ResultCache.make_key('mc_calibration', 'key')))

    def test_lru_eviction(self):
        small = ResultCache(max_memory_size=400)
        small.set('mc_calibration', 'first', 'x' * 150)
        small.set('mc_calibration', 'second', 'y' * 150)
        small.set('mc_calibration', 'third', 'z' * 150)
        self.assertNotIn(ResultCache.make_key('mc_calibration', 'first'), small.memory)
        self.assertGreaterEqual(small.stats.evictions, 1)
        small.clear()

    def test_entries_without_ttl_never_expire(self):
        old = datetime.now() - timedelta(days=3650)
        self.assertFalse(CacheEntry(data=1, created_at=old, accessed_at=old, ttl=None).is_expired())
        self.assertTrue(CacheEntry(data=1, created_at=old, accessed_at=old, ttl=60).is_expired())


class CachedDecoratorTests(SimpleTestCase):

    def setUp(self):
        result_cache.clear()

    def tearDown(self):
        result_cache.clear()

    def test_calls_once_per_key(self):
        calls = []

        @cached('mc_calibration', key_func=lambda x: {'x': x})
        def square(x):
            calls.append(x)
            return x * x

        self.assertEqual(square(3), 9)
        self.assertEqual(square(3), 9)
        self.assertEqual(square(4), 16)
        self.assertEqual(calls, [3, 4])

    def test_none_is_not_stored(self):
        calls = []

        @cached('mc_calibration')
        def nothing():
            calls.append(1)

        nothing()
        nothing()
        self.assertEqual(len(calls), 2)
