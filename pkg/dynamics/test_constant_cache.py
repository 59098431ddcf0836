"""
Unit tests for the fitted-constant cache: cache hits, database hits,
fresh fits and storage failures.
"""
import json
import os
import tempfile
from unittest.mock import Mock, patch

from django.core.cache import cache
from django.db import DatabaseError
from django.test import TestCase

from dynamics.models import FittedConstant
from dynamics.services.constant_cache import ConstantCacheService

KEY = {'polynomial': '1,-1,-1,-1,1', 'character': '1,0,0,0', 'seed': 3, 'samples': 24}


class ConstantCacheTests(TestCase):
    """Tests for the cache -> database -> fit lookup order"""

    def setUp(self):
        cache.clear()

    def tearDown(self):
        cache.clear()

    def test_fits_once_and_stores(self):
        """Test a miss fits, stores a row and fills the cache"""
        fit = Mock(return_value=1.75)
        value = ConstantCacheService.get_or_fit('ca', KEY, fit)
        self.assertEqual(value, 1.75)
        fit.assert_called_once()
        row = FittedConstant.objects.get(kind='ca', polynomial=KEY['polynomial'])
        self.assertEqual(row.value, 1.75)
        self.assertEqual(row.as_key()['a'], '1,0,0,0')
        cache_key = ConstantCacheService.cache_key('ca', KEY['polynomial'], KEY['character'], 3, 24)
        self.assertEqual(cache.get(cache_key), 1.75)

    def test_cache_hit_skips_fit(self):
        """Test a cached value is returned without fitting"""
        cache_key = ConstantCacheService.cache_key('ca', KEY['polynomial'], KEY['character'], 3, 24)
        cache.set(cache_key, 2.5, ConstantCacheService.CACHE_TIMEOUT)
        fit = Mock(return_value=9.0)
        self.assertEqual(ConstantCacheService.get_or_fit('ca', KEY, fit), 2.5)
        fit.assert_not_called()

    def test_database_hit_refills_cache(self):
        """Test a stored row is used when the cache is empty"""
        FittedConstant.objects.create(kind='ca', polynomial=KEY['polynomial'], character=KEY['character'],
                                      seed=3, samples=24, value=3.25)
        fit = Mock(return_value=9.0)
        self.assertEqual(ConstantCacheService.get_or_fit('ca', KEY, fit), 3.25)
        fit.assert_not_called()
        cache_key = ConstantCacheService.cache_key('ca', KEY['polynomial'], KEY['character'], 3, 24)
        self.assertEqual(cache.get(cache_key), 3.25)

    def test_seed_and_samples_are_part_of_the_key(self):
        """Test a different seed fits a separate constant"""
        ConstantCacheService.get_or_fit('ca', KEY, lambda: 1.0)
        other = dict(KEY, seed=4)
        self.assertEqual(ConstantCacheService.get_or_fit('ca', other, lambda: 2.0), 2.0)
        self.assertEqual(FittedConstant.objects.count(), 2)

    def test_cache_get_failure(self):
        """Test cache.get failures fall back to the database"""
        FittedConstant.objects.create(kind='c2', character='1,1', seed=0, samples=10, value=0.9)
        with patch('django.core.cache.cache.get', side_effect=Exception("Cache unavailable")):
            value = ConstantCacheService.get_or_fit('c2', {'character': '1,1', 'samples': 10}, lambda: 5.0)
        self.assertEqual(value, 0.9)

    def test_cache_set_failure(self):
        """Test cache.set failures still return the fitted value"""
        with patch('django.core.cache.cache.set', side_effect=Exception("Cache unavailable")):
            value = ConstantCacheService.get_or_fit('c2', {'character': '2,3', 'samples': 10}, lambda: 0.4)
        self.assertEqual(value, 0.4)

    def test_database_failure(self):
        """Test lookup and store failures fall back to fitting"""
        with patch('dynamics.models.FittedConstant.objects.filter', side_effect=DatabaseError("Connection lost")):
            with patch('dynamics.models.FittedConstant.objects.create', side_effect=DatabaseError("Connection lost")):
                value = ConstantCacheService.get_or_fit('A_s', {'character': '1,4', 'samples': 4}, lambda: 0.25)
        self.assertEqual(value, 0.25)
        self.assertEqual(FittedConstant.objects.count(), 0)


class SidecarExportTests(TestCase):
    """Tests for the JSON sidecar of fitted constants"""

    def test_export(self):
        """Test every stored constant is written with its key"""
        FittedConstant.objects.create(kind='ca', polynomial='1,-1,-1,-1,1', character='1,0,0,0',
                                      seed=0, samples=24, value=1.5)
        FittedConstant.objects.create(kind='c2', character='1,1', seed=0, samples=120, value=0.8)
        path = os.path.join(tempfile.mkdtemp(), 'constants.json')
        self.assertEqual(ConstantCacheService.export_sidecar(path), 2)
        with open(path) as fh:
            data = json.load(fh)
        self.assertEqual({c['kind'] for c in data['constants']}, {'ca', 'c2'})
        self.assertIn({'kind': 'c2', 'f': '', 'a': '1,1', 'seed': 0, 'samples': 120, 'value': 0.8},
                      data['constants'])

    def test_export_database_failure(self):
        """Test an unreadable table exports nothing"""
        path = os.path.join(tempfile.mkdtemp(), 'constants.json')
        with patch('dynamics.models.FittedConstant.objects.all', side_effect=DatabaseError("Connection lost")):
            self.assertEqual(ConstantCacheService.export_sidecar(path), 0)
        self.assertFalse(os.path.exists(path))

    def test_clear_cache_failure(self):
        """Test clear_cache swallows cache errors"""
        with patch('django.core.cache.cache.clear', side_effect=Exception("Cache unavailable")):
            ConstantCacheService.clear_cache()
